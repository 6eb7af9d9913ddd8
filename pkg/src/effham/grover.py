"""Amplitude-amplified search over candidate effective Hamiltonians.

The search runs on three registers: the candidate label, a K-point phase
register and the (composite) system state. For each candidate the
phase-estimation step followed by the threshold flip and its inverse acts on
the initial phase/system state as multiplication by a real scalar ``a_x``,
with the remainder of the amplitude rejected on post-selection. So the whole
circuit reduces to an N-vector of label amplitudes, one scalar per candidate,
and a running total of rejected probability.

Angles follow ``F(x) = cos(theta_x / 2)``; candidates with
``|theta_x| < theta_th`` are marked.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

# Grid coordinates closer than this to an integer are treated as on-grid.
GRID_SNAP = 1e-9


def theta_of_fidelity(F: float, tol: float = 1e-9) -> float:
    """Rotation angle ``2 arccos(F)`` in ``[0, pi]``."""
    if not -tol <= F <= 1 + tol:
        raise ValueError(f"fidelity {F!r} outside [0, 1]")
    return 2.0 * math.acos(min(1.0, max(0.0, F)))


def fidelity_of_theta(theta: float) -> float:
    return math.cos(theta / 2.0)


@dataclass(frozen=True)
class PhaseGrid:
    """``K`` phase points ``2 pi m / K`` for ``m = -K/2+1, ..., K/2``."""

    K: int

    def __post_init__(self):
        if self.K < 2 or self.K % 2:
            raise ValueError(f"K must be an even integer >= 2, got {self.K}")

    @property
    def spacing(self) -> float:
        return 2 * math.pi / self.K

    @property
    def m(self) -> np.ndarray:
        return np.arange(-self.K // 2 + 1, self.K // 2 + 1)

    @property
    def thetas(self) -> np.ndarray:
        return self.spacing * self.m

    def units(self, theta: float) -> float:
        """``theta`` measured in grid spacings."""
        return theta * self.K / (2 * math.pi)

    def wrap(self, m: int) -> int:
        """Map an integer grid index into ``(-K/2, K/2]``."""
        half = self.K // 2
        return (m + half - 1) % self.K - half + 1

    def index_of(self, m: int) -> int:
        return self.wrap(m) + self.K // 2 - 1

    def on_grid(self, theta: float) -> int | None:
        u = self.units(theta)
        r = round(u)
        return self.wrap(int(r)) if abs(u - r) <= GRID_SNAP else None


@dataclass(frozen=True, eq=False)
class PhaseDistribution:
    grid: PhaseGrid
    f: np.ndarray
    center: float

    @property
    def probabilities(self) -> np.ndarray:
        return np.abs(self.f) ** 2


def phase_distribution(theta_x: float, K: int) -> PhaseDistribution:
    """Phase-register amplitudes ``f_theta = (1/K) sum_k exp(i (theta_x - theta) k)``.

    Evaluated with the closed-form geometric sum
    ``exp(i d (K-1)/2) sin(K d / 2) / (K sin(d / 2))``; an on-grid ``theta_x``
    gives an exact delta.
    """
    grid = PhaseGrid(K)
    m0 = grid.on_grid(theta_x)
    if m0 is not None:
        f = np.zeros(K, dtype=complex)
        f[grid.index_of(m0)] = 1.0
        return PhaseDistribution(grid, f, theta_x)
    # offset in grid units; sin(pi * d) is computed from the small offset directly
    d = grid.units(theta_x) - grid.m
    delta = grid.spacing * d
    f = np.exp(0.5j * delta * (K - 1)) * np.sin(math.pi * d) / (K * np.sin(0.5 * delta))
    return PhaseDistribution(grid, f, theta_x)


def _flip_signs(grid: PhaseGrid, theta_th: float, thetas: np.ndarray) -> np.ndarray:
    """Signs of the threshold flip on grid points ``thetas`` (-1 strictly inside the window)."""
    u_th = grid.units(theta_th)
    inside = np.abs(thetas * grid.K / (2 * math.pi)) < u_th - GRID_SNAP
    return np.where(inside, -1.0, 1.0)


def flip_coefficient(theta_x: float, K: int, theta_th: float) -> float:
    """Post-selected amplitude ``a_x`` of the approximate fidelity-dependent flip.

    Average of the threshold-flip expectation over the two phase-register
    branches ``|A+> = sum f_theta |theta>`` and ``|A-> = sum f_theta^* |-theta>``
    (with ``|-pi> == |pi>``).
    """
    if not 0 < theta_th < math.pi:
        raise ValueError("theta_th must lie in (0, pi)")
    dist = phase_distribution(theta_x, K)
    grid = dist.grid
    p = dist.probabilities
    thetas = grid.thetas
    plus = np.sum(p * _flip_signs(grid, theta_th, thetas))
    # -theta for m = K/2 is -pi, identified with +pi
    minus_thetas = np.where(grid.m == grid.K // 2, thetas, -thetas)
    minus = np.sum(p * _flip_signs(grid, theta_th, minus_thetas))
    return float(np.clip(0.5 * (plus + minus), -1.0, 1.0))


def ideal_flip(theta_x: float, theta_th: float) -> int:
    """-1 for ``|theta_x| < theta_th``, +1 otherwise (boundary is unmarked)."""
    # values equal to theta_th up to rounding count as the boundary
    return -1 if abs(theta_x) < theta_th * (1 - 1e-12) else 1


def optimal_iterations(N: int, M: int) -> int:
    if M < 1:
        raise ValueError("no marked candidates")
    if M > N:
        raise ValueError("M cannot exceed N")
    return max(1, math.floor(math.pi / 4 * math.sqrt(N / M)))


# -- candidates and Grover iteration ------------------------------------------------


@dataclass(frozen=True, eq=False)
class CandidateSet:
    """Labelled candidates with optional Hamiltonians and fidelities.

    ``labels[x]`` identifies candidate ``x`` (0-based); for the Ising example
    labels are :class:`~effham.tfim.EffectiveParams`.
    """

    labels: tuple
    hamiltonians: tuple | None = None
    fidelities: np.ndarray | None = None

    def __post_init__(self):
        if not self.labels:
            raise ValueError("candidate set is empty")
        if self.hamiltonians is not None and len(self.hamiltonians) != len(self.labels):
            raise ValueError("one Hamiltonian per candidate required")
        if self.fidelities is not None:
            f = np.asarray(self.fidelities, dtype=float)
            if f.shape != (len(self.labels),):
                raise ValueError("one fidelity per candidate required")
            f.setflags(write=False)
            object.__setattr__(self, "fidelities", f)

    def __len__(self) -> int:
        return len(self.labels)

    @classmethod
    def from_fidelities(cls, fidelities: Sequence[float], labels: Sequence | None = None) -> "CandidateSet":
        labels = tuple(range(len(fidelities))) if labels is None else tuple(labels)
        return cls(labels, None, np.asarray(fidelities, dtype=float))

    @classmethod
    def from_thetas(cls, thetas: Sequence[float], labels: Sequence | None = None) -> "CandidateSet":
        return cls.from_fidelities([fidelity_of_theta(t) for t in thetas], labels)

    def with_fidelities(self, fidelities: Sequence[float]) -> "CandidateSet":
        return CandidateSet(self.labels, self.hamiltonians, np.asarray(fidelities, dtype=float))

    @property
    def thetas(self) -> np.ndarray:
        if self.fidelities is None:
            raise ValueError("candidate fidelities have not been computed")
        return np.array([theta_of_fidelity(f) for f in self.fidelities])


def score_candidates(candidates: CandidateSet, h_full, trials, method=None, workers: int = 1) -> CandidateSet:
    """Attach overall fidelities of ``h_full - H_eff(x)`` for every candidate."""
    from .fidelity import overall_fidelity

    if candidates.hamiltonians is None:
        raise ValueError("candidates carry no Hamiltonians to score")

    def score(h_eff):
        return overall_fidelity(h_full - h_eff, trials, method)

    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(workers) as pool:
            values = list(pool.map(score, candidates.hamiltonians))
    else:
        values = [score(h) for h in candidates.hamiltonians]
    return candidates.with_fidelities(values)


@dataclass(frozen=True, eq=False)
class GroverState:
    amplitudes: np.ndarray
    leaked_probability: float = 0.0

    @classmethod
    def uniform(cls, N: int) -> "GroverState":
        return cls(np.full(N, 1 / math.sqrt(N), dtype=complex), 0.0)

    @property
    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    @property
    def total(self) -> float:
        return float(np.sum(self.probabilities) + self.leaked_probability)


def grover_iterate(state: GroverState, flips: np.ndarray) -> GroverState:
    """One step ``alpha <- (1 - 2|X><X|) diag(flips) alpha``.

    Norm removed by ``|flip| < 1`` is moved into ``leaked_probability``.
    """
    flips = np.asarray(flips, dtype=float)
    if np.any(np.abs(flips) > 1 + 1e-12):
        raise ValueError("flip coefficients must lie in [-1, 1]")
    alpha = state.amplitudes
    beta = flips * alpha
    lost = float(np.sum(np.abs(alpha) ** 2) - np.sum(np.abs(beta) ** 2))
    N = len(beta)
    out = beta - (2.0 / N) * np.sum(beta)
    return GroverState(out, state.leaked_probability + lost)


def flip_vector(thetas: np.ndarray, theta_th: float, K: int, mode: str) -> np.ndarray:
    if mode == "ideal":
        return np.array([ideal_flip(t, theta_th) for t in thetas], dtype=float)
    if mode == "leaky":
        return np.array([flip_coefficient(t, K, theta_th) for t in thetas], dtype=float)
    raise ValueError(f"unknown search mode {mode!r}")


@dataclass
class SearchReport:
    labels: tuple
    fidelities: np.ndarray
    thetas: np.ndarray
    marked: np.ndarray
    flips: np.ndarray
    mode: str
    theta_th: float
    K: int
    marked_probability: list[float] = field(default_factory=list)
    leaked_probability: list[float] = field(default_factory=list)
    amplitudes: list[np.ndarray] = field(default_factory=list)
    near_threshold: list[int] = field(default_factory=list)

    @property
    def M(self) -> int:
        return int(np.sum(self.marked))

    @property
    def no_marked(self) -> bool:
        return self.M == 0

    @property
    def iterations(self) -> int:
        return len(self.amplitudes) - 1

    @property
    def final_probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes[-1]) ** 2

    @property
    def best(self) -> int:
        return int(np.argmax(self.final_probabilities))

    def summary(self) -> dict[str, Any]:
        best = self.best
        label = self.labels[best]
        return {
            "mode": self.mode,
            "N": len(self.labels),
            "M": self.M,
            "no_marked_items": self.no_marked,
            "iterations": self.iterations,
            "theta_th": self.theta_th,
            "fidelity_threshold": fidelity_of_theta(self.theta_th),
            "K": self.K,
            "best_index": best,
            "best_label": _label_repr(label),
            "best_fidelity": float(self.fidelities[best]),
            "best_probability": float(self.final_probabilities[best]),
            "final_marked_probability": self.marked_probability[-1],
            "final_leaked_probability": self.leaked_probability[-1],
            "near_threshold": list(self.near_threshold),
            "max_flip_error": float(np.max(np.abs(self.flips - np.where(self.marked, -1.0, 1.0)))),
        }


def _label_repr(label):
    if hasattr(label, "lam"):
        return {"lambda": label.lam, "kappa": label.kappa}
    return label


def marked_mask(thetas: np.ndarray, theta_th: float) -> np.ndarray:
    return np.array([ideal_flip(t, theta_th) < 0 for t in thetas])


def run_search(
    candidates: CandidateSet,
    theta_th: float,
    K: int = 5000,
    j_max: int | None = None,
    mode: str = "leaky",
) -> SearchReport:
    """Iterate from the uniform label state, recording marked and leaked probability.

    ``j_max`` defaults to :func:`optimal_iterations` (or 1 when nothing is marked).
    """
    thetas = candidates.thetas
    marked = marked_mask(thetas, theta_th)
    M = int(marked.sum())
    N = len(candidates)
    if j_max is None:
        j_max = optimal_iterations(N, M) if M else 1
    flips = flip_vector(thetas, theta_th, K, mode)
    grid = PhaseGrid(K)
    near = [x for x, t in enumerate(thetas) if abs(t - theta_th) < grid.spacing]
    report = SearchReport(
        labels=candidates.labels,
        fidelities=np.asarray(candidates.fidelities),
        thetas=thetas,
        marked=marked,
        flips=flips,
        mode=mode,
        theta_th=theta_th,
        K=K,
        near_threshold=near,
    )
    state = GroverState.uniform(N)
    for j in range(j_max + 1):
        if j:
            state = grover_iterate(state, flips)
        report.amplitudes.append(state.amplitudes)
        report.marked_probability.append(float(np.sum(state.probabilities[marked])))
        report.leaked_probability.append(state.leaked_probability)
    return report


def error_bound(candidates: CandidateSet, theta_th: float, K: int, j: int) -> float:
    """Telescoping bound on ``||ideal_j - leaky_j||`` after ``j`` iterations.

    Sums ``eps_i = ||(V_ideal - V) alpha^(i-1)||`` over the ideal trajectory,
    where ``V_ideal - V`` is diagonal with entries ``eta_x - a_x``.
    """
    if j < 1:
        raise ValueError("j must be >= 1")
    thetas = candidates.thetas
    eta = flip_vector(thetas, theta_th, K, "ideal")
    a = flip_vector(thetas, theta_th, K, "leaky")
    gap = np.abs(eta - a) ** 2
    state = GroverState.uniform(len(thetas))
    total = 0.0
    for _ in range(j):
        total += math.sqrt(float(np.sum(state.probabilities * gap)))
        state = grover_iterate(state, eta)
    return total


def choose_threshold(fidelities: Sequence[float], M: int = 1, K: int | None = None) -> float:
    """Angle threshold halfway between the M-th and (M+1)-th smallest candidate angles.

    With ``K`` given the threshold is snapped to the nearest phase-grid point
    lying strictly between those two angles, so the flip window edge sits on
    the grid. When the gap is narrower than the grid spacing no such point
    exists and the unsnapped midpoint is kept, so exactly ``M`` candidates are
    still marked.
    """
    thetas = np.sort([theta_of_fidelity(f) for f in fidelities])
    if not 1 <= M <= len(thetas):
        raise ValueError("M must lie between 1 and the number of candidates")
    if M == len(thetas):
        th = min(math.pi - 1e-9, thetas[-1] + (math.pi - thetas[-1]) / 2 + 1e-12)
    else:
        th = 0.5 * (thetas[M - 1] + thetas[M])
    if K is not None:
        grid = PhaseGrid(K)
        lo = thetas[M - 1]
        hi = thetas[M] if M < len(thetas) else math.pi
        snapped = grid.spacing * round(grid.units(th))
        if not lo < snapped < hi:
            # nearest grid points on either side of the midpoint
            below = grid.spacing * math.floor(grid.units(th))
            above = grid.spacing * math.ceil(grid.units(th))
            inside = [g for g in (below, above) if lo < g < hi]
            snapped = inside[0] if inside else th
        th = snapped
    return float(th)
