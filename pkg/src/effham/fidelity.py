"""Fidelity scores for a candidate effective Hamiltonian.

Every score is built from trial survival amplitudes
``f_i = <psi_i| exp(-i H_test t_i) |psi_i>``: a candidate reproducing the full
Hamiltonian on the trial subspace leaves each trial state unchanged and scores 1.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .pauli import HamiltonianSum
from .statevector import check_normalized, exact_evolve, trotter_evolve


@dataclass(frozen=True)
class Method:
    """Evolution backend: ``exact`` or ``trotter`` with ``steps`` slices."""

    kind: str = "exact"
    steps: int | None = None

    def __post_init__(self):
        if self.kind not in ("exact", "trotter"):
            raise ValueError(f"unknown method {self.kind!r}")
        if self.kind == "trotter" and (self.steps is None or self.steps < 1):
            raise ValueError("trotter method needs steps >= 1")

    @classmethod
    def trotter(cls, steps: int) -> "Method":
        return cls("trotter", steps)

    @classmethod
    def trotter_tau(cls, t: float, tau: float) -> "Method":
        """Trotter slicing with step close to ``tau`` (``n = round(t / tau)``, at least 1)."""
        return cls("trotter", max(1, round(abs(t) / tau)))


EXACT = Method()


@dataclass(frozen=True, eq=False)
class Trial:
    initial_state: np.ndarray
    time: float

    def __post_init__(self):
        state = np.asarray(self.initial_state, dtype=complex)
        check_normalized(state)
        if not np.isfinite(self.time):
            raise ValueError("trial time must be finite")
        object.__setattr__(self, "initial_state", state)


class TrialSet(tuple):
    """Nonempty tuple of :class:`Trial`."""

    def __new__(cls, trials: Iterable[Trial]):
        trials = tuple(trials)
        if not trials:
            raise ValueError("a trial set needs at least one trial")
        dims = {tr.initial_state.shape[0] for tr in trials}
        if len(dims) != 1:
            raise ValueError("all trial states must share one dimension")
        return super().__new__(cls, trials)

    @classmethod
    def shared_time(cls, states: Sequence[np.ndarray], t: float) -> "TrialSet":
        return cls(Trial(s, t) for s in states)

    @property
    def dim(self) -> int:
        return self[0].initial_state.shape[0]


def _as_method(method) -> Method:
    if method is None:
        return EXACT
    if isinstance(method, Method):
        return method
    if isinstance(method, str):
        return Method(method)
    raise TypeError(f"cannot interpret {method!r} as an evolution method")


def _evolve_block(h_test: HamiltonianSum, states: np.ndarray, t: float, method: Method) -> np.ndarray:
    if method.kind == "exact":
        return exact_evolve(h_test, states, t)
    return trotter_evolve(h_test, states, t, method.steps)


def trial_amplitudes(h_test: HamiltonianSum, trials: TrialSet, method=None) -> np.ndarray:
    """Survival amplitudes ``f_i`` for every trial, in trial order.

    Trials sharing an evolution time are evolved together as columns.
    """
    method = _as_method(method)
    if trials.dim != h_test.dim:
        raise ValueError(f"dimension mismatch: trials {trials.dim} vs Hamiltonian {h_test.dim}")
    out = np.empty(len(trials), dtype=complex)
    if h_test.is_empty():
        out[:] = 1.0
        return out
    by_time: dict[float, list[int]] = {}
    for i, tr in enumerate(trials):
        by_time.setdefault(tr.time, []).append(i)
    for t, idx in by_time.items():
        block = np.stack([trials[i].initial_state for i in idx], axis=1)
        evolved = _evolve_block(h_test, block, t, method)
        out[idx] = np.einsum("ij,ij->j", block.conj(), evolved)
    return out


def trial_fidelity(h_test: HamiltonianSum, trial: Trial, method=None) -> complex:
    return complex(trial_amplitudes(h_test, TrialSet([trial]), method)[0])


def overall_fidelity(h_test: HamiltonianSum, trials: TrialSet, method=None) -> float:
    """Modulus of the mean survival amplitude."""
    return float(min(1.0, abs(np.mean(trial_amplitudes(h_test, trials, method)))))


def average_fidelity(h_test: HamiltonianSum, trials: TrialSet, method=None) -> float:
    """Mean squared modulus of the survival amplitudes; insensitive to per-trial phases."""
    f = trial_amplitudes(h_test, trials, method)
    return float(min(1.0, np.mean(np.abs(f) ** 2)))


def composite_fidelity(h_test: HamiltonianSum, trials: TrialSet, method=None) -> float:
    """Overall fidelity read off an ancilla-indexed composite state.

    The composite state ``(1/sqrt(N_t)) sum_i |i> (x) |psi_i>`` is stored as
    a direct sum of blocks, and the controlled evolution
    ``sum_i |i><i| (x) U(t_i)`` acts block by block.
    """
    method = _as_method(method)
    n_t = len(trials)
    composite = [tr.initial_state / np.sqrt(n_t) for tr in trials]
    evolved = [
        block if h_test.is_empty() else _evolve_block(h_test, block, tr.time, method)
        for block, tr in zip(composite, trials)
    ]
    amp = sum(np.vdot(a, b) for a, b in zip(composite, evolved))
    return float(min(1.0, abs(amp)))
