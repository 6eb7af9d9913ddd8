"""Variational real-time evolution and fidelity landscapes.

A parameterized circuit ``|Psi(theta)> = prod_k exp(-i theta_{p(k)} G_k) |psi_0>``
is pushed along the Schrodinger flow of ``H_test`` by solving the projected
equation of motion

    Re(A) theta_dot = Im(C),
    A_ij = <d_i Psi | d_j Psi>,   C_i = <d_i Psi | H_test | Psi>,

which minimises ``|| sum_j d_j Psi theta_dot_j + i H_test Psi ||`` over real
velocities. Derivative states come from a single forward sweep: after gate
``k`` the running derivative block is rotated with the state and column
``p(k)`` receives ``-i G_k |psi>``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .fidelity import Method, TrialSet, average_fidelity
from .pauli import HamiltonianSum, PauliString, apply, pauli_action
from .statevector import trotter_trajectory

log = logging.getLogger(__name__)

DEFAULT_REG = 1e-8
MAX_CONDITION = 1e13


class SingularSystemError(ArithmeticError):
    """Raised when the regularized metric is too ill-conditioned to solve."""

    def __init__(self, condition: float, step: int | None = None):
        self.condition = condition
        self.step = step
        where = "" if step is None else f" at step {step}"
        super().__init__(f"metric system singular{where} (condition number {condition:.3g})")


@dataclass(frozen=True)
class Gate:
    generator: PauliString
    param: int


@dataclass(frozen=True)
class AnsatzCircuit:
    gates: tuple[Gate, ...]
    n_params: int
    layout: str = "custom"

    def __post_init__(self):
        used = {g.param for g in self.gates}
        if self.n_params < 1:
            raise ValueError("ansatz needs at least one parameter")
        if used != set(range(self.n_params)):
            raise ValueError("every parameter index 0..n_params-1 must drive at least one gate")
        sizes = {g.generator.n_sites for g in self.gates}
        if len(sizes) != 1:
            raise ValueError("all generators must act on the same number of sites")

    @property
    def n_sites(self) -> int:
        return self.gates[0].generator.n_sites

    @classmethod
    def trotter_layers(cls, template: HamiltonianSum, layers: int = 3) -> "AnsatzCircuit":
        """``layers`` repetitions of one rotation per template term, each with its own parameter."""
        if template.is_empty():
            raise ValueError("template Hamiltonian has no terms")
        if layers < 1:
            raise ValueError("layers must be >= 1")
        gates = []
        for _ in range(layers):
            for term in template.terms:
                gates.append(Gate(term.string, len(gates)))
        return cls(tuple(gates), len(gates), f"trotter-form x{layers}")

    @classmethod
    def from_generators(cls, generators: Sequence[str]) -> "AnsatzCircuit":
        gates = tuple(Gate(PauliString(g), k) for k, g in enumerate(generators))
        return cls(gates, len(gates))


def _rotate(perm, phase, c, s, v):
    """``exp(-i theta G) v`` for a batch; ``c``/``s`` broadcast over trailing axes."""
    ph = phase.reshape((-1,) + (1,) * (v.ndim - 1))
    out = v[perm]
    out *= ph
    out *= -1j * s
    out += c * v
    return out


def _sweep(ansatz: AnsatzCircuit, thetas: np.ndarray, initial: np.ndarray, derivatives: bool = True):
    """Forward pass over a batch of trials.

    ``thetas`` has shape (n_params, T) and ``initial`` shape (dim, T). Returns
    the states (dim, T) and, if requested, derivatives (dim, T, n_params).
    """
    initial = np.asarray(initial, dtype=complex)
    if not derivatives:
        psi = initial.copy()
        for gate in ansatz.gates:
            perm, phase = pauli_action(gate.generator.axes)
            th = thetas[gate.param]
            psi = _rotate(perm, phase, np.cos(th), np.sin(th), psi)
        return psi, None
    # the state rides along as the last column of the derivative block
    P = ansatz.n_params
    W = np.zeros(initial.shape + (P + 1,), dtype=complex)
    W[:, :, P] = initial
    for gate in ansatz.gates:
        perm, phase = pauli_action(gate.generator.axes)
        th = thetas[gate.param]
        W = _rotate(perm, phase, np.cos(th)[:, None], np.sin(th)[:, None], W)
        W[:, :, gate.param] += -1j * (phase[:, None] * W[perm, :, P])
    return W[:, :, P], W[:, :, :P]


def _metric(D: np.ndarray, psi: np.ndarray, hpsi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Batched ``A`` (T, P, P) and ``C`` (T, P) from derivative block (dim, T, P)."""
    Dt = np.ascontiguousarray(D.transpose(1, 0, 2))
    Dh = Dt.conj().transpose(0, 2, 1)
    A = Dh @ Dt
    C = (Dh @ hpsi.T[:, :, None])[:, :, 0]
    return A, C


def _check_params(ansatz: AnsatzCircuit, theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if theta.shape[0] != ansatz.n_params:
        raise ValueError(f"expected {ansatz.n_params} parameters, got {theta.shape[0]}")
    return theta


def prepare_state(ansatz: AnsatzCircuit, theta: Sequence[float], initial: np.ndarray) -> np.ndarray:
    theta = _check_params(ansatz, theta)
    psi, _ = _sweep(ansatz, theta[:, None], np.asarray(initial, dtype=complex)[:, None], derivatives=False)
    return psi[:, 0]


def derivative_states(ansatz: AnsatzCircuit, theta, initial: np.ndarray) -> np.ndarray:
    """All ``d_k |Psi>`` as columns of a (dim, n_params) array."""
    theta = _check_params(ansatz, theta)
    _, D = _sweep(ansatz, theta[:, None], np.asarray(initial, dtype=complex)[:, None])
    return D[:, 0, :]


def derivative_state(ansatz: AnsatzCircuit, theta, k: int, initial: np.ndarray) -> np.ndarray:
    if not 0 <= k < ansatz.n_params:
        raise IndexError(f"parameter index {k} outside 0..{ansatz.n_params - 1}")
    return derivative_states(ansatz, theta, initial)[:, k]


def build_A(ansatz: AnsatzCircuit, theta, initial: np.ndarray) -> np.ndarray:
    D = derivative_states(ansatz, theta, initial)
    return D.conj().T @ D


def build_C(ansatz: AnsatzCircuit, theta, h_test: HamiltonianSum, initial: np.ndarray) -> np.ndarray:
    initial = np.asarray(initial, dtype=complex)
    if initial.shape[0] != h_test.dim:
        raise ValueError("dimension mismatch between state and Hamiltonian")
    theta = _check_params(ansatz, theta)
    psi, D = _sweep(ansatz, theta[:, None], initial[:, None])
    return D[:, 0, :].conj().T @ apply(h_test, psi[:, 0])


def solve_velocity(A: np.ndarray, C: np.ndarray, reg: float = DEFAULT_REG, step_index: int | None = None) -> np.ndarray:
    """Real velocities from ``(Re A + reg I) v = Im C``; accepts leading batch axes."""
    M = np.real(A) + reg * np.eye(A.shape[-1])
    w, V = np.linalg.eigh(M)
    lo, hi = w[..., 0], w[..., -1]
    cond = np.where(lo > 0, hi / np.where(lo > 0, lo, 1.0), np.inf)
    worst = float(np.max(cond))
    if not worst < MAX_CONDITION:
        raise SingularSystemError(worst, step_index)
    rhs = np.imag(C)[..., None]
    return (V @ ((np.swapaxes(V, -1, -2) @ rhs) / w[..., None]))[..., 0]


def step(theta, A, C, dt: float, reg: float = DEFAULT_REG) -> np.ndarray:
    """Euler update ``theta + dt * v`` with ``v`` from :func:`solve_velocity`."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    return np.asarray(theta, dtype=float) + dt * solve_velocity(np.asarray(A), np.asarray(C), reg)


@dataclass
class VariationalTrajectory:
    times: np.ndarray
    fidelities: np.ndarray  # (n_times, n_trials)
    thetas: np.ndarray | None  # (n_times, n_params, n_trials)
    dt: float

    @property
    def f_ave(self) -> np.ndarray:
        return self.fidelities.mean(axis=1)


INTEGRATORS = ("euler", "heun", "rk4")


def evolve_trajectory(
    ansatz: AnsatzCircuit,
    theta0,
    h_test: HamiltonianSum,
    trials: TrialSet,
    t_final: float,
    dt: float,
    reg: float = DEFAULT_REG,
    integrator: str = "heun",
    keep_thetas: bool = False,
    check_metric: bool = False,
) -> VariationalTrajectory:
    """Independent variational trajectories for every trial, stepped together.

    Records each trial's survival probability ``|<Psi_i(theta(t))|psi_i>|^2``
    after every step; trial times are ignored in favour of ``t_final``.

    ``integrator="euler"`` is the plain update ``theta + dt * v(theta)``. The
    default ``"heun"`` averages the velocity at both ends of an Euler step
    and ``"rk4"`` is the classical fourth-order scheme; all three use the
    same velocity field and step size.
    """
    if t_final <= 0 or dt <= 0:
        raise ValueError("t_final and dt must be positive")
    if integrator not in INTEGRATORS:
        raise ValueError(f"integrator must be one of {INTEGRATORS}")
    n_steps = int(round(t_final / dt))
    if not math.isclose(n_steps * dt, t_final, rel_tol=1e-9):
        raise ValueError("t_final must be a whole number of steps")
    initial = np.stack([tr.initial_state for tr in trials], axis=1)
    T = initial.shape[1]
    theta = np.repeat(_check_params(ansatz, theta0)[:, None], T, axis=1)
    idle = h_test.is_empty()

    def velocity(th, k):
        psi, D = _sweep(ansatz, th, initial)
        A, C = _metric(D, psi, apply(h_test, psi))
        if check_metric:
            _assert_psd(A)
        return solve_velocity(A, C, reg, step_index=k).T

    fids = np.empty((n_steps + 1, T))
    hist = np.empty((n_steps + 1, ansatz.n_params, T)) if keep_thetas else None
    for k in range(n_steps + 1):
        psi, _ = _sweep(ansatz, theta, initial, derivatives=False)
        fids[k] = np.abs(np.sum(psi.conj() * initial, axis=0)) ** 2
        if keep_thetas:
            hist[k] = theta
        if k == n_steps or idle:
            continue
        k1 = velocity(theta, k)
        if integrator == "euler":
            theta = theta + dt * k1
        elif integrator == "heun":
            k2 = velocity(theta + dt * k1, k)
            theta = theta + 0.5 * dt * (k1 + k2)
        else:
            k2 = velocity(theta + 0.5 * dt * k1, k)
            k3 = velocity(theta + 0.5 * dt * k2, k)
            k4 = velocity(theta + dt * k3, k)
            theta = theta + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    times = dt * np.arange(n_steps + 1)
    return VariationalTrajectory(times, fids, hist, dt)


def _assert_psd(A: np.ndarray, tol: float = 1e-10) -> None:
    if np.max(np.abs(A - np.conj(np.swapaxes(A, -1, -2)))) > 1e-12 * max(1.0, np.max(np.abs(A))):
        raise AssertionError("metric A is not Hermitian")
    if np.min(np.linalg.eigvalsh(A)) < -tol:
        raise AssertionError("metric A is not positive semidefinite")


def trotter_reference(h_test: HamiltonianSum, trials: TrialSet, t_final: float, tau: float) -> tuple[np.ndarray, np.ndarray]:
    """Times and average fidelity of the Trotter-evolved trials after each slice ``tau``."""
    n_steps = int(round(t_final / tau))
    initial = np.stack([tr.initial_state for tr in trials], axis=1)
    states = trotter_trajectory(h_test, initial, tau, n_steps)  # (n+1, dim, T)
    overlaps = np.einsum("dt,kdt->kt", initial.conj(), states)
    return tau * np.arange(n_steps + 1), np.mean(np.abs(overlaps) ** 2, axis=1)


# -- landscapes ---------------------------------------------------------------------


@dataclass
class LandscapeScan:
    lambdas: np.ndarray
    kappas: np.ndarray
    values: np.ndarray  # (len(lambdas), len(kappas))
    method: str

    @property
    def argmax(self) -> tuple[float, float]:
        i, j = np.unravel_index(np.argmax(self.values), self.values.shape)
        return float(self.lambdas[i]), float(self.kappas[j])

    def rows(self):
        """``(lambda, kappa, f_ave)`` in kappa-major, lambda-fastest order."""
        for j, k in enumerate(self.kappas):
            for i, l in enumerate(self.lambdas):
                yield float(l), float(k), float(self.values[i, j])


def landscape_point(
    h_test: HamiltonianSum,
    trials: TrialSet,
    t: float,
    method: str = "exact",
    tau: float = 2 * math.pi / 1000,
    layers: int = 3,
    reg: float = DEFAULT_REG,
    integrator: str = "heun",
) -> float:
    if method == "exact":
        return average_fidelity(h_test, trials, Method("exact"))
    if method == "trotter":
        return average_fidelity(h_test, trials, Method.trotter_tau(t, tau))
    if method == "variational":
        if h_test.is_empty():
            return 1.0
        ansatz = AnsatzCircuit.trotter_layers(h_test, layers)
        traj = evolve_trajectory(ansatz, np.zeros(ansatz.n_params), h_test, trials, t, tau, reg, integrator)
        return float(traj.f_ave[-1])
    raise ValueError(f"unknown landscape method {method!r}")


def landscape_scan(
    lambdas: Sequence[float],
    kappas: Sequence[float],
    model,
    trials: TrialSet,
    t: float,
    method: str = "exact",
    tau: float = 2 * math.pi / 1000,
    layers: int = 3,
    integrator: str = "heun",
    workers: int = 1,
) -> LandscapeScan:
    """Average fidelity on the (lambda, kappa) grid for the Ising chain ``model``."""
    from .tfim import EffectiveParams, residual_hamiltonian

    lambdas = np.asarray(lambdas, dtype=float)
    kappas = np.asarray(kappas, dtype=float)
    if lambdas.size == 0 or kappas.size == 0:
        raise ValueError("landscape grid is empty")
    points = [(i, j) for i in range(lambdas.size) for j in range(kappas.size)]

    def run(ij):
        i, j = ij
        h_test = residual_hamiltonian(model, EffectiveParams(lambdas[i], kappas[j]))
        return landscape_point(h_test, trials, t, method, tau, layers, integrator=integrator)

    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(run, points))
    else:
        results = [run(p) for p in points]
    values = np.empty((lambdas.size, kappas.size))
    for (i, j), v in zip(points, results):
        values[i, j] = v
    return LandscapeScan(lambdas, kappas, values, method)
