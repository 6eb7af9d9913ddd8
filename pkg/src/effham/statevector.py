"""Exact and Trotterized time evolution of pure states.

States are plain complex numpy vectors of length ``2**n_sites`` in the bit
order documented in :mod:`effham.pauli` (site 1 is the most significant bit).
"""

from __future__ import annotations

import csv
import math
from functools import lru_cache
from pathlib import Path

import numpy as np

from .pauli import DENSE_LIMIT, HamiltonianSum, HamiltonianTerm, apply_pauli, dense_matrix

NORM_TOL = 1e-10


def basis_state(n_sites: int, bits: str | int) -> np.ndarray:
    """Computational basis state from a bitstring like ``"10000"`` (site 1 first) or an index."""
    if isinstance(bits, str):
        if len(bits) != n_sites or set(bits) - {"0", "1"}:
            raise ValueError(f"expected a {n_sites}-character bitstring, got {bits!r}")
        index = int(bits, 2)
    else:
        index = int(bits)
        if not 0 <= index < 2**n_sites:
            raise ValueError(f"basis index {index} out of range")
    v = np.zeros(2**n_sites, dtype=complex)
    v[index] = 1.0
    return v


def n_sites_of(state: np.ndarray) -> int:
    dim = state.shape[0]
    n = dim.bit_length() - 1
    if dim != 2**n or n < 1:
        raise ValueError(f"state length {dim} is not a power of two")
    return n


def check_normalized(state: np.ndarray, tol: float = NORM_TOL) -> None:
    norm = np.linalg.norm(state)
    if abs(norm - 1.0) > tol:
        raise ValueError(f"state is not normalized (norm {norm:.12g})")


def inner_product(a: np.ndarray, b: np.ndarray) -> complex:
    """``<a|b>`` with conjugation on ``a``."""
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return complex(np.vdot(a, b))


@lru_cache(maxsize=256)
def eigensystem(h: HamiltonianSum) -> tuple[np.ndarray, np.ndarray]:
    """Cached Hermitian eigendecomposition of ``h``; the arrays are read-only."""
    w, v = np.linalg.eigh(dense_matrix(h))
    w.setflags(write=False)
    v.setflags(write=False)
    return w, v


def exact_evolve(h: HamiltonianSum, state: np.ndarray, t: float) -> np.ndarray:
    """Return ``exp(-i h t) |state>`` through the eigendecomposition of ``h``."""
    state = np.asarray(state, dtype=complex)
    if h.n_sites > DENSE_LIMIT:
        raise ValueError(f"exact evolution limited to {DENSE_LIMIT} sites")
    if state.shape[0] != h.dim:
        raise ValueError(f"dimension mismatch: state {state.shape[0]} vs Hamiltonian {h.dim}")
    if t == 0 or h.is_empty():
        return state.copy()
    w, v = eigensystem(h)
    phases = np.exp(-1j * w * t)
    if state.ndim > 1:
        phases = phases.reshape((-1,) + (1,) * (state.ndim - 1))
    return v @ (phases * (v.conj().T @ state))


def apply_exp_pauli_term(term: HamiltonianTerm, tau: float, state: np.ndarray) -> np.ndarray:
    """``exp(-i c P tau)|state> = cos(c tau)|state> - i sin(c tau) P|state>``."""
    angle = term.coefficient * tau
    if angle == 0.0:
        return np.array(state, dtype=complex, copy=True)
    return math.cos(angle) * state - 1j * math.sin(angle) * apply_pauli(term.string, state)


def trotter_evolve(h: HamiltonianSum, state: np.ndarray, t: float, n: int) -> np.ndarray:
    """First-order product formula: ``n`` repetitions of the ordered term exponentials."""
    if n < 1:
        raise ValueError("trotter_steps must be >= 1")
    psi = np.array(state, dtype=complex, copy=True)
    tau = t / n
    for _ in range(n):
        for term in h.terms:
            psi = apply_exp_pauli_term(term, tau, psi)
    return psi


def trotter_trajectory(h: HamiltonianSum, state: np.ndarray, tau: float, n_steps: int) -> np.ndarray:
    """States after 0, 1, ..., ``n_steps`` Trotter steps of size ``tau`` (rows)."""
    out = np.empty((n_steps + 1,) + np.shape(state), dtype=complex)
    psi = np.array(state, dtype=complex, copy=True)
    out[0] = psi
    for k in range(1, n_steps + 1):
        for term in h.terms:
            psi = apply_exp_pauli_term(term, tau, psi)
        out[k] = psi
    return out


def evolve(h: HamiltonianSum, state: np.ndarray, t: float, method: str = "exact", trotter_steps: int | None = None) -> np.ndarray:
    if method == "exact":
        return exact_evolve(h, state, t)
    if method == "trotter":
        if trotter_steps is None:
            raise ValueError("trotter method needs trotter_steps")
        return trotter_evolve(h, state, t, trotter_steps)
    raise ValueError(f"unknown evolution method {method!r}")


def write_state_csv(state: np.ndarray, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "real", "imag"])
        for i, a in enumerate(state):
            writer.writerow([i, repr(float(a.real)), repr(float(a.imag))])


def read_state_csv(path: str | Path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    v = np.zeros(len(rows), dtype=complex)
    for row in rows:
        v[int(row["index"])] = complex(float(row["real"]), float(row["imag"]))
    return v
