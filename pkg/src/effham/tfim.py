"""Transverse-field Ising chain and its second-order effective hopping model."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .grover import CandidateSet
from .pauli import HamiltonianSum, PauliString
from .statevector import basis_state


@dataclass(frozen=True)
class TFIMParams:
    N: int
    delta: float
    J: float

    def __post_init__(self):
        if self.N < 2:
            raise ValueError("the Ising chain needs N >= 2")
        if self.J != 0 and abs(self.delta / self.J) < 5:
            warnings.warn(
                f"delta/J = {self.delta / self.J:.3g}; the effective model assumes delta >> J",
                stacklevel=2,
            )


@dataclass(frozen=True)
class EffectiveParams:
    lam: float
    kappa: float

    def __post_init__(self):
        if not (np.isfinite(self.lam) and np.isfinite(self.kappa)):
            raise ValueError("effective coefficients must be finite")


def build_tfim(p: TFIMParams) -> HamiltonianSum:
    """``-(delta/2) sum Z_i - J sum X_i X_{i+1}`` with open boundaries."""
    N = p.N
    terms = [(-p.delta / 2, PauliString.from_sites(N, {i: "Z"}).axes) for i in range(1, N + 1)]
    terms += [(-p.J, PauliString.from_sites(N, {i: "X", i + 1: "X"}).axes) for i in range(1, N)]
    return HamiltonianSum.from_terms(terms, N)


def build_sw_effective(e: EffectiveParams, N: int) -> HamiltonianSum:
    """Hopping model: nearest (lam) and next-nearest (kappa) XX+YY, plus boundary Z terms.

    ``-(lam/2) sum (XX+YY)_{i,i+1} - (kappa/2) sum (XX+YY)_{i,i+2} - Z_1 - Z_N``.
    For N = 2 there are no next-nearest pairs.
    """
    if N < 2:
        raise ValueError("the effective model needs N >= 2")
    terms = []
    for gap, coeff in ((1, -e.lam / 2), (2, -e.kappa / 2)):
        for i in range(1, N - gap + 1):
            for axis in "XY":
                terms.append((coeff, PauliString.from_sites(N, {i: axis, i + gap: axis}).axes))
    terms.append((-1.0, PauliString.from_sites(N, {1: "Z"}).axes))
    terms.append((-1.0, PauliString.from_sites(N, {N: "Z"}).axes))
    return HamiltonianSum.from_terms(terms, N)


def exact_sw_coefficients(delta: float, J: float) -> EffectiveParams:
    """Second-order values ``lam = J``, ``kappa = J**2 / (2 delta)``."""
    if delta == 0:
        raise ValueError("delta must be nonzero")
    return EffectiveParams(J, J**2 / (2 * delta))


def residual_hamiltonian(p: TFIMParams, e: EffectiveParams) -> HamiltonianSum:
    """``H - H_eff`` for the given chain and candidate coefficients."""
    return build_tfim(p) - build_sw_effective(e, p.N)


def single_flip_bits(N: int, site: int) -> str:
    return "".join("1" if k == site else "0" for k in range(1, N + 1))


def initial_states(N: int) -> list[np.ndarray]:
    """``X_i |0...0>`` for i = 1..N."""
    if N < 1:
        raise ValueError("N must be positive")
    return [basis_state(N, single_flip_bits(N, i)) for i in range(1, N + 1)]


def candidate_grid(lambdas: Sequence[float], kappas: Sequence[float], N: int | None = None) -> CandidateSet:
    """Cartesian grid of candidates, enumerated with lambda varying fastest."""
    if len(lambdas) == 0 or len(kappas) == 0:
        raise ValueError("candidate grid needs at least one lambda and one kappa")
    params = tuple(EffectiveParams(float(l), float(k)) for k in kappas for l in lambdas)
    hams = None if N is None else tuple(build_sw_effective(p, N) for p in params)
    return CandidateSet(params, hams)


def grid_values(lo: float, hi: float, steps: int) -> np.ndarray:
    """``steps`` evenly spaced values from ``lo`` to ``hi``, rounded to 12 decimals."""
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if steps == 1:
        return np.array([float(lo)])
    return np.round(np.linspace(lo, hi, steps), 12)
