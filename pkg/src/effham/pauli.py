"""
Pauli-string Hamiltonians.

A Hamiltonian is a real-weighted sum of Pauli strings,

    H = c_1 P_1 + c_2 P_2 + ... ,

with each P_k a tensor product of {I, X, Y, Z}. Sites are numbered from 1 in
the public API. In the state-vector layout site 1 is the most significant bit
of the basis index, so ``"XI"`` acting on ``|00>`` (index 0) gives ``|10>``
(index 2).

Usage:
    >>> h = HamiltonianSum.from_dict({"ZI": -5.0, "IZ": -5.0, "XX": -1.0})
    >>> hpsi = apply(h, psi)
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Mapping, Sequence

import numpy as np

PAULI_AXES = "IXYZ"
DENSE_LIMIT = 12

_SINGLE = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


@dataclass(frozen=True, order=True)
class PauliString:
    """Tensor product of single-site Pauli operators, e.g. ``"ZIIXI"``."""

    axes: str

    def __post_init__(self):
        axes = self.axes.upper()
        if not axes:
            raise ValueError("a Pauli string needs at least one site")
        bad = set(axes) - set(PAULI_AXES)
        if bad:
            raise ValueError(f"invalid Pauli axes {sorted(bad)} in {self.axes!r}")
        object.__setattr__(self, "axes", axes)

    @classmethod
    def from_sites(cls, n_sites: int, ops: Mapping[int, str]) -> "PauliString":
        """Build from a 1-based ``{site: axis}`` mapping; unlisted sites are I."""
        axes = ["I"] * n_sites
        for site, axis in ops.items():
            if not 1 <= site <= n_sites:
                raise ValueError(f"site {site} outside 1..{n_sites}")
            axes[site - 1] = axis
        return cls("".join(axes))

    @classmethod
    def identity(cls, n_sites: int) -> "PauliString":
        return cls("I" * n_sites)

    @property
    def n_sites(self) -> int:
        return len(self.axes)

    @property
    def weight(self) -> int:
        return sum(a != "I" for a in self.axes)

    def __str__(self) -> str:
        return self.axes


@dataclass(frozen=True)
class HamiltonianTerm:
    coefficient: float
    string: PauliString

    def __post_init__(self):
        c = self.coefficient
        if isinstance(c, complex) or np.iscomplexobj(c):
            if np.imag(c) != 0:
                raise TypeError("Pauli term coefficients must be real")
            c = np.real(c)
        c = float(c)
        if not math.isfinite(c):
            raise ValueError(f"non-finite coefficient {c!r}")
        object.__setattr__(self, "coefficient", c)
        if not isinstance(self.string, PauliString):
            object.__setattr__(self, "string", PauliString(self.string))


@dataclass(frozen=True)
class HamiltonianSum:
    """Immutable weighted sum of Pauli strings on ``n_sites`` sites.

    The constructor does not merge duplicates; use :func:`canonicalize`
    (every algebraic helper in this module returns canonical sums).
    """

    terms: tuple[HamiltonianTerm, ...]
    n_sites: int

    def __post_init__(self):
        if self.n_sites < 1:
            raise ValueError("n_sites must be positive")
        terms = tuple(self.terms)
        for term in terms:
            if term.string.n_sites != self.n_sites:
                raise ValueError(
                    f"term {term.string} has {term.string.n_sites} sites, "
                    f"expected {self.n_sites}"
                )
        object.__setattr__(self, "terms", terms)

    @classmethod
    def empty(cls, n_sites: int) -> "HamiltonianSum":
        return cls((), n_sites)

    @classmethod
    def from_dict(cls, terms: Mapping[str, float], n_sites: int | None = None) -> "HamiltonianSum":
        items = [HamiltonianTerm(c, PauliString(s)) for s, c in terms.items()]
        if n_sites is None:
            if not items:
                raise ValueError("cannot infer n_sites from an empty mapping")
            n_sites = items[0].string.n_sites
        return canonicalize(cls(tuple(items), n_sites))

    @classmethod
    def from_terms(cls, terms: Iterable[tuple[float, str]], n_sites: int) -> "HamiltonianSum":
        return canonicalize(
            cls(tuple(HamiltonianTerm(c, PauliString(s)) for c, s in terms), n_sites)
        )

    @property
    def dim(self) -> int:
        return 2**self.n_sites

    def is_empty(self) -> bool:
        return not self.terms

    def norm1(self) -> float:
        """Sum of absolute coefficients, an upper bound on the operator norm."""
        return sum(abs(t.coefficient) for t in self.terms)

    def as_dict(self) -> dict[str, float]:
        return {t.string.axes: t.coefficient for t in self.terms}

    def __len__(self) -> int:
        return len(self.terms)

    def __iter__(self):
        return iter(self.terms)

    def __add__(self, other: "HamiltonianSum") -> "HamiltonianSum":
        _check_sites(self, other)
        return canonicalize(HamiltonianSum(self.terms + other.terms, self.n_sites))

    def __sub__(self, other: "HamiltonianSum") -> "HamiltonianSum":
        return subtract(self, other)

    def __mul__(self, scalar: float) -> "HamiltonianSum":
        return canonicalize(
            HamiltonianSum(
                tuple(HamiltonianTerm(scalar * t.coefficient, t.string) for t in self.terms),
                self.n_sites,
            )
        )

    __rmul__ = __mul__

    def __neg__(self) -> "HamiltonianSum":
        return self * -1.0

    # -- serialization -------------------------------------------------------

    def to_records(self) -> list[dict]:
        return [{"coefficient": t.coefficient, "axes": t.string.axes} for t in self.terms]

    @classmethod
    def from_records(cls, records: Sequence[Mapping], n_sites: int | None = None) -> "HamiltonianSum":
        terms = tuple(HamiltonianTerm(float(r["coefficient"]), PauliString(r["axes"])) for r in records)
        if n_sites is None:
            if not terms:
                raise ValueError("cannot infer n_sites from an empty record list")
            n_sites = terms[0].string.n_sites
        return cls(terms, n_sites)

    def to_json(self) -> str:
        # repr-based float formatting in json round-trips exactly
        return json.dumps({"n_sites": self.n_sites, "terms": self.to_records()}, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "HamiltonianSum":
        data = json.loads(text)
        return cls.from_records(data["terms"], data["n_sites"])


def _check_sites(a: HamiltonianSum, b: HamiltonianSum) -> None:
    if a.n_sites != b.n_sites:
        raise ValueError(f"site-count mismatch: {a.n_sites} vs {b.n_sites}")


def canonicalize(h: HamiltonianSum) -> HamiltonianSum:
    """Merge duplicate strings, drop zero coefficients, sort by axes."""
    merged: dict[PauliString, float] = {}
    for term in h.terms:
        merged[term.string] = merged.get(term.string, 0.0) + term.coefficient
    terms = tuple(
        HamiltonianTerm(c, s) for s, c in sorted(merged.items(), key=lambda kv: kv[0].axes) if c != 0.0
    )
    return HamiltonianSum(terms, h.n_sites)


def subtract(a: HamiltonianSum, b: HamiltonianSum) -> HamiltonianSum:
    """``a - b``, merging each operand first so that ``h - h`` is exactly empty."""
    _check_sites(a, b)
    a, b = canonicalize(a), canonicalize(b)
    neg = tuple(HamiltonianTerm(-t.coefficient, t.string) for t in b.terms)
    return canonicalize(HamiltonianSum(a.terms + neg, a.n_sites))


# -- fast application ---------------------------------------------------------


@lru_cache(maxsize=4096)
def pauli_action(axes: str) -> tuple[np.ndarray, np.ndarray]:
    """Permutation and phase such that ``(P @ v) == phase * v[perm]``.

    A Pauli string maps basis state ``|b>`` to ``i^{nY} (-1)^{|b & zmask|}
    |b ^ xmask>``, where ``xmask`` marks X/Y sites and ``zmask`` marks Y/Z
    sites. The returned arrays are read-only.
    """
    n = len(axes)
    xmask = zmask = 0
    n_y = 0
    for pos, a in enumerate(axes):
        bit = 1 << (n - 1 - pos)
        if a in "XY":
            xmask |= bit
        if a in "YZ":
            zmask |= bit
        n_y += a == "Y"
    idx = np.arange(2**n, dtype=np.int64)
    perm = idx ^ xmask
    parity = np.zeros(2**n, dtype=np.int64)
    masked = perm & zmask
    while np.any(masked):
        parity ^= masked & 1
        masked >>= 1
    phase = (1j**n_y) * (1 - 2 * parity).astype(complex)
    perm.setflags(write=False)
    phase.setflags(write=False)
    return perm, phase


def apply_pauli(string: PauliString | str, v: np.ndarray) -> np.ndarray:
    """Return ``P @ v``. ``v`` may carry extra trailing axes (batched columns)."""
    axes = string.axes if isinstance(string, PauliString) else string
    perm, phase = pauli_action(axes)
    if v.ndim == 1:
        return phase * v[perm]
    return phase.reshape((-1,) + (1,) * (v.ndim - 1)) * v[perm]


def apply(h: HamiltonianSum, state: np.ndarray) -> np.ndarray:
    """Return ``H|state>`` term by term, without a dense matrix."""
    v = np.asarray(state, dtype=complex)
    if v.shape[0] != h.dim:
        raise ValueError(f"dimension mismatch: state has {v.shape[0]}, Hamiltonian acts on {h.dim}")
    out = np.zeros_like(v)
    for term in h.terms:
        out += term.coefficient * apply_pauli(term.string, v)
    return out


def expectation(h: HamiltonianSum, state: np.ndarray) -> float:
    v = np.asarray(state, dtype=complex)
    return float(np.real(np.vdot(v, apply(h, v))))


def pauli_matrix(string: PauliString | str) -> np.ndarray:
    axes = string.axes if isinstance(string, PauliString) else string
    m = np.array([[1.0 + 0j]])
    for a in axes:
        m = np.kron(m, _SINGLE[a])
    return m


def dense_matrix(h: HamiltonianSum, limit: int = DENSE_LIMIT) -> np.ndarray:
    """Dense ``2^n x 2^n`` matrix as a sum of Kronecker products."""
    if h.n_sites > limit:
        raise ValueError(f"dense export limited to {limit} sites, got {h.n_sites}")
    m = np.zeros((h.dim, h.dim), dtype=complex)
    for term in h.terms:
        m += term.coefficient * pauli_matrix(term.string)
    return m
