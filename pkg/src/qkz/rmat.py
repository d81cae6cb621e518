"""Trigonometric R-matrix, tensor-leg action and the qKZ right-hand side.

Entries are stored as ``entries[(j', k'), (j, k)] = R^{j' k'}_{j k}`` with the
pair ``(j, k)`` flattened to ``j*n + k``. As a linear map on components the
lower pair is the output: ``(R f)_{jk} = sum R^{j'k'}_{jk} f_{j'k'}``, i.e.
the action matrix is ``entries.T``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .errors import LegOutOfRange, SingularDenominator
from .specfn import ModelParams

__all__ = [
    "RMatrixValue",
    "TensorState",
    "rbar",
    "r_modified",
    "permutation",
    "apply_r",
    "qkz_rhs",
    "ybe_residual",
    "inversion_residual",
]

_DEN_EPS = 1e-12


@dataclass(frozen=True)
class RMatrixValue:
    """Dense ``n^2 x n^2`` R-matrix value."""

    n: int
    entries: np.ndarray

    def __post_init__(self) -> None:
        e = np.array(self.entries, dtype=complex)
        if e.shape != (self.n**2, self.n**2):
            raise ValueError(f"entries must be {self.n**2}x{self.n**2}")
        e.setflags(write=False)
        object.__setattr__(self, "entries", e)

    def entry(self, upper: tuple[int, int], lower: tuple[int, int]) -> complex:
        """``R^{upper}_{lower}``."""
        n = self.n
        return complex(self.entries[upper[0] * n + upper[1], lower[0] * n + lower[1]])

    @property
    def operator(self) -> np.ndarray:
        """Matrix of the action on two-leg components (rows are outputs)."""
        return self.entries.T


def _r_entries(beta1: complex, beta2: complex, p: ModelParams, diag_sign: float) -> RMatrixValue:
    n, rho = p.n, p.rho
    d = complex(beta1) - complex(beta2)
    den = np.sinh(math.pi / rho * (d - 2j * math.pi / n))
    if abs(den) <= _DEN_EPS:
        raise SingularDenominator(f"sh(pi(b1-b2-2 pi i/n)/rho) vanishes at b1-b2={d}")
    diag = diag_sign * np.sinh(math.pi / rho * d) / den
    ex = -np.sinh(2j * math.pi**2 / (rho * n)) / den
    ep, em = np.exp(math.pi / rho * d), np.exp(-math.pi / rho * d)
    e = np.zeros((n * n, n * n), dtype=complex)
    for j in range(n):
        e[j * n + j, j * n + j] = 1.0
        for k in range(n):
            if j == k:
                continue
            e[j * n + k, j * n + k] = diag
            # upper (k, j), lower (j, k)
            e[k * n + j, j * n + k] = ex * (ep if j > k else em)
    return RMatrixValue(n, e)


def rbar(beta1: complex, beta2: complex, p: ModelParams) -> RMatrixValue:
    """The R-matrix with diagonal entries ``-sh(pi d/rho)/sh(pi(d - 2 pi i/n)/rho)``."""
    return _r_entries(beta1, beta2, p, -1.0)


def r_modified(beta1: complex, beta2: complex, p: ModelParams) -> RMatrixValue:
    """Sign-modified R-matrix: the ``j != k`` diagonal entries of :func:`rbar` negated."""
    return _r_entries(beta1, beta2, p, 1.0)


def permutation(n: int) -> RMatrixValue:
    """Flip ``v_j (x) v_k -> v_k (x) v_j``."""
    e = np.zeros((n * n, n * n))
    for j, k in itertools.product(range(n), repeat=2):
        e[k * n + j, j * n + k] = 1.0
    return RMatrixValue(n, e)


@dataclass(frozen=True)
class TensorState:
    """Sparse vector in the N-fold tensor power of ``C^n``.

    ``amplitudes`` maps index tuples ``(j_1, ..., j_N)`` (entries 0..n-1) to
    complex coefficients; absent keys are zero.
    """

    n: int
    N: int
    amplitudes: Mapping[tuple[int, ...], complex] = field(default_factory=dict)

    def __post_init__(self) -> None:
        amps = {}
        for key, val in dict(self.amplitudes).items():
            key = tuple(int(j) for j in key)
            if len(key) != self.N or any(not 0 <= j < self.n for j in key):
                raise ValueError(f"invalid tensor index {key}")
            amps[key] = complex(val)
        object.__setattr__(self, "amplitudes", dict(sorted(amps.items())))

    @classmethod
    def basis(cls, n: int, J: Iterable[int]) -> "TensorState":
        J = tuple(J)
        return cls(n, len(J), {J: 1.0})

    @classmethod
    def from_vector(cls, n: int, N: int, vec) -> "TensorState":
        vec = np.asarray(vec, dtype=complex).reshape(-1)
        keys = itertools.product(range(n), repeat=N)
        return cls(n, N, {k: v for k, v in zip(keys, vec) if v != 0})

    def to_vector(self) -> np.ndarray:
        out = np.zeros(self.n**self.N, dtype=complex)
        for key, val in self.amplitudes.items():
            out[np.ravel_multi_index(key, (self.n,) * self.N)] = val
        return out

    def __getitem__(self, key) -> complex:
        return self.amplitudes.get(tuple(key), 0j)

    def __add__(self, other: "TensorState") -> "TensorState":
        amps = dict(self.amplitudes)
        for k, v in other.amplitudes.items():
            amps[k] = amps.get(k, 0j) + v
        return TensorState(self.n, self.N, amps)

    def scale(self, c: complex) -> "TensorState":
        return TensorState(self.n, self.N, {k: c * v for k, v in self.amplitudes.items()})

    def weights(self, tol: float = 0.0) -> set[tuple[int, ...]]:
        """Sorted index multisets carried by amplitudes above ``tol``."""
        return {tuple(sorted(k)) for k, v in self.amplitudes.items() if abs(v) > tol}


def apply_r(state: TensorState, r_leg: int, s_leg: int, R: RMatrixValue) -> TensorState:
    """Act with ``R`` on legs ``r_leg`` (first slot) and ``s_leg`` (1-based)."""
    N = state.N
    if not (1 <= r_leg <= N and 1 <= s_leg <= N) or r_leg == s_leg:
        raise LegOutOfRange(f"legs ({r_leg}, {s_leg}) invalid for N={N}")
    if R.n != state.n:
        raise ValueError("rank mismatch between state and R-matrix")
    n = state.n
    op = R.operator
    a, b = r_leg - 1, s_leg - 1
    out: dict[tuple[int, ...], complex] = {}
    for key, val in state.amplitudes.items():
        col = key[a] * n + key[b]
        for row in np.flatnonzero(op[:, col]):
            new = list(key)
            new[a], new[b] = divmod(int(row), n)
            new = tuple(new)
            out[new] = out.get(new, 0j) + op[row, col] * val
    return TensorState(n, N, out)


def qkz_rhs(state: TensorState, r: int, betas, p: ModelParams, modified: bool = True) -> TensorState:
    """Apply the qKZ operator for leg ``r`` (1-based), with ``D_r = 1``.

    The product ``R_{r,r-1}(b_r - lam i, b_{r-1}) ... R_{r,1}(b_r - lam i, b_1)
    R_{r,N}(b_r, b_N) ... R_{r,r+1}(b_r, b_{r+1})`` is applied right to left.
    """
    N = state.N
    if not 1 <= r <= N or len(betas) != N:
        raise LegOutOfRange(f"r={r} invalid for N={N} with {len(betas)} spectral parameters")
    make = r_modified if modified else rbar
    b = [complex(x) for x in betas]
    shifted = b[r - 1] - 1j * p.lam
    out = state
    for s in range(r + 1, N + 1):
        out = apply_r(out, r, s, make(b[r - 1], b[s - 1], p))
    for s in range(1, r):
        out = apply_r(out, r, s, make(shifted, b[s - 1], p))
    return out


def _leg_operator(R: RMatrixValue, r_leg: int, s_leg: int, N: int) -> np.ndarray:
    n = R.n
    dim = n**N
    cols = []
    for idx in range(dim):
        key = np.unravel_index(idx, (n,) * N)
        cols.append(apply_r(TensorState(n, N, {tuple(int(k) for k in key): 1.0}), r_leg, s_leg, R).to_vector())
    return np.array(cols).T


def ybe_residual(b1: complex, b2: complex, b3: complex, p: ModelParams, modified: bool = True) -> float:
    """Max entrywise residual of ``R12 R13 R23 = R23 R13 R12`` on three legs."""
    make = r_modified if modified else rbar
    R12 = _leg_operator(make(b1, b2, p), 1, 2, 3)
    R13 = _leg_operator(make(b1, b3, p), 1, 3, 3)
    R23 = _leg_operator(make(b2, b3, p), 2, 3, 3)
    return float(np.max(np.abs(R12 @ R13 @ R23 - R23 @ R13 @ R12)))


def inversion_residual(b1: complex, b2: complex, p: ModelParams, modified: bool = False) -> float:
    """Max entrywise residual of ``R(b1, b2) P R(b2, b1) P = 1``."""
    make = r_modified if modified else rbar
    P = permutation(p.n).operator
    prod = make(b1, b2, p).operator @ P @ make(b2, b1, p).operator @ P
    return float(np.max(np.abs(prod - np.eye(p.n**2))))
