"""Weight profiles, index assignments and the skew-symmetric families.

Layer ``j`` (0 <= j <= n-1) carries the variables ``gamma[j][m]`` for
``m = 0..nu_j - 1``; layer 0 holds the spectral parameters. Slot ``m`` of
layer ``j`` is attached to the tensor position ``r_{j,m}``, the ``m``-th
smallest element of ``N_j = {r : j_r >= j}`` (positions are 1-based). The
functions accept numpy arrays in place of scalars and broadcast.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .errors import InvalidProfile
from .specfn import ModelParams

__all__ = [
    "Convention",
    "PINNED_CONVENTION",
    "WeightProfile",
    "Assignment",
    "LayeredVariables",
    "enumerate_assignments",
    "permutation_sign",
    "skew",
    "skew_layers",
    "g_J",
    "w_J",
    "G_J",
    "W_J",
    "skew1_closed_form",
    "skew2_closed_form",
]


class Convention(str, Enum):
    """Form of the exponential prefactor in ``g_J``."""

    REAL = "real"  # exp((pi/rho) * (...))
    IMAGINARY = "imaginary"  # exp((pi i/rho) * (...))


# Only the real form satisfies the exchange identity with the R-matrix.
PINNED_CONVENTION = Convention.REAL


@dataclass(frozen=True)
class WeightProfile:
    """``nu = (nu_1, ..., nu_{n-1})`` with ``nu_0 = N`` and ``nu_n = 0``."""

    n: int
    N: int
    nu: tuple[int, ...]

    def __post_init__(self) -> None:
        nu = tuple(int(v) for v in self.nu)
        object.__setattr__(self, "nu", nu)
        if self.n < 2 or self.N < 0:
            raise InvalidProfile(f"need n >= 2 and N >= 0, got n={self.n}, N={self.N}")
        if len(nu) != self.n - 1:
            raise InvalidProfile(f"nu must have n-1={self.n - 1} entries, got {len(nu)}")
        full = self.full
        if any(full[j] < full[j + 1] for j in range(self.n)) or full[-2] < 0:
            raise InvalidProfile(f"profile must satisfy N >= nu_1 >= ... >= nu_(n-1) >= 0, got {full}")

    @classmethod
    def of(cls, J: Sequence[int], n: int) -> "WeightProfile":
        return cls(n, len(J), tuple(sum(1 for j in J if j >= k) for k in range(1, n)))

    @property
    def full(self) -> tuple[int, ...]:
        """``(nu_0, nu_1, ..., nu_n)``."""
        return (self.N, *self.nu, 0)

    @property
    def weyl_positive(self) -> bool:
        f = self.full
        return all(f[j - 1] + f[j + 1] >= 2 * f[j] for j in range(1, self.n))

    @property
    def weyl_violations(self) -> list[int]:
        f = self.full
        return [j for j in range(1, self.n) if f[j - 1] + f[j + 1] < 2 * f[j]]

    @property
    def dimension(self) -> int:
        """Number of integration variables."""
        return sum(self.nu)

    @property
    def weight(self) -> tuple[int, ...]:
        """Coefficients of ``eps_j`` (j = 0..n-1) in the weight of the solution."""
        f = self.full
        return tuple(f[j] - f[j + 1] for j in range(self.n))

    def count(self) -> int:
        """``prod_j binom(nu_{j-1}, nu_j)``."""
        f = self.full
        return math.prod(math.comb(f[j - 1], f[j]) for j in range(1, self.n))


@dataclass(frozen=True)
class Assignment:
    """Index tuple ``J = (j_1, ..., j_N)`` with derived slot bookkeeping."""

    J: tuple[int, ...]
    n: int

    def __post_init__(self) -> None:
        J = tuple(int(j) for j in self.J)
        if any(not 0 <= j < self.n for j in J):
            raise InvalidProfile(f"entries of J must lie in 0..{self.n - 1}, got {J}")
        object.__setattr__(self, "J", J)

    @property
    def N(self) -> int:
        return len(self.J)

    @property
    def nested_sets(self) -> tuple[tuple[int, ...], ...]:
        """``N_j`` for j = 0..n-1, each sorted and 1-based."""
        return _nested(self.J, self.n)

    @property
    def slot_index(self) -> tuple[tuple[int, ...], ...]:
        """``r_{j,m}``: same data as :attr:`nested_sets`, indexed by slot."""
        return _nested(self.J, self.n)

    @property
    def profile(self) -> WeightProfile:
        return WeightProfile.of(self.J, self.n)

    def rotated(self) -> "Assignment":
        """``(j_N, j_1, ..., j_{N-1})``."""
        return Assignment(self.J[-1:] + self.J[:-1], self.n)


@lru_cache(maxsize=None)
def _nested(J: tuple[int, ...], n: int) -> tuple[tuple[int, ...], ...]:
    return tuple(tuple(r + 1 for r, j in enumerate(J) if j >= k) for k in range(n))


@dataclass(frozen=True)
class LayeredVariables:
    """Points ``gamma[j][m]``; layer 0 holds the spectral parameters."""

    gamma: tuple[tuple, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "gamma", tuple(tuple(layer) for layer in self.gamma))

    @classmethod
    def build(cls, betas, inner: Sequence[Sequence]) -> "LayeredVariables":
        return cls((tuple(betas), *(tuple(x) for x in inner)))

    @property
    def betas(self) -> tuple:
        return self.gamma[0]

    def sizes(self) -> tuple[int, ...]:
        return tuple(len(x) for x in self.gamma)

    def matches(self, wp: WeightProfile) -> bool:
        return self.sizes() == wp.full[:-1]

    def __getitem__(self, j: int) -> tuple:
        return self.gamma[j]

    def __len__(self) -> int:
        return len(self.gamma)


def enumerate_assignments(wp: WeightProfile) -> list[Assignment]:
    """All ``J`` with ``#{r : j_r >= j} = nu_j``, in lexicographic order."""
    return [Assignment(J, wp.n) for J in _assignments(wp.n, wp.N, wp.nu)]


@lru_cache(maxsize=None)
def _assignments(n: int, N: int, nu: tuple[int, ...]) -> tuple[tuple[int, ...], ...]:
    # counts of each value: c_j = nu_j - nu_{j+1}
    full = (N, *nu, 0)
    counts = [full[j] - full[j + 1] for j in range(n)]
    out: list[tuple[int, ...]] = []

    def rec(prefix: list[int]) -> None:
        if len(prefix) == N:
            out.append(tuple(prefix))
            return
        for j in range(n):
            if counts[j]:
                counts[j] -= 1
                prefix.append(j)
                rec(prefix)
                prefix.pop()
                counts[j] += 1

    rec([])
    return tuple(out)


def permutation_sign(perm: Sequence[int]) -> int:
    """Sign of a permutation given as a sequence of 0..k-1."""
    perm = list(perm)
    sign = 1
    for i in range(len(perm)):
        while perm[i] != i:
            k = perm[i]
            perm[i], perm[k] = perm[k], perm[i]
            sign = -sign
    return sign


def _accumulate(terms: list):
    if all(np.ndim(t) == 0 for t in terms):
        return complex(math.fsum(complex(t).real for t in terms), math.fsum(complex(t).imag for t in terms))
    return np.sum(np.stack(np.broadcast_arrays(*terms)), axis=0)


def skew_layers(f: Callable, gamma, layers: Sequence[int]):
    """Signed sum of ``f`` over permutations of the slots of the given layers."""
    gamma = [tuple(x) for x in gamma]
    layers = [j for j in layers if len(gamma[j]) > 1]
    if not layers:
        return f(gamma)
    terms = []
    for perms in itertools.product(*(itertools.permutations(range(len(gamma[j]))) for j in layers)):
        sign = 1
        g2 = list(gamma)
        for j, perm in zip(layers, perms):
            sign *= permutation_sign(perm)
            g2[j] = tuple(gamma[j][i] for i in perm)
        val = f(g2)
        terms.append(val if sign > 0 else -val)
    return _accumulate(terms)


def skew(layer: int, f: Callable) -> Callable:
    """``Skew_layer f`` as a new function of the layered variables."""
    if layer < 1:
        raise ValueError("layer must be >= 1")
    return lambda gamma: skew_layers(f, gamma, [layer])


@lru_cache(maxsize=None)
def _structure(J: tuple[int, ...], n: int):
    """Per-layer factor lists shared by g_J and G_J.

    Returns ``(exps, cross, intra)``: ``exps`` holds ``(j, m, m_prev)`` with
    ``r_{j,m} = r_{j-1,m_prev}``; ``cross`` holds ``(j, m, m_prev, s)`` with
    ``s = +1`` when ``r_{j-1,m_prev} < r_{j,m}`` and ``-1`` when larger;
    ``intra`` holds ``(j, m, m2)`` with ``m < m2``.
    """
    R = _nested(J, n)
    exps, cross, intra = [], [], []
    for j in range(1, n):
        for m, r in enumerate(R[j]):
            exps.append((j, m, R[j - 1].index(r)))
            for mp, r2 in enumerate(R[j - 1]):
                if r2 < r:
                    cross.append((j, m, mp, 1))
                elif r < r2:
                    cross.append((j, m, mp, -1))
        for m, m2 in itertools.combinations(range(len(R[j])), 2):
            intra.append((j, m, m2))
    return tuple(exps), tuple(cross), tuple(intra)


def _check_sizes(J: tuple[int, ...], gamma, n: int) -> None:
    R = _nested(J, n)
    sizes = tuple(len(x) for x in gamma)
    if sizes != tuple(len(x) for x in R):
        raise ValueError(f"layer sizes {sizes} do not match assignment {J}")


def _J(J) -> tuple[int, ...]:
    return J.J if isinstance(J, Assignment) else tuple(int(j) for j in J)


def _product(J, gamma, n: int, scale: float, kappa: complex, with_intra: bool):
    J = _J(J)
    gamma = [tuple(x) for x in gamma]
    _check_sizes(J, gamma, n)
    exps, cross, intra = _structure(J, n)
    shift = 1j * math.pi / n
    expo = 0j
    for j, m, mp in exps:
        expo = expo + (gamma[j - 1][mp] - gamma[j][m])
    val = np.exp(kappa * expo)
    for j, m, mp, s in cross:
        val = val * np.sinh(scale * (gamma[j][m] - gamma[j - 1][mp] + s * shift))
    if with_intra:
        for j, m, m2 in intra:
            val = val * np.sinh(scale * (gamma[j][m2] - gamma[j][m] - 2 * shift))
    return val


def g_J(J, gamma, p: ModelParams, convention: Convention | str = PINNED_CONVENTION):
    """The elementary function ``g_J`` at the layered point ``gamma``."""
    conv = Convention(convention)
    scale = math.pi / p.rho
    kappa = scale if conv is Convention.REAL else 1j * scale
    return _product(J, gamma, p.n, scale, kappa, True)


def w_J(J, gamma, p: ModelParams, convention: Convention | str = PINNED_CONVENTION):
    """``Skew_{n-1} o ... o Skew_1 g_J``."""
    return skew_layers(lambda gg: g_J(J, gg, p, convention), gamma, range(1, p.n))


def G_J(J, gamma, p: ModelParams):
    """Level-0 partner of ``g_J``: scale ``n/4`` and no intra-layer factors."""
    s = p.n / 4.0
    return _product(J, gamma, p.n, s, s, False)


def W_J(J, gamma, p: ModelParams):
    """``Skew_{n-1} o ... o Skew_1 G_J``."""
    return skew_layers(lambda gg: G_J(J, gg, p), gamma, range(1, p.n))


def _h_rho(x, p: ModelParams):
    c = 2j * math.pi / p.n
    s = math.pi / p.rho
    return np.sinh(s * x) * np.sinh(s * (x - c)) * np.sinh(s * (x + c))


def skew1_closed_form(l: int, gamma, p: ModelParams):
    """Closed form of ``Skew_{l-1} o ... o Skew_0 g_{(l,l)}`` for N = 2.

    Here ``Skew_0`` exchanges the two spectral parameters.
    """
    s = math.pi / p.rho
    c = 2j * math.pi / p.n
    b1, b2 = gamma[0]
    g1, g2 = gamma[l]
    val = np.exp(s * (b1 + b2 - g1 - g2)) * np.sinh(s * (b1 - b2))
    val = val * np.sinh(s * (g2 - g1 + c)) * np.sinh(s * (g2 - g1 - c))
    for j in range(1, l):
        val = val * _h_rho(gamma[j][0] - gamma[j][1], p)
    return val


def skew2_closed_form(l: int, gamma, p: ModelParams):
    """Closed form of ``Skew_l o ... o Skew_1 [sh(pi(g_{l,1} - g_{l,2} - 2 pi i/n)/rho) g_{(l,l)}]``."""
    s = math.pi / p.rho
    c = 2j * math.pi / p.n
    b1, b2 = gamma[0]
    g1, g2 = gamma[l]
    val = np.sinh(s * (b1 - b2 - c)) * np.exp(s * (b1 + b2 - g1 - g2))
    for j in range(1, l + 1):
        val = val * _h_rho(gamma[j][0] - gamma[j][1], p)
    return val
