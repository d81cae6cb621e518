"""Multiple sine functions and the scalar kernels built from them.

Conventions: ``S_r(x|w) = Gamma_r(|w| - x)^{(-1)^r} / Gamma_r(x)`` with
``|w| = sum(w)``. Then ``S_2`` has zeros at ``-w1*k - w2*l`` and poles at
``|w| + w1*k + w2*l`` (k, l >= 0) while ``S_3`` is entire with zeros on both
lattices. Inside the fundamental strip ``log S_r`` is computed from a
Gaussian-regularised integral over ``t in (0, inf)``; elsewhere the argument
is first moved into the strip with the shift relations.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import ConfigInvalid, NonConvergence, PoleOrZero

__all__ = [
    "ModelParams",
    "PeriodTriple",
    "log_double_sine",
    "double_sine",
    "log_triple_sine",
    "triple_sine",
    "s_factor",
    "log_varphi",
    "varphi",
    "varphi_pole_heights",
    "psi_level0",
    "psi_generic",
    "h_factor",
    "e_lambda",
]

_SQPI = math.sqrt(math.pi)
_DIGITS = 36.0
_POLE_EPS = 1e-8
_CHUNK = 1 << 20


@dataclass(frozen=True)
class ModelParams:
    """Global analytic parameters at level 0.

    ``lam`` is always ``4*pi/n`` and ``q = exp(-2*pi**2*i/(rho*n))``.
    Construction fails with :class:`ConfigInvalid` when a lattice point
    ``pi/n - k*rho - l*lam`` (0 <= k, l <= k_max) comes within ``eps_gen`` of
    zero, since then poles of the kernel sit on a real contour, or when
    ``2*pi/n - k*rho - l*lam`` does, since then a pole of the kernel must lie
    on both sides of the contour.
    """

    n: int
    rho: float
    k_max: int = 8
    eps_gen: float = 1e-6

    def __post_init__(self) -> None:
        if int(self.n) != self.n or self.n < 2:
            raise ConfigInvalid(f"n must be an integer >= 2, got {self.n!r}")
        if not (self.rho > 0 and math.isfinite(self.rho)):
            raise ConfigInvalid(f"rho must be positive and finite, got {self.rho!r}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "rho", float(self.rho))
        bad = self.genericity_violation()
        if bad is not None:
            raise ConfigInvalid(
                "genericity guard failed: pi/n or 2*pi/n lies within eps_gen of k*rho + l*lambda "
                f"at (k, l) = {bad}"
            )

    @property
    def lam(self) -> float:
        return 4.0 * math.pi / self.n

    @property
    def q(self) -> complex:
        return cmath.exp(-2j * math.pi**2 / (self.rho * self.n))

    def genericity_violation(self) -> tuple[int, int] | None:
        """Return the first offending ``(k, l)`` or ``None``."""
        a = math.pi / self.n
        for k in range(self.k_max + 1):
            for l in range(self.k_max + 1):
                s = k * self.rho + l * self.lam
                if min(abs(a - s), abs(2 * a - s), abs(2 * a + s)) <= self.eps_gen:
                    return (k, l)
        return None


@dataclass(frozen=True)
class PeriodTriple:
    """Quasi-periods of a double (2 entries) or triple (3 entries) sine."""

    omega: tuple[float, ...] = field(default=())

    def __post_init__(self) -> None:
        om = tuple(float(w) for w in self.omega)
        if len(om) not in (2, 3):
            raise ConfigInvalid("a period list must have 2 or 3 entries")
        if any(not (w > 0 and math.isfinite(w)) for w in om):
            raise ConfigInvalid(f"periods must be positive, got {om}")
        object.__setattr__(self, "omega", om)


def _periods(periods, size: int) -> tuple[float, ...]:
    om = periods.omega if isinstance(periods, PeriodTriple) else tuple(float(w) for w in periods)
    if len(om) != size:
        raise ConfigInvalid(f"expected {size} periods, got {len(om)}")
    if any(not (w > 0) for w in om):
        raise ConfigInvalid(f"periods must be positive, got {om}")
    return om


def _nodes(max_abs_im_c: float, om: tuple[float, ...]) -> tuple[np.ndarray, float]:
    # Offset trapezoid nodes on (0, T); the integrands are even in t so the
    # half-line rule inherits the exponential accuracy of the full-line rule.
    d = 0.9 * math.pi / max(om)
    h = 2.0 * math.pi * d / (_DIGITS + max_abs_im_c * d + 3.0)
    T = (_DIGITS + 5.0) / min(om)
    k = np.arange(int(T / h) + 1)
    return (k + 0.5) * h, h


def _chunks(x: np.ndarray, nt: int):
    step = max(1, _CHUNK // max(nt, 1))
    for i in range(0, x.size, step):
        yield slice(i, i + step)


def _log_s2_strip(x: np.ndarray, om: tuple[float, float]) -> np.ndarray:
    w1, w2 = om
    W = w1 + w2
    c = 2.0 * x - W
    t, h = _nodes(float(np.max(np.abs(c.imag), initial=0.0)), om)
    den = (-np.expm1(-2 * w1 * t)) * (-np.expm1(-2 * w2 * t))
    gauss = np.exp(-t * t) / (t * t)
    out = np.empty_like(x)
    for sl in _chunks(x, t.size):
        cc = c[sl, None]
        num = np.exp((cc - W) * t) - np.exp((-cc - W) * t)
        f = num / den / t - cc / (2 * w1 * w2) * gauss
        out[sl] = h * f.sum(axis=1) - c[sl] * _SQPI / (2 * w1 * w2)
    return out


def _log_s3_strip(x: np.ndarray, om: tuple[float, float, float]) -> np.ndarray:
    W = sum(om)
    P = om[0] * om[1] * om[2]
    c = W - 2.0 * x
    t, h = _nodes(float(np.max(np.abs(c.imag), initial=0.0)), om)
    den = np.prod([-np.expm1(-2 * w * t) for w in om], axis=0)
    a3 = 1.0 / (4 * P)
    s2 = sum(w * w for w in om) / 6.0
    e = np.exp(-t * t)
    out = np.empty_like(x)
    for sl in _chunks(x, t.size):
        cc = c[sl, None]
        c1 = (cc * cc / 2 - s2) / (4 * P)
        num = np.exp((cc - W) * t) + np.exp((-cc - W) * t)
        f = num / den / t - e * (a3 / t**4 + (c1 + a3) / t**2)
        c1s = (c[sl] * c[sl] / 2 - s2) / (4 * P)
        out[sl] = -h * f.sum(axis=1) + a3 * _SQPI / 3 + c1s * _SQPI
    return out


def _lattice_distance(y: np.ndarray, om: tuple[float, ...]) -> np.ndarray:
    """Distance from ``y`` to the cone ``sum_i om_i * Z_{>=0}``."""
    if len(om) == 1:
        l = np.clip(np.round(y.real / om[0]), 0, None)
        return np.abs(y - l * om[0])
    w, rest = om[0], om[1:]
    kmax = int(max(0.0, float(np.max(y.real, initial=0.0))) / w) + 1
    best = np.full(y.shape, np.inf)
    for k in range(kmax + 1):
        best = np.minimum(best, _lattice_distance(y - k * w, rest))
    return best


def _check_lattices(x: np.ndarray, om: tuple[float, ...], kind: str) -> None:
    eps = _POLE_EPS * min(om)
    W = sum(om)
    zero_d = _lattice_distance(-x, om)
    far_d = _lattice_distance(x - W, om)
    checks = (("zero lattice", zero_d), ("pole lattice" if kind == "S2" else "zero lattice", far_d))
    for name, d in checks:
        hit = d <= eps
        if np.any(hit):
            pt = complex(x[np.argmax(hit)])
            raise PoleOrZero(f"{kind} evaluated on its {name} at x={pt}", lattice=name, point=pt)


def _as_array(x) -> tuple[np.ndarray, bool]:
    arr = np.asarray(x, dtype=complex)
    return arr.reshape(-1), arr.ndim == 0


def _reduce_counts(xr: np.ndarray, W: float, wk: float) -> np.ndarray:
    # number of wk-steps that bring Re x into [W/2 - wk/2, W/2 + wk/2]
    return np.ceil((xr - (W / 2 + wk / 2)) / wk).clip(0) - np.ceil(((W / 2 - wk / 2) - xr) / wk).clip(0)


def _log_s2_vec(x: np.ndarray, om: tuple[float, float]) -> np.ndarray:
    W = om[0] + om[1]
    k = 0 if om[0] >= om[1] else 1
    wk, wo = om[k], om[1 - k]
    steps = _reduce_counts(x.real, W, wk).astype(int)
    acc = np.zeros_like(x)
    y = x.copy()
    for s in range(int(steps.max(initial=0))):
        m = steps > s
        y[m] -= wk
        acc[m] -= np.log(2 * np.sin(np.pi * y[m] / wo))
    for s in range(int((-steps).max(initial=0))):
        m = -steps > s
        acc[m] += np.log(2 * np.sin(np.pi * y[m] / wo))
        y[m] += wk
    return acc + _log_s2_strip(y, om)


def _log_s3_vec(x: np.ndarray, om: tuple[float, float, float]) -> np.ndarray:
    W = sum(om)
    k = int(np.argmax(om))
    wk = om[k]
    rest = tuple(w for i, w in enumerate(om) if i != k)
    steps = _reduce_counts(x.real, W, wk).astype(int)
    acc = np.zeros_like(x)
    y = x.copy()
    for s in range(int(steps.max(initial=0))):
        m = steps > s
        y[m] -= wk
        acc[m] -= _log_s2_vec(y[m], rest)
    for s in range(int((-steps).max(initial=0))):
        m = -steps > s
        acc[m] += _log_s2_vec(y[m], rest)
        y[m] += wk
    return acc + _log_s3_strip(y, om)


@lru_cache(maxsize=65536)
def _log_s2_cached(xr: float, xi: float, om: tuple[float, float]) -> complex:
    return complex(_log_s2_vec(np.array([complex(xr, xi)]), om)[0])


@lru_cache(maxsize=65536)
def _log_s3_cached(xr: float, xi: float, om: tuple[float, float, float]) -> complex:
    return complex(_log_s3_vec(np.array([complex(xr, xi)]), om)[0])


def _finish(out: np.ndarray, scalar: bool):
    if not np.all(np.isfinite(out)):
        raise NonConvergence("multiple sine quadrature produced a non-finite value")
    return complex(out[0]) if scalar else out


def log_double_sine(x, periods, check: bool = True):
    """Logarithm of ``S_2(x|w1, w2)`` (any branch; only ``exp`` is meaningful)."""
    om = _periods(periods, 2)
    arr, scalar = _as_array(x)
    if check:
        _check_lattices(arr, om, "S2")
    if scalar:
        z = arr[0]
        return _finish(np.array([_log_s2_cached(round(z.real, 14), round(z.imag, 14), om)]), True)
    return _finish(_log_s2_vec(arr, om), False).reshape(np.shape(x))


def double_sine(x, periods):
    """``S_2(x|w1, w2)``; raises :class:`PoleOrZero` on the lattices."""
    return np.exp(log_double_sine(x, periods))


def log_triple_sine(x, periods, check: bool = True):
    """Logarithm of ``S_3(x|w1, w2, w3)``."""
    om = _periods(periods, 3)
    arr, scalar = _as_array(x)
    if check:
        _check_lattices(arr, om, "S3")
    if scalar:
        z = arr[0]
        return _finish(np.array([_log_s3_cached(round(z.real, 14), round(z.imag, 14), om)]), True)
    return _finish(_log_s3_vec(arr, om), False).reshape(np.shape(x))


def triple_sine(x, periods):
    """``S_3(x|w1, w2, w3)``; raises :class:`PoleOrZero` on its zeros."""
    return np.exp(log_triple_sine(x, periods))


def s_factor(beta, p: ModelParams):
    """Normalisation factor ``s(beta)`` built from ``S_2(.|rho, 2*pi)``.

    The factor ``S_2(-i beta)/S_2(i beta)`` is rewritten with one shift by
    ``rho`` so that the removable singularity at ``beta = 0`` disappears;
    the value there is ``-1``.
    """
    om = (p.rho, 2 * math.pi)
    a = 2 * (p.n - 1) * math.pi / p.n
    b = np.asarray(beta, dtype=complex)
    val = (
        log_double_sine(p.rho - 1j * b, om)
        - log_double_sine(p.rho + 1j * b, om)
        + log_double_sine(1j * b + a, om)
        - log_double_sine(-1j * b + a, om)
    )
    return -np.exp(val)


def log_varphi(beta, p: ModelParams):
    """``log`` of the two-point kernel ``varphi`` (vectorised)."""
    om = (p.rho, p.lam)
    b = np.asarray(beta, dtype=complex)
    a = math.pi / p.n
    return -(log_double_sine(1j * b - a, om) + log_double_sine(-1j * b - a, om))


def varphi(beta, p: ModelParams):
    """Two-point kernel ``1/(S_2(i b - pi/n|rho, lam) S_2(-i b - pi/n|rho, lam))``."""
    return np.exp(log_varphi(beta, p))


def varphi_pole_heights(p: ModelParams, top: float, bottom: float) -> tuple[list[float], list[float]]:
    """Imaginary offsets of the poles of ``varphi`` inside ``[bottom, top]``.

    Returns ``(lower, upper)``: the first family ``pi/n - k*rho - l*lam`` (to
    be kept below an integration line) and the second family
    ``-pi/n + k*rho + l*lam`` (to be kept above).
    """
    a = math.pi / p.n
    lower: list[float] = []
    upper: list[float] = []
    kmax = int(max(0.0, top - bottom + 2 * a) / p.rho) + 2
    lmax = int(max(0.0, top - bottom + 2 * a) / p.lam) + 2
    for k in range(kmax + 1):
        for l in range(lmax + 1):
            s = k * p.rho + l * p.lam
            if bottom <= a - s <= top:
                lower.append(a - s)
            if bottom <= s - a <= top:
                upper.append(s - a)
    return lower, upper


def psi_level0(beta, p: ModelParams):
    """Level-0 form ``1/(2i sh(n(beta - 2 pi i/n)/4))``."""
    b = np.asarray(beta, dtype=complex)
    den = 2j * np.sinh(p.n * (b - 2j * math.pi / p.n) / 4)
    if np.any(np.abs(den) <= _POLE_EPS):
        raise PoleOrZero("psi evaluated at its pole", lattice="2*pi*i/n + 4*pi*i*Z/n")
    return 1.0 / den


def psi_generic(beta, p: ModelParams):
    """``1/(S_2(i b + 2 pi/n|rho, lam) S_2(-i b + 2 pi/n|rho, lam))``."""
    om = (p.rho, p.lam)
    b = np.asarray(beta, dtype=complex)
    a = 2 * math.pi / p.n
    return np.exp(-(log_double_sine(1j * b + a, om) + log_double_sine(-1j * b + a, om)))


def h_factor(beta, p: ModelParams, period: float | None = None):
    """``sh(pi b/T) sh(pi(b - 2 pi i/n)/T) sh(pi(b + 2 pi i/n)/T)``, ``T = lam`` by default."""
    T = p.lam if period is None else float(period)
    b = np.asarray(beta, dtype=complex)
    c = 2j * math.pi / p.n
    out = np.sinh(math.pi * b / T) * np.sinh(math.pi * (b - c) / T) * np.sinh(math.pi * (b + c) / T)
    return complex(out) if out.ndim == 0 else out


def e_lambda(beta, p: ModelParams):
    """Two-point function ``E_lam`` with unit normalisation constant.

    Ratio of four ``S_3(.|rho, lam, 2 pi)`` values; the overall constant is
    set to 1.
    """
    om = (p.rho, p.lam, 2 * math.pi)
    b = np.asarray(beta, dtype=complex)
    c = 2 * math.pi / p.n + p.rho
    val = (
        log_triple_sine(-1j * b, om)
        + log_triple_sine(1j * b + p.lam, om)
        - log_triple_sine(c - 1j * b, om)
        - log_triple_sine(c + 1j * b + p.lam, om)
    )
    return np.exp(val)
