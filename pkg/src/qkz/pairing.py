"""Level-0 hypergeometric pairing ``I(w, W)``.

Every integration variable ``gamma_{j,m}`` (j >= 1) runs over a contour that
must keep the kernel poles ``gamma_{j-1,m'} + i(pi/n - k rho - l lam)`` below
it and ``gamma_{j-1,m'} + i(-pi/n + k rho + l lam)`` above it. Both families
straddle the real axis, so no single horizontal line works. The contour is
realised as a horizontal line at a height ``eta`` chosen for clearance, plus
``-2 pi i Res`` for each first-family pole above the line and ``+2 pi i Res``
for each second-family pole below it. The result does not depend on ``eta``
and is analytic in the spectral parameters, so evaluating it at complex
``beta`` gives the analytic continuation directly.

Variables are integrated layer by layer (layer 1 outermost). The contour of a
variable depends only on the current values of the previous layer, and the
innermost variable is evaluated on a vector of nodes. Residues are computed
with the trapezoid rule on small circles. The error estimate compares the
result with a rerun at half the step and twice the circle resolution.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence, Union

import numpy as np

from .errors import ContourPinch, NotConvergent, PoleCrossing, ToleranceNotMet
from .forms import Assignment, W_J, WeightProfile, g_J, w_J
from .specfn import ModelParams, log_varphi

__all__ = [
    "DecayInfo",
    "ContourPlan",
    "PairingResult",
    "tail_slope",
    "min_tail_slope",
    "convergence_witness",
    "exponent_H",
    "decay_exponent",
    "build_contours",
    "normalize_spec",
    "pair",
    "pair_batch",
    "shifted_pair",
    "shifted_pair_batch",
    "integrand",
]

FormSpec = Union[Assignment, Sequence[int], Mapping, Sequence[tuple]]

_CIRCLE_POINTS = 24
_MAX_RADIUS = 0.3
_PINCH_EPS = 1e-6


# ---------------------------------------------------------------------------
# convergence exponent


def tail_slope(wp: WeightProfile, x: Sequence[int]) -> int:
    """``M(x)`` for occupancy ``x = (x_1, ..., x_{n-1})`` of the far side of a gap."""
    f = wp.full
    x = list(x)
    lin = sum((f[j - 1] + f[j + 1] - 2 * f[j]) * x[j - 1] for j in range(1, wp.n))
    quad = sum(v * v for v in x) - sum(x[i] * x[i + 1] for i in range(len(x) - 1))
    return lin + 2 * quad


def _occupancies(wp: WeightProfile):
    for x in itertools.product(*(range(v + 1) for v in wp.nu)):
        if any(x):
            yield x


def min_tail_slope(wp: WeightProfile) -> int:
    """Smallest ``M(x)`` over nonzero occupancies; positive iff the pairing converges."""
    vals = [tail_slope(wp, x) for x in _occupancies(wp)]
    return min(vals) if vals else 0


def convergence_witness(wp: WeightProfile) -> tuple[int, ...] | None:
    """An occupancy with ``M(x) <= 0``, or ``None``."""
    for x in _occupancies(wp):
        if tail_slope(wp, x) <= 0:
            return x
    return None


def exponent_H(wp: WeightProfile, gamma) -> float:
    """Piecewise-linear decay exponent at real points ``gamma[j][m]``."""
    H = 0.0
    for j in range(1, wp.n):
        for a in gamma[j]:
            H += sum(abs(a - b) for b in gamma[j - 1])
        for a, b in itertools.combinations(gamma[j], 2):
            H -= 2 * abs(a - b)
    return H


@dataclass(frozen=True)
class DecayInfo:
    """Gap slopes of ``H`` along an ordering, and the minimal tail slope."""

    slopes: tuple[int, ...]
    tail_min: int
    rate: float


def decay_exponent(wp: WeightProfile, ordering: Sequence[tuple[int, int]], rho: float = 1.0) -> DecayInfo:
    """Slopes ``M_l`` of ``H`` for points arranged in the given left-to-right order.

    ``ordering`` lists labels ``(j, m)``; layer 0 labels are the spectral
    parameters. The slope across gap ``l`` is the rate at which ``H`` grows
    when everything right of the gap is translated to the right.
    """
    labels = [tuple(l) for l in ordering]
    expected = {(j, m) for j in range(wp.n) for m in range(wp.full[j])}
    if set(labels) != expected or len(labels) != len(expected):
        raise ValueError("ordering must list every (layer, slot) label exactly once")
    pos = {lab: i for i, lab in enumerate(labels)}
    slopes = []
    for gap in range(len(labels) - 1):
        s = 0
        for (a, b) in itertools.combinations(labels, 2):
            if (pos[a] <= gap) == (pos[b] <= gap):
                continue
            ja, jb = a[0], b[0]
            if abs(ja - jb) == 1:
                s += 1
            elif ja == jb and ja >= 1:
                s -= 2
        slopes.append(s)
    tm = min_tail_slope(wp)
    return DecayInfo(tuple(slopes), tm, math.pi / (2 * rho) * tm)


# ---------------------------------------------------------------------------
# contour plan


@dataclass(frozen=True)
class ContourPlan:
    """Quadrature parameters shared by all layers.

    ``eta`` records the line height picked for layer 1 at the planning
    spectral parameters; deeper layers pick heights on the fly. ``residues``
    lists ``(pole, sign)`` corrections of layer 1 at those parameters.
    """

    eps_target: float
    L: float
    h: float
    eta: tuple[float, ...]
    residues: tuple[tuple[complex, int], ...] = ()
    decay_rate: float = 0.0
    circle_points: int = _CIRCLE_POINTS

    def __post_init__(self) -> None:
        if not (self.L > 0 and self.h > 0):
            raise ValueError("L and h must be positive")


def _s_values(p: ModelParams, smax: float) -> list[float]:
    """Sorted values ``k*rho + l*lam <= smax`` (k, l >= 0)."""
    if smax < 0:
        return []
    out = []
    for k in range(int(smax / p.rho) + 1):
        for l in range(int((smax - k * p.rho) / p.lam) + 1):
            out.append(k * p.rho + l * p.lam)
    return sorted(out)


def _pole_heights(p: ModelParams, partners_im: Sequence[float], lo: float, hi: float) -> list[float]:
    a = math.pi / p.n
    out = []
    for y in partners_im:
        for s in _s_values(p, max(y + a - lo, hi - y + a)):
            for h in (y + a - s, y - a + s):
                if lo <= h <= hi:
                    out.append(h)
    return sorted(out)


def _choose_eta(p: ModelParams, partners: Sequence[complex]) -> tuple[float, float]:
    """Line height with maximal clearance from the pole heights, and that clearance."""
    ims = [complex(q).imag for q in partners]
    a = math.pi / p.n
    lo, hi = min(ims) - a, max(ims) + a
    heights = _pole_heights(p, ims, lo - 2 * a - 1.0, hi + 2 * a + 1.0)
    centre = 0.5 * (lo + hi)
    cands = [lo, hi, centre]
    for u, v in zip(heights, heights[1:]):
        mid = 0.5 * (u + v)
        if lo <= mid <= hi:
            cands.append(mid)
    best = None
    for c in sorted(set(cands)):
        clear = min((abs(c - h) for h in heights), default=1.0)
        key = (round(clear, 12), -abs(c - centre))
        if best is None or key > best[0]:
            best = (key, c, clear)
    return best[1], best[2]


def _misplaced(p: ModelParams, partners: Sequence[complex], eta: float) -> list[tuple[complex, int]]:
    """Poles on the wrong side of the line at ``eta`` with their correction sign."""
    a = math.pi / p.n
    out: list[tuple[complex, int]] = []
    for q in partners:
        q = complex(q)
        for s in _s_values(p, q.imag + a - eta):
            if q.imag + a - s > eta:
                out.append((q + 1j * (a - s), -1))
        for s in _s_values(p, eta - q.imag + a):
            if q.imag - a + s < eta:
                out.append((q + 1j * (s - a), +1))
    return out


def _nearby_poles(p: ModelParams, partners: Sequence[complex], z: complex, span: float) -> list[tuple[complex, int]]:
    """All kernel poles with imaginary part within ``span`` of ``z``, tagged by family."""
    a = math.pi / p.n
    out = []
    for q in partners:
        q = complex(q)
        for s in _s_values(p, abs(q.imag - z.imag) + span + a):
            for pt, fam in ((q + 1j * (a - s), -1), (q + 1j * (s - a), +1)):
                if abs(pt.imag - z.imag) <= span:
                    out.append((pt, fam))
    return out


def _residue_nodes(p: ModelParams, partners, eta: float, M: int):
    """Evaluation points and complex weights of the residue corrections."""
    poles = _misplaced(p, partners, eta)
    # merge coincident poles coming from different partners
    clusters: list[list] = []
    for pt, sgn in sorted(poles, key=lambda t: (round(t[0].imag, 9), round(t[0].real, 9), t[1])):
        for c in clusters:
            if abs(c[0] - pt) < 1e-9:
                if c[1] != sgn:
                    raise ContourPinch(f"pole at {pt} required on both sides of the contour")
                break
        else:
            clusters.append([pt, sgn])
    zs, ws = [], []
    th = 2 * math.pi * np.arange(M) / M
    for pt, sgn in clusters:
        others = [z for z, _ in _nearby_poles(p, partners, pt, 2.0) if abs(z - pt) >= 1e-9]
        dmin = min((abs(z - pt) for z in others), default=np.inf)
        if dmin < _PINCH_EPS:
            fams = {f for z, f in _nearby_poles(p, partners, pt, 2.0) if abs(z - pt) < _PINCH_EPS}
            if len(fams) > 1:
                raise ContourPinch(f"poles near {pt} are pinched (distance {dmin:.3g})")
        r = min(_MAX_RADIUS, 0.4 * dmin)
        u = r * np.exp(1j * th)
        zs.append(pt + u)
        ws.append(sgn * 2j * math.pi * u / M)
    if not zs:
        return np.zeros(0, complex), np.zeros(0, complex), 0
    return np.concatenate(zs), np.concatenate(ws), len(clusters)


def build_contours(wp: WeightProfile, betas, p: ModelParams, eps_target: float = 1e-6) -> ContourPlan:
    """Quadrature plan: truncation from the decay rate and step from the clearance."""
    if not wp.weyl_positive:
        raise NotConvergent(
            f"profile {wp.full} violates nu_(j-1) + nu_(j+1) >= 2 nu_j at j={wp.weyl_violations}"
        )
    if len(betas) != wp.N:
        raise ValueError(f"expected {wp.N} spectral parameters, got {len(betas)}")
    if not 0 < eps_target < 1:
        raise ValueError("eps_target must lie in (0, 1)")
    tm = max(min_tail_slope(wp), 1)
    rate = math.pi / (2 * p.rho) * tm
    logeps = math.log(10.0 / eps_target)
    L = 1.15 * logeps / rate + 2.0
    eta, clear = _choose_eta(p, list(betas))
    h = 2 * math.pi * 0.8 * clear / math.log(100.0 / eps_target)
    res = tuple((z, s) for z, s in _misplaced(p, list(betas), eta))
    return ContourPlan(eps_target, L, h, (eta,), res, rate)


# ---------------------------------------------------------------------------
# integrand and pairing


def normalize_spec(spec: FormSpec, n: int) -> tuple[tuple[complex, tuple[int, ...]], ...]:
    """Turn an assignment, a ``{J: coef}`` mapping or ``[(coef, J), ...]`` into a tuple."""
    if isinstance(spec, Assignment):
        return ((1.0, spec.J),)
    if isinstance(spec, Mapping):
        items = [(complex(c), tuple(Assignment(J, n).J)) for J, c in spec.items()]
    else:
        seq = list(spec)
        if seq and all(isinstance(v, (int, np.integer)) for v in seq):
            return ((1.0, Assignment(tuple(seq), n).J),)
        items = []
        for c, J in seq:
            J = J.J if isinstance(J, Assignment) else tuple(J)
            items.append((complex(c), Assignment(J, n).J))
    return tuple(sorted(items, key=lambda t: t[1]))


def _wfun(spec, p: ModelParams, mode: str, perm: Sequence[int] | None = None):
    def f(gamma):
        if perm is not None:
            gamma = [[gamma[0][i] for i in perm], *gamma[1:]]
        tot = 0
        for c, J in spec:
            if mode == "w":
                tot = tot + c * w_J(J, gamma, p)
            else:
                tot = tot + c * g_J(J, gamma, p)
        return tot

    return f


def _Wfun(spec, p: ModelParams):
    def f(gamma):
        tot = 0
        for c, K in spec:
            tot = tot + c * W_J(K, gamma, p)
        return tot

    return f


def integrand(w_spec, W_spec, gamma, p: ModelParams, mode: str = "w"):
    """Full integrand ``prod varphi * w * W`` at the layered point ``gamma``."""
    n = p.n
    ws = normalize_spec(w_spec, n)
    Ws = normalize_spec(W_spec, n)
    logk = 0
    for j in range(1, n):
        for a in gamma[j]:
            for b in gamma[j - 1]:
                logk = logk + log_varphi(np.asarray(a) - b, p)
    return np.exp(logk) * _wfun(ws, p, mode)(gamma) * _Wfun(Ws, p)(gamma)


@dataclass(frozen=True)
class PairingResult:
    """Value of the pairing with its step-halving error estimate."""

    value: complex
    abs_error_estimate: float
    node_counts: tuple[int, ...]
    decay_exponent_used: float
    boundary_ratio: float = 0.0
    residue_count: int = 0

    def to_json(self) -> dict:
        return {
            "value": [self.value.real, self.value.imag],
            "err": self.abs_error_estimate,
            "nodes": list(self.node_counts),
            "decay_rate": self.decay_exponent_used,
            "boundary_ratio": self.boundary_ratio,
            "residues": self.residue_count,
        }


@dataclass
class _Ctx:
    p: ModelParams
    wp: WeightProfile
    order: list
    w_items: list
    W_fun: object
    plan: ContourPlan
    refine: int
    centre_lo: float
    centre_hi: float
    node_counts: dict = field(default_factory=dict)
    boundary: list = field(default_factory=list)
    residues: int = 0
    memo: dict = field(default_factory=dict)


def _line_nodes(ctx: _Ctx, partners, eta: float, clear: float):
    plan = ctx.plan
    h = min(plan.h, 2 * math.pi * 0.8 * clear / math.log(100.0 / plan.eps_target)) / ctx.refine
    re = [complex(q).real for q in partners]
    lo = min(re) - plan.L
    hi = max(re) + plan.L
    # nodes on a grid anchored at 0 so that refinement nests
    k0, k1 = math.floor(lo / h), math.ceil(hi / h)
    x = np.arange(k0, k1 + 1) * h
    return x + 1j * eta, np.full(x.size, h, dtype=complex)


def _eval_points(ctx: _Ctx, partners):
    eta, clear = _choose_eta(ctx.p, partners)
    zl, wl = _line_nodes(ctx, partners, eta, clear)
    zr, wr, nres = _residue_nodes(ctx.p, partners, eta, ctx.plan.circle_points * ctx.refine)
    return zl, wl, zr, wr, nres


def _layer_nodes(ctx: _Ctx, partners):
    # variables of one layer share their partners, so nodes and kernel are reused
    key = tuple(complex(q) for q in partners)
    hit = ctx.memo.get(key)
    if hit is None:
        zl, wl, zr, wr, nres = _eval_points(ctx, partners)
        Z = np.concatenate([zl, zr])
        Wt = np.concatenate([wl, wr])
        lk = sum(log_varphi(Z - q, ctx.p) for q in partners)
        hit = (Z, Wt, lk, zl.size, nres)
        if len(ctx.memo) < 4096:
            ctx.memo[key] = hit
    return hit


def _integrate(ctx: _Ctx, level: int, assigned: list[list], logk):
    j, m = ctx.order[level]
    partners = assigned[j - 1]
    Z, Wt, lk, nline, nres = _layer_nodes(ctx, partners)
    if level == 0:
        ctx.residues = nres
    ctx.node_counts.setdefault(j, nline)
    if level == len(ctx.order) - 1:
        gamma = [list(layer) for layer in assigned]
        gamma[j] = gamma[j] + [Z]
        kern = np.exp(logk + lk)
        Wv = ctx.W_fun(gamma) * kern
        vals = np.array([np.broadcast_to(c * wf(gamma) * Wv, Z.shape) for c, wf in ctx.w_items])
        if nline:
            # per component, so batching does not change any single result
            mag = np.abs(vals[:, :nline])
            ctx.boundary.append((np.maximum(mag[:, 0], mag[:, -1]), mag.max(axis=1)))
        # row-wise sums keep each component independent of the batch layout
        return np.sum(vals * Wt, axis=1)
    out = []
    for k in range(Z.size):
        nxt = [list(layer) for layer in assigned]
        nxt[j].append(Z[k])
        out.append(_integrate(ctx, level + 1, nxt, logk + lk[k]))
    return np.sum(np.array(out).T * Wt, axis=1)


def pair_batch(
    w_specs: Sequence[FormSpec],
    W_spec: FormSpec,
    betas,
    plan: ContourPlan | None,
    p: ModelParams,
    wp: WeightProfile | None = None,
    mode: str = "reduced",
    strict: bool = True,
    w_perm: Sequence[int] | None = None,
) -> list[PairingResult]:
    """Pair several ``w`` with one ``W`` on shared quadrature nodes.

    ``mode="reduced"`` integrates ``g_J`` and multiplies by ``prod_j nu_j!``,
    which equals the pairing with ``w_J`` because the kernel and contours
    are symmetric within each layer and ``W`` is antisymmetric there.
    ``mode="w"`` integrates ``w_J`` directly and ``mode="g"`` integrates
    ``g_J`` without the factorial. ``w_perm`` reorders the spectral
    parameters seen by ``w`` (``W`` always sees them as given).
    """
    n = p.n
    betas = [complex(b) for b in betas]
    Ws = normalize_spec(W_spec, n)
    wspecs = [normalize_spec(s, n) for s in w_specs]
    if wp is None:
        wp = WeightProfile.of(Ws[0][1], n)
    for spec in [Ws, *wspecs]:
        for _, J in spec:
            if WeightProfile.of(J, n) != wp:
                raise ValueError(f"assignment {J} does not belong to profile {wp.full}")
    if plan is None:
        plan = build_contours(wp, [b.real for b in betas], p)
    elif not wp.weyl_positive:
        raise NotConvergent(f"profile {wp.full} lies outside the positive Weyl chamber")
    factor = math.prod(math.factorial(v) for v in wp.nu)
    if w_perm is not None and sorted(w_perm) != list(range(wp.N)):
        raise ValueError("w_perm must be a permutation of range(N)")
    if mode == "reduced":
        items = [(factor, _wfun(s, p, "g", w_perm)) for s in wspecs]
    elif mode == "g":
        items = [(1.0, _wfun(s, p, "g", w_perm)) for s in wspecs]
    elif mode == "w":
        items = [(1.0, _wfun(s, p, "w", w_perm)) for s in wspecs]
    else:
        raise ValueError(f"unknown mode {mode!r}")
    order = [(j, m) for j in range(1, n) for m in range(wp.nu[j - 1])]
    if not order:
        # no integration variables: the pairing is the product of the forms
        gamma = [betas] + [[] for _ in range(n - 1)]
        W0 = _Wfun(Ws, p)(gamma)
        return [PairingResult(complex(c * f(gamma) * W0), 0.0, (), 0.0) for c, f in items]

    def run(refine: int):
        ctx = _Ctx(p, wp, order, items, _Wfun(Ws, p), plan, refine,
                   min(b.real for b in betas), max(b.real for b in betas))
        assigned = [list(betas)] + [[] for _ in range(n - 1)]
        vals = _integrate(ctx, 0, assigned, 0.0)
        return vals, ctx

    coarse, _ = run(1)
    fine, ctx = run(2)
    err = np.abs(fine - coarse)
    scale = float(np.max(np.abs(fine)))
    bratio = np.zeros(len(items))
    for b, m in ctx.boundary:
        bratio = np.maximum(bratio, np.divide(b, m, out=np.zeros_like(b), where=m > 0))
    counts = tuple(ctx.node_counts.get(j, 0) for j in range(1, n) if wp.nu[j - 1])
    results = [
        PairingResult(complex(v), float(e), counts, plan.decay_rate, float(br), ctx.residues)
        for v, e, br in zip(fine, err, bratio)
    ]
    if strict and scale > 0 and float(err.max()) > plan.eps_target * scale:
        raise ToleranceNotMet(
            f"step-halving error {float(err.max()):.3g} exceeds {plan.eps_target:.1g} x {scale:.3g}"
        )
    return results


def pair(w_spec: FormSpec, W_spec: FormSpec, betas, plan: ContourPlan | None, p: ModelParams, **kw) -> PairingResult:
    """Pairing ``I(w, W)(beta_1, ..., beta_N)`` with measure ``d gamma``."""
    return pair_batch([w_spec], W_spec, betas, plan, p, **kw)[0]


def _pinch_on_path(p: ModelParams, betas: Sequence[complex], idx: int, shift: complex) -> float | None:
    """Smallest path parameter where the moving lattice pinches a fixed one.

    Poles of partners ``q, q'`` in opposite families collide when
    ``Re(q - q') = 0`` and ``+-Im(q - q') + 2 pi/n`` lies in the lattice
    ``{k rho + l lam}``. Along a straight path this is solved exactly.
    """
    a = math.pi / p.n
    hits = []
    for k, q in enumerate(betas):
        if k == idx:
            continue
        d0 = complex(betas[idx]) - complex(q)
        if abs(shift.real) > 1e-12:
            t = -d0.real / shift.real
            if not -1e-12 <= t <= 1 + 1e-12:
                continue
            ts = [(t, t)]
        elif abs(d0.real) <= 1e-7:
            ts = [(0.0, 1.0)]
        else:
            continue
        for t0, t1 in ts:
            for sgn in (1, -1):
                y0 = sgn * (d0 + t0 * shift).imag + 2 * a
                y1 = sgn * (d0 + t1 * shift).imag + 2 * a
                lo, hi = min(y0, y1), max(y0, y1)
                for s in _s_values(p, hi + 1e-9):
                    if s < lo - 1e-9:
                        continue
                    if hi - lo < 1e-12:
                        hits.append(t0)
                    else:
                        hits.append(t0 + (t1 - t0) * (s - y0) / (y1 - y0))
    return min(hits) if hits else None


def shifted_pair(
    w_spec: FormSpec,
    W_spec: FormSpec,
    betas,
    plan: ContourPlan | None,
    p: ModelParams,
    shift: complex,
    leg: int | None = None,
    **kw,
) -> PairingResult:
    """Analytic continuation of :func:`pair` in ``beta_N`` to ``beta_N + shift``.

    Moving ``beta_N`` drags the contours of the variables tied to the last
    tensor position along with it; with the residue-corrected contours this
    is automatic, so the continued value is the pairing evaluated at the
    displaced parameter. A :class:`PoleCrossing` is raised when the path
    makes a pole of the moving lattice collide with one of a fixed lattice.
    ``leg`` (1-based, default N) selects which spectral parameter moves.
    """
    return shifted_pair_batch([w_spec], W_spec, betas, plan, p, shift, leg, **kw)[0]


def shifted_pair_batch(w_specs, W_spec, betas, plan, p: ModelParams, shift: complex, leg: int | None = None, **kw):
    """Batch form of :func:`shifted_pair`."""
    betas = [complex(b) for b in betas]
    idx = len(betas) - 1 if leg is None else leg - 1
    if not 0 <= idx < len(betas):
        raise ValueError(f"leg {leg} out of range")
    shift = complex(shift)
    t = _pinch_on_path(p, betas, idx, shift)
    if t is not None:
        raise PoleCrossing(f"continuation pinches the contour at path parameter t={t:.4f}")
    moved = list(betas)
    moved[idx] = betas[idx] + shift
    return pair_batch(w_specs, W_spec, moved, plan, p, **kw)
