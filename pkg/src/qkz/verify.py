"""Executable checks of the exchange, shift and convergence statements and of
the qKZ equation itself, plus assembly of the solution vector."""

from __future__ import annotations

import itertools
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import NotConvergent
from .forms import (
    PINNED_CONVENTION,
    Convention,
    G_J,
    WeightProfile,
    enumerate_assignments,
    g_J,
    skew_layers,
    w_J,
)
from .pairing import (
    PairingResult,
    build_contours,
    convergence_witness,
    integrand,
    min_tail_slope,
    normalize_spec,
    pair_batch,
    shifted_pair_batch,
    tail_slope,
)
from .rmat import TensorState, qkz_rhs, r_modified
from .specfn import ModelParams, varphi

__all__ = [
    "SolutionVector",
    "check_lemma1",
    "check_skew_annihilation",
    "check_w_shift_sign",
    "check_varphi_shift",
    "check_lemma2",
    "solve",
    "qkz_residual",
    "check_solution_exchange",
    "check_convergence_condition",
    "fit_decay_rate",
]

_FLOOR = 1e-12


def _rand_complex(rng: np.random.Generator, k: int, im: float = 0.5) -> list[complex]:
    return list(rng.normal(size=k) + 1j * im * rng.normal(size=k))


def check_lemma1(
    n: int,
    N: int = 2,
    trials: int = 20,
    rho: float = 1.7,
    seed: int = 0,
    convention: Convention | str = PINNED_CONVENTION,
    tol: float = 1e-9,
) -> dict:
    """Pointwise exchange identity for ``w_J`` under swapping the two spectral parameters."""
    if N != 2:
        raise ValueError("the exchange identity is checked for N = 2")
    p = ModelParams(n, rho)
    rng = np.random.default_rng(seed)
    worst = 0.0
    per_pair = {}
    for j1, j2 in itertools.product(range(n), repeat=2):
        sizes = [sum(1 for j in (j1, j2) if j >= k) for k in range(n)]
        pw = 0.0
        for _ in range(trials):
            gam = [_rand_complex(rng, k) for k in sizes]
            b1, b2 = gam[0]
            lhs = w_J((j2, j1), [[b2, b1], *gam[1:]], p, convention)
            R = r_modified(b1, b2, p)
            rhs = sum(R.entry(up, (j1, j2)) * w_J(up, gam, p, convention) for up in sorted({(j1, j2), (j2, j1)}))
            pw = max(pw, abs(lhs - rhs) / max(abs(lhs), abs(rhs), 1e-300))
        per_pair[f"{j1},{j2}"] = pw
        worst = max(worst, pw)
    return {
        "check": "lemma1",
        "n": n,
        "rho": rho,
        "convention": Convention(convention).value,
        "seed": seed,
        "trials": trials,
        "max_residual": worst,
        "per_pair": per_pair,
        "tol": tol,
        "pass": worst < tol,
    }


def check_skew_annihilation(n: int, rho: float = 1.3, seed: int = 0, tol: float = 1e-9) -> dict:
    """``Skew_l o ... o Skew_1`` of the exchange defect of ``g_{(l+1,l)}`` vanishes."""
    p = ModelParams(n, rho)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for l in range(n - 1):
        gam = [_rand_complex(rng, 2) for _ in range(l + 1)] + [_rand_complex(rng, 1)]
        gam += [[] for _ in range(n - l - 2)]

        def X(gg, l=l):
            b1, b2 = gg[0]
            R = r_modified(b1, b2, p)
            sw = [[b2, b1], *gg[1:]]
            return (
                g_J((l + 1, l), sw, p)
                - R.entry((l + 1, l), (l, l + 1)) * g_J((l + 1, l), gg, p)
                - R.entry((l, l + 1), (l, l + 1)) * g_J((l, l + 1), gg, p)
            )

        v = skew_layers(X, gam, range(1, l + 1))
        scale = abs(g_J((l + 1, l), gam, p))
        worst = max(worst, abs(v) / scale)
    return {"check": "skew_annihilation", "n": n, "max_residual": worst, "pass": worst < tol}


def _expected_w_sign(N: int, nu_full: Sequence[int], jN: int) -> int:
    return (-1) ** (N + nu_full[jN] + nu_full[jN + 1])


def check_w_shift_sign(ns: Sequence[int] = (2, 3), Ns: Sequence[int] = (1, 2, 3), rho: float = 1.3, seed: int = 0) -> dict:
    """Sign picked up by ``W_K`` when the slots tied to position N move by ``4 pi i/n``.

    The observed sign is compared with ``(-1)^(N + nu_{j_N} + nu_{j_N+1})``.
    """
    rng = np.random.default_rng(seed)
    total = agree = 0
    failures = []
    for n in ns:
        p = ModelParams(n, rho)
        for N in Ns:
            for J in itertools.product(range(n), repeat=N):
                wp = WeightProfile.of(J, n)
                full = wp.full
                for Ka in enumerate_assignments(wp):
                    gam = [_rand_complex(rng, full[j], 0.4) for j in range(n)]
                    W0 = skew_layers(lambda gg: G_J(Ka.J, gg, p), gam, range(1, n))
                    jN = J[-1]
                    g2 = [list(x) for x in gam]
                    for j in range(jN + 1):
                        g2[j][-1] += 4j * math.pi / n
                    W1 = skew_layers(lambda gg: G_J(Ka.J, gg, p), g2, range(1, n))
                    expected = _expected_w_sign(N, full, jN)
                    total += 1
                    if abs(W1 - expected * W0) <= 1e-9 * abs(W0):
                        agree += 1
                    else:
                        failures.append((n, J, Ka.J, complex(W1 / W0)))
    return {"check": "w_shift_sign", "cases": total, "agree": agree, "failures": failures[:10], "pass": agree == total}


def check_varphi_shift(p: ModelParams, samples: int = 25, seed: int = 0, tol: float = 1e-8) -> dict:
    """``varphi(b + 4 pi i/n)/varphi(b) = -sh(pi(b - pi i/n)/rho)/sh(pi(b + 5 pi i/n)/rho)``."""
    rng = np.random.default_rng(seed)
    b = rng.normal(size=samples) * 3
    n, rho = p.n, p.rho
    ratio = varphi(b + 4j * math.pi / n, p) / varphi(b, p)
    pred = -np.sinh(math.pi / rho * (b - 1j * math.pi / n)) / np.sinh(math.pi / rho * (b + 5j * math.pi / n))
    worst = float(np.max(np.abs(ratio / pred - 1)))
    return {"check": "varphi_shift", "max_residual": worst, "pass": worst < tol}


def _rel(a: complex, b: complex) -> float:
    return abs(a - b) / max(abs(b), 1e-300)


def check_lemma2(
    wp: WeightProfile,
    betas: Sequence[float],
    J: Sequence[int],
    W_choice,
    p: ModelParams,
    eps: float = 1e-8,
    tol: float = 1e-4,
) -> dict:
    """Shift identity: continuation of the rotated pairing against the plain one.

    Left side: ``I(g_Jbar(b_N, b_1, ..., b_{N-1}), W(b))`` continued to
    ``b_N - 4 pi i/n``. Right side: ``I(g_J(b), W(b))``.
    """
    N = wp.N
    J = tuple(J)
    Jbar = J[-1:] + J[:-1]
    perm = [N - 1] + list(range(N - 1))
    plan = build_contours(wp, betas, p, eps)
    lhs = shifted_pair_batch([Jbar], W_choice, betas, plan, p, -1j * p.lam, wp=wp, mode="g", w_perm=perm)[0]
    rhs = pair_batch([J], W_choice, betas, plan, p, wp=wp, mode="g")[0]
    res = _rel(lhs.value, rhs.value)
    err = (lhs.abs_error_estimate + rhs.abs_error_estimate) / abs(rhs.value)
    return {
        "check": "lemma2",
        "n": p.n,
        "rho": p.rho,
        "nu": list(wp.nu),
        "betas": list(betas),
        "J": list(J),
        "lhs": lhs.value,
        "rhs": rhs.value,
        "residual": res,
        "error_estimate": err,
        "tol": tol,
        "pass": res < tol and res <= 10 * err + _FLOOR,
    }


@dataclass(frozen=True)
class SolutionVector:
    """Components ``I(w_J, W)`` of the solution, keyed by assignment tuple."""

    wp: WeightProfile
    betas: tuple[complex, ...]
    components: Mapping[tuple[int, ...], PairingResult]
    W_choice: tuple

    def state(self) -> TensorState:
        return TensorState(self.wp.n, self.wp.N, {J: r.value for J, r in self.components.items()})

    def max_error(self) -> float:
        return max((r.abs_error_estimate for r in self.components.values()), default=0.0)

    @property
    def weight(self) -> tuple[int, ...]:
        return self.wp.weight


def _batch_worker(args):
    Js, W_choice, betas, plan, n, rho, nu, N, shift, leg = args
    p = ModelParams(n, rho)
    wp = WeightProfile(n, N, tuple(nu))
    if shift:
        return shifted_pair_batch(Js, W_choice, betas, plan, p, shift, leg, wp=wp)
    return pair_batch(Js, W_choice, betas, plan, p, wp=wp)


def _default_jobs(jobs: int | None) -> int:
    if jobs is not None:
        return max(1, int(jobs))
    return max(1, int(os.environ.get("QKZ_JOBS", "1")))


def _components(wp, betas, W_choice, p, eps, jobs, shift=0j, leg=None):
    Js = [a.J for a in enumerate_assignments(wp)]
    plan = build_contours(wp, [complex(b).real for b in betas], p, eps)
    jobs = _default_jobs(jobs)
    W_norm = normalize_spec(W_choice, p.n)
    if jobs == 1 or len(Js) == 1:
        res = _batch_worker((Js, W_norm, list(betas), plan, p.n, p.rho, wp.nu, wp.N, shift, leg))
    else:
        chunks = [Js[i::jobs] for i in range(jobs) if Js[i::jobs]]
        args = [(c, W_norm, list(betas), plan, p.n, p.rho, wp.nu, wp.N, shift, leg) for c in chunks]
        with ProcessPoolExecutor(max_workers=len(chunks)) as ex:
            parts = list(ex.map(_batch_worker, args))
        byJ = {J: r for c, part in zip(chunks, parts) for J, r in zip(c, part)}
        res = [byJ[J] for J in Js]
    return dict(zip(Js, res))


def solve(
    wp: WeightProfile,
    betas: Sequence[complex],
    W_choice,
    p: ModelParams,
    eps: float = 1e-6,
    jobs: int | None = None,
) -> SolutionVector:
    """``f_W(b) = sum_J I(w_J, W)(b) v_J`` over the assignments of the profile."""
    if not wp.weyl_positive:
        raise NotConvergent(f"profile {wp.full} lies outside the positive Weyl chamber")
    comps = _components(wp, betas, W_choice, p, eps, jobs)
    return SolutionVector(wp, tuple(complex(b) for b in betas), comps, normalize_spec(W_choice, p.n))


def qkz_residual(
    wp: WeightProfile,
    betas: Sequence[float],
    W_choice,
    p: ModelParams,
    r: int | None = None,
    eps: float = 1e-6,
    tol: float = 1e-4,
    jobs: int | None = None,
) -> dict:
    """Relative residual of the qKZ equation for leg ``r`` (default N).

    The left side is the continuation of the solution to ``b_r - lam i``;
    the right side applies the R-matrix product to the solution at ``b``.
    """
    N = wp.N
    r = N if r is None else int(r)
    sol = solve(wp, betas, W_choice, p, eps, jobs)
    shifted = _components(wp, betas, W_choice, p, eps, jobs, shift=-1j * p.lam, leg=r)
    rhs = qkz_rhs(sol.state(), r, list(sol.betas), p)
    Js = list(sol.components)
    lhs = np.array([shifted[J].value for J in Js])
    rv = np.array([rhs[J] for J in Js])
    scale = float(np.max(np.abs(rv)))
    res = float(np.max(np.abs(lhs - rv))) / scale
    # error propagated through the R-matrix product: bound by its row sums
    vec = TensorState(p.n, N, {J: 1.0 for J in Js})
    gain = max(abs(v) for v in qkz_rhs(vec, r, list(sol.betas), p).amplitudes.values())
    err = (max(s.abs_error_estimate for s in shifted.values()) + gain * sol.max_error()) / scale
    return {
        "check": "qkz",
        "n": p.n,
        "rho": p.rho,
        "nu": list(wp.nu),
        "N": N,
        "r": r,
        "betas": [complex(b) for b in betas],
        "residual": res,
        "error_estimate": err,
        "tol": tol,
        "components": {",".join(map(str, J)): [complex(a), complex(b)] for J, a, b in zip(Js, lhs, rv)},
        "pass": res < tol and res <= 10 * err + _FLOOR,
    }


def check_solution_exchange(
    betas: Sequence[float], W_choice, p: ModelParams, eps: float = 1e-6, tol: float = 1e-4
) -> dict:
    """Integrated exchange identity for N = 2.

    ``I(w_{(j2,j1)}(b2, b1), W) = sum R^{up}_{(j1,j2)}(b1, b2) I(w_up(b1, b2), W)``
    with the same ``W`` on both sides.
    """
    b1, b2 = betas
    Ws = normalize_spec(W_choice, p.n)
    wp = WeightProfile.of(Ws[0][1], p.n)
    if wp.N != 2:
        raise ValueError("the exchange check needs N = 2")
    Js = [a.J for a in enumerate_assignments(wp)]
    plan = build_contours(wp, betas, p, eps)
    swapped = pair_batch([(J[1], J[0]) for J in Js], Ws, betas, plan, p, wp=wp, w_perm=[1, 0])
    plain = dict(zip(Js, pair_batch(Js, Ws, betas, plan, p, wp=wp)))
    R = r_modified(b1, b2, p)
    worst = 0.0
    errs = 0.0
    for (j1, j2), lhs in zip(Js, swapped):
        rhs = sum(R.entry(up, (j1, j2)) * plain[up].value for up in sorted({(j1, j2), (j2, j1)}))
        worst = max(worst, _rel(lhs.value, rhs))
        errs = max(errs, (lhs.abs_error_estimate + 2 * max(r.abs_error_estimate for r in plain.values())) / abs(rhs))
    return {"check": "solution_exchange", "residual": worst, "error_estimate": errs, "pass": worst < tol}


def check_convergence_condition(n_max: int = 4, N_max: int = 5) -> dict:
    """Exhaustive sign check of the tail slopes over all profiles and occupancies."""
    positive = counterexamples = violating = detected = 0
    examples = []
    for n in range(2, n_max + 1):
        for N in range(1, N_max + 1):
            for nu in itertools.product(range(N + 1), repeat=n - 1):
                if any(nu[i] < nu[i + 1] for i in range(len(nu) - 1)):
                    continue
                wp = WeightProfile(n, N, nu)
                if wp.weyl_positive:
                    positive += 1
                    for x in itertools.product(*(range(v + 1) for v in nu)):
                        if any(x) and tail_slope(wp, x) <= 0:
                            counterexamples += 1
                            examples.append((n, N, nu, x))
                else:
                    violating += 1
                    if convergence_witness(wp) is not None:
                        detected += 1
    return {
        "check": "convergence",
        "n_max": n_max,
        "N_max": N_max,
        "profiles_checked": positive,
        "counterexamples": counterexamples,
        "examples": examples[:10],
        "violating_profiles": violating,
        "violating_with_witness": detected,
        "pass": counterexamples == 0,
    }


def fit_decay_rate(
    p: ModelParams,
    wp: WeightProfile,
    J: Sequence[int],
    K: Sequence[int],
    betas: Sequence[float],
    radii: tuple[float, float] = (20.0, 30.0),
    tol: float = 1e-2,
) -> dict:
    """Fit the exponential decay of the integrand along the real line (one variable).

    Passes when every side decays at least at ``(pi/2 rho) min M`` and the
    slowest side matches it.
    """
    if wp.dimension != 1:
        raise ValueError("decay fit is implemented for one integration variable")
    predicted = math.pi / (2 * p.rho) * min_tail_slope(wp)
    c = float(np.mean(np.real(betas)))
    fits = {}
    for side in (1, -1):
        pts = [c + side * r for r in radii]
        vals = [abs(complex(integrand(tuple(J), tuple(K), [list(betas), [x]] + [[] for _ in range(p.n - 2)], p))) for x in pts]
        fits["right" if side > 0 else "left"] = -(math.log(vals[1]) - math.log(vals[0])) / (radii[1] - radii[0])
    # the predicted rate bounds the decay from below and is attained on the slow side
    slowest = min(fits.values())
    dev = abs(slowest / predicted - 1)
    bounded = all(v >= predicted * (1 - tol) for v in fits.values())
    return {
        "check": "decay",
        "predicted": predicted,
        "fitted": fits,
        "slowest_rel_dev": dev,
        "pass": dev < tol and bounded,
    }
