"""Acceptance suite: one pass/fail line per criterion.

Run with ``pytest tests/test_acceptance.py`` (the lines appear in the terminal
summary) or directly with ``python tests/test_acceptance.py``.
"""

from __future__ import annotations

import math
import tempfile
from pathlib import Path

import numpy as np
import pytest

from qkz.cli import main as cli_main
from qkz.forms import PINNED_CONVENTION, WeightProfile, enumerate_assignments
from qkz.rmat import inversion_residual, ybe_residual
from qkz.specfn import ModelParams, double_sine, e_lambda, s_factor, triple_sine, varphi
from qkz.verify import (
    check_convergence_condition,
    check_lemma1,
    check_lemma2,
    check_varphi_shift,
    fit_decay_rate,
    qkz_residual,
)

RESULTS: dict[int, str] = {}


def _record(k: int, ok: bool, detail: str) -> bool:
    RESULTS[k] = f"ACCEPTANCE {k}: {'PASS' if ok else 'FAIL'}  {detail}"
    return ok


def criterion_1() -> bool:
    rng = np.random.default_rng(1)
    worst_sr = 0.0
    for om in [(2.0, 2 * math.pi), (2.0, math.pi), (1.7, 4 * math.pi / 3)]:
        W = sum(om)
        x = rng.uniform(0.05, W - 0.05, 100) + 1j * rng.uniform(-3, 3, 100)
        shift = double_sine(x + om[0], om) * 2 * np.sin(np.pi * x / om[1]) / double_sine(x, om) - 1
        refl = double_sine(x, om) * double_sine(W - x, om) - 1
        worst_sr = max(worst_sr, np.abs(shift).max(), np.abs(refl).max())
    for om in [(2.0, math.pi, 2 * math.pi), (1.7, 4 * math.pi / 3, 2 * math.pi)]:
        W = sum(om)
        x = rng.uniform(0.05, W - 0.05, 100) + 1j * rng.uniform(-3, 3, 100)
        shift = triple_sine(x + om[0], om) * double_sine(x, om[1:]) / triple_sine(x, om) - 1
        refl = triple_sine(W - x, om) / triple_sine(x, om) - 1
        worst_sr = max(worst_sr, np.abs(shift).max(), np.abs(refl).max())
    worst_phi = 0.0
    worst_rate = 0.0
    worst_e = 0.0
    for n, rho in [(2, 2.0), (3, 1.7)]:
        p = ModelParams(n, rho)
        worst_phi = max(worst_phi, check_varphi_shift(p, samples=100, seed=n)["max_residual"])
        rate = n / 4 + 3 * math.pi / (2 * rho)
        for sign in (1, -1):
            v1, v2 = np.abs(varphi(sign * np.array([15.0, 25.0]), p))
            worst_rate = max(worst_rate, abs(-(math.log(v2) - math.log(v1)) / 10 / rate - 1))
        b = rng.normal(size=50) * 2
        e = e_lambda(b, p)
        worst_e = max(
            worst_e,
            np.abs(e_lambda(1j * p.lam - b, p) / e - 1).max(),
            np.abs(e / e_lambda(-b, p) - s_factor(b, p)).max(),
        )
    ok = worst_sr < 1e-10 and worst_phi < 1e-8 and worst_rate < 1e-2 and worst_e < 1e-8
    return _record(
        1, ok,
        f"multiple sine shift/reflection {worst_sr:.1e} (<1e-10); kernel shift ratio {worst_phi:.1e} (<1e-8); "
        f"kernel decay rate dev {worst_rate:.1e} (<1e-2); two-point function identities {worst_e:.1e} (<1e-8)",
    )


def criterion_2() -> bool:
    rng = np.random.default_rng(2)
    worst_y = worst_i = 0.0
    for n, rho in [(2, 2.0), (3, 1.7), (4, 1.1)]:
        p = ModelParams(n, rho)
        for b1, b2, b3 in rng.normal(size=(50, 3)) * 2:
            for mod in (True, False):
                worst_y = max(worst_y, ybe_residual(b1, b2, b3, p, modified=mod))
                worst_i = max(worst_i, inversion_residual(b1, b2, p, modified=mod))
    ok = worst_y < 1e-10 and worst_i < 1e-10
    return _record(2, ok, f"Yang-Baxter {worst_y:.1e}, inversion {worst_i:.1e} (<1e-10) for n=2,3,4 x 50 triples")


def criterion_3() -> bool:
    reps = [check_lemma1(n, trials=20, seed=n) for n in (2, 3)]
    worst = max(r["max_residual"] for r in reps)
    ok = all(r["pass"] for r in reps) and worst < 1e-9
    return _record(3, ok, f"exchange identity {worst:.1e} (<1e-9), n=2,3, all index pairs; "
                          f"exponent convention={PINNED_CONVENTION.value}")


def criterion_4() -> bool:
    rep = check_convergence_condition(4, 5)
    fit = fit_decay_rate(ModelParams(2, 2.0), WeightProfile(2, 2, (1,)), (1, 0), (1, 0), (0.0, 0.7))
    ok = rep["pass"] and rep["counterexamples"] == 0 and fit["pass"]
    return _record(
        4, ok,
        f"{rep['profiles_checked']} profiles, {rep['counterexamples']} counterexamples; "
        f"decay rate dev {fit['slowest_rel_dev']:.1e} (<1e-2)",
    )


def criterion_5() -> bool:
    cases = [
        (ModelParams(2, 2.0), WeightProfile(2, 2, (1,)), (0.0, 0.7)),
        (ModelParams(3, 1.7), WeightProfile(3, 2, (1, 0)), (0.0, 0.7)),
    ]
    worst = 0.0
    ok = True
    for p, wp, betas in cases:
        Js = [a.J for a in enumerate_assignments(wp)]
        for J in Js:
            for W in Js:
                rep = check_lemma2(wp, betas, J, W, p, tol=1e-4)
                worst = max(worst, rep["residual"])
                ok = ok and rep["pass"]
    return _record(5, ok and worst < 1e-4, f"shift identity residual {worst:.1e} (<1e-4, bounded by error estimates)")


def criterion_6() -> bool:
    cases = [
        (ModelParams(2, 2.0), WeightProfile(2, 2, (1,)), [(0.0, 0.7), (-0.3, 0.9)], (1, 0), 1e-4),
        (ModelParams(3, 1.7), WeightProfile(3, 2, (1, 0)), [(0.0, 0.7), (0.4, -0.2)], (1, 0), 1e-4),
        (ModelParams(2, 2.0), WeightProfile(2, 3, (1,)), [(0.0, 0.7, -0.4), (0.5, -0.6, 1.1)], (1, 0, 0), 1e-3),
    ]
    parts = []
    ok = True
    for p, wp, sets, W, tol in cases:
        worst = 0.0
        for betas in sets:
            for r in range(1, wp.N + 1):
                rep = qkz_residual(wp, betas, W, p, r=r, tol=tol)
                worst = max(worst, rep["residual"])
                ok = ok and rep["pass"]
        parts.append(f"n={p.n},N={wp.N}: {worst:.1e} (<{tol:.0e})")
    return _record(6, ok, "qKZ residual " + "; ".join(parts))


def criterion_7() -> bool:
    runs = [
        ["verify", "--check", "all", "--config", "n2"],
        ["verify", "--check", "qkz", "--config", "n2_three_sites"],
        ["solve", "--config", "n3"],
    ]
    ok = True
    with tempfile.TemporaryDirectory() as tmp:
        for i, args in enumerate(runs):
            texts = []
            for jobs in ("1", "2", "3", "1"):
                out = Path(tmp) / f"{i}_{jobs}_{len(texts)}.json"
                extra = ["--jobs", jobs]
                code = cli_main([*args, *extra, "--out", str(out)])
                ok = ok and code == 0
                texts.append(out.read_bytes())
            ok = ok and len(set(texts)) == 1
    return _record(7, ok, "JSON outputs bit-identical across repeated runs with --jobs 1, 2, 3")


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7]


@pytest.mark.parametrize("k", range(1, 8))
def test_acceptance(k):
    assert CRITERIA[k - 1](), RESULTS[k]


if __name__ == "__main__":
    for f in CRITERIA:
        f()
    for k in sorted(RESULTS):
        print(RESULTS[k])
