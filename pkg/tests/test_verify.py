from __future__ import annotations

import pytest

from qkz.errors import NotConvergent
from qkz.forms import PINNED_CONVENTION, Convention, WeightProfile, enumerate_assignments
from qkz.verify import (
    check_convergence_condition,
    check_lemma1,
    check_lemma2,
    check_skew_annihilation,
    check_solution_exchange,
    check_varphi_shift,
    check_w_shift_sign,
    fit_decay_rate,
    qkz_residual,
    solve,
)
from qkz.specfn import ModelParams

P2 = ModelParams(2, 2.0)
P3 = ModelParams(3, 1.7)
WP21 = WeightProfile(2, 2, (1,))
WP32 = WeightProfile(3, 2, (1, 0))
WP23 = WeightProfile(2, 3, (1,))


@pytest.mark.parametrize("n", [2, 3, 4])
def test_lemma1_pinned_convention(n):
    rep = check_lemma1(n, trials=20, seed=n)
    assert rep["convention"] == PINNED_CONVENTION.value == "real"
    assert rep["pass"], rep
    assert len(rep["per_pair"]) == n * n


def test_lemma1_rejects_other_convention_for_n3():
    rep = check_lemma1(3, trials=5, convention=Convention.IMAGINARY)
    assert not rep["pass"]


@pytest.mark.parametrize("n", [2, 3, 4])
def test_skew_annihilation(n):
    assert check_skew_annihilation(n)["pass"]


def test_w_shift_sign():
    rep = check_w_shift_sign()
    assert rep["pass"], rep["failures"]
    assert rep["cases"] > 100


@pytest.mark.parametrize("p", [P2, P3, ModelParams(4, 1.1)])
def test_varphi_shift(p):
    assert check_varphi_shift(p)["pass"]


@pytest.mark.parametrize(
    "wp,p,betas,J,W",
    [
        (WP21, P2, (0.0, 0.7), (1, 0), (1, 0)),
        (WP21, P2, (0.0, 0.7), (0, 1), (1, 0)),
        (WP32, P3, (0.0, 0.7), (1, 0), (0, 1)),
        (WP32, P3, (0.2, -0.5), (0, 1), (1, 0)),
    ],
)
def test_lemma2(wp, p, betas, J, W):
    rep = check_lemma2(wp, betas, J, W, p)
    assert rep["pass"], rep
    assert rep["residual"] < 1e-4


def test_solve_structure():
    sol = solve(WP21, (0.0, 0.7), (1, 0), P2)
    assert set(sol.components) == {(0, 1), (1, 0)}
    assert sol.weight == WP21.weight
    assert all(abs(r.value) > 0 for r in sol.components.values())
    st = sol.state()
    assert st.weights() == {(0, 1)}


def test_solve_n3_components_restricted_to_weight():
    sol = solve(WP32, (0.0, 0.7), (1, 0), P3)
    assert set(sol.components) == {a.J for a in enumerate_assignments(WP32)}
    assert all(sorted(J) == [0, 1] for J in sol.components)


def test_solve_rejects_divergent_profile():
    with pytest.raises(NotConvergent):
        solve(WeightProfile(2, 2, (2,)), (0.0, 0.7), (1, 1), P2)


def test_solve_jobs_bitwise():
    a = solve(WP23, (0.0, 0.7, -0.4), (1, 0, 0), P2, eps=1e-4, jobs=1)
    b = solve(WP23, (0.0, 0.7, -0.4), (1, 0, 0), P2, eps=1e-4, jobs=2)
    assert a.components == b.components


def test_solution_exchange():
    rep = check_solution_exchange((0.0, 0.7), (1, 0), P2)
    assert rep["pass"], rep
    rep = check_solution_exchange((0.1, -0.6), (0, 1), P3)
    assert rep["pass"], rep


@pytest.mark.parametrize(
    "wp,p,betas,W,tol",
    [
        (WP21, P2, (0.0, 0.7), (1, 0), 1e-4),
        (WP21, P2, (-0.3, 0.9), (0, 1), 1e-4),
        (WP32, P3, (0.0, 0.7), (1, 0), 1e-4),
        (WP32, P3, (0.4, -0.2), (0, 1), 1e-4),
    ],
)
@pytest.mark.parametrize("r", [1, 2])
def test_qkz_two_sites(wp, p, betas, W, tol, r):
    rep = qkz_residual(wp, betas, W, p, r=r, tol=tol)
    assert rep["pass"], rep
    assert rep["residual"] < tol


def test_qkz_three_sites():
    rep = qkz_residual(WP23, (0.0, 0.7, -0.4), (1, 0, 0), P2, eps=1e-6, tol=1e-3)
    assert rep["pass"], rep


def test_qkz_translation_invariance():
    a = qkz_residual(WP21, (0.0, 0.7), (1, 0), P2)
    b = qkz_residual(WP21, (1.3, 2.0), (1, 0), P2)
    assert a["pass"] and b["pass"]
    assert abs(a["residual"] - b["residual"]) < 1e-4


def test_convergence_condition():
    rep = check_convergence_condition(4, 5)
    assert rep["pass"]
    assert rep["counterexamples"] == 0
    assert rep["profiles_checked"] > 0
    assert 0 < rep["violating_with_witness"] <= rep["violating_profiles"]


def test_decay_rate_fit():
    rep = fit_decay_rate(P2, WP21, (1, 0), (1, 0), (0.0, 0.7))
    assert rep["pass"], rep
    assert rep["predicted"] == pytest.approx(3.141592653589793 / 4 * 2)
