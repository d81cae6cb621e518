from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qkz.errors import NotConvergent, PoleCrossing
from qkz.forms import WeightProfile, enumerate_assignments
from qkz.pairing import (
    PairingResult,
    build_contours,
    convergence_witness,
    decay_exponent,
    exponent_H,
    min_tail_slope,
    pair,
    pair_batch,
    shifted_pair,
    tail_slope,
)
from qkz.specfn import ModelParams

from oracles import pairing_oracle

P2 = ModelParams(2, 2.0)
WP21 = WeightProfile(2, 2, (1,))
# independent adaptive-quadrature value on two different lines
ORACLE_PIN = complex(-0.06036576113679458, -0.15953104363672657)


# --- convergence exponent -------------------------------------------------


def test_decay_exponent_one_variable():
    info = decay_exponent(WP21, [(1, 0), (0, 0), (0, 1)], rho=2.0)
    assert info.slopes == (2, 1)
    assert info.tail_min == 2
    assert info.rate == pytest.approx(math.pi / 4 * 2)


def test_decay_exponent_rejects_bad_ordering():
    with pytest.raises(ValueError):
        decay_exponent(WP21, [(1, 0), (0, 0)])


def _profiles():
    out = []
    for n in (2, 3, 4):
        for N in range(1, 5):
            for nu in __import__("itertools").product(range(N + 1), repeat=n - 1):
                if all(nu[i] >= nu[i + 1] for i in range(len(nu) - 1)) and any(nu):
                    out.append(WeightProfile(n, N, nu))
    return out


PROFILES = _profiles()


@settings(max_examples=60, deadline=None)
@given(st.data())
def test_tail_slope_matches_finite_difference_of_H(data):
    wp = data.draw(st.sampled_from(PROFILES))
    x = [data.draw(st.integers(0, v)) for v in wp.nu]
    if not any(x):
        x[0] = 1
    rng = np.random.default_rng(data.draw(st.integers(0, 2**31)))
    # occupied variables sit far right, the rest (and all spectral parameters) near 0
    gamma = [list(rng.uniform(-1, 1, wp.N))]
    for j in range(1, wp.n):
        gamma.append(list(rng.uniform(-1, 1, wp.full[j] - x[j - 1])) + list(100 + rng.uniform(-1, 1, x[j - 1])))
    t = 7.0
    moved = [gamma[0]] + [layer[: wp.full[j + 1] - x[j]] + [g + t for g in layer[wp.full[j + 1] - x[j]:]]
                          for j, layer in enumerate(gamma[1:])]
    slope = (exponent_H(wp, moved) - exponent_H(wp, gamma)) / t
    assert slope == pytest.approx(tail_slope(wp, x), abs=1e-9)


def test_convergence_witness():
    assert convergence_witness(WeightProfile(2, 2, (2,))) == (1,)
    assert convergence_witness(WP21) is None
    assert min_tail_slope(WP21) == 2


def test_tail_slope_closed_form_n2():
    wp = WeightProfile(2, 3, (1,))
    assert tail_slope(wp, (1,)) == (3 + 0 - 2) + 2


# --- contour plan ---------------------------------------------------------


def test_plan_rejects_outside_weyl_chamber():
    with pytest.raises(NotConvergent):
        build_contours(WeightProfile(2, 2, (2,)), [0.0, 0.5], P2)


def test_plan_truncation_monotone():
    a = build_contours(WP21, [0.0, 0.5], P2, 1e-4)
    b = build_contours(WP21, [0.0, 0.5], P2, 1e-6)
    assert b.L > a.L
    assert b.h < a.h
    assert math.exp(-a.decay_rate * (a.L - 2)) <= 1e-4 / 10


def test_plan_residue_corrections():
    # the kernel poles at beta +- i pi/2 straddle the real axis: whichever line is
    # chosen, the misplaced ones are corrected with the sign of their family
    plan = build_contours(WP21, [0.0, 0.5], P2, 1e-6)
    assert plan.residues
    for z, sgn in plan.residues:
        assert abs(z.real - 0.0) < 1e-12 or abs(z.real - 0.5) < 1e-12
        eta = plan.eta[0]
        if sgn < 0:
            assert z.imag > eta
        else:
            assert z.imag < eta


def test_plan_validation():
    with pytest.raises(ValueError):
        build_contours(WP21, [0.0], P2)
    with pytest.raises(ValueError):
        build_contours(WP21, [0.0, 0.5], P2, 2.0)


# --- pairing values -------------------------------------------------------


@pytest.fixture(scope="module")
def regression():
    plan = build_contours(WP21, [0.0, 1.0], P2, 1e-8)
    return pair((1, 0), (1, 0), (0.0, 1.0), plan, P2, mode="w")


def test_regression_value_against_oracle(regression):
    assert abs(regression.value - ORACLE_PIN) / abs(ORACLE_PIN) < 1e-8


def test_error_estimate_and_boundary(regression):
    assert regression.abs_error_estimate / abs(regression.value) < 1e-6
    assert regression.boundary_ratio <= 1e-8 / 10
    assert regression.node_counts[0] > 0


@pytest.mark.parametrize("eta", [0.3, -1.1])
def test_oracle_line_independence(eta):
    val = pairing_oracle(2, 2.0, (0, 1), (0, 1), (0.2, -0.6), eta)
    ref = pair((0, 1), (0, 1), (0.2, -0.6), build_contours(WP21, [0.2, -0.6], P2, 1e-9), P2, mode="w").value
    assert abs(val - ref) / abs(ref) < 1e-7


def test_oracle_n3():
    p = ModelParams(3, 1.7)
    wp = WeightProfile(3, 2, (1, 0))
    ref = pair((1, 0), (0, 1), (0.1, 0.8), build_contours(wp, [0.1, 0.8], p, 1e-9), p, mode="w").value
    val = pairing_oracle(3, 1.7, (1, 0), (0, 1), (0.1, 0.8), 0.25)
    assert abs(val - ref) / abs(ref) < 1e-7


def test_pairing_is_deterministic():
    plan = build_contours(WP21, [0.0, 0.7], P2, 1e-6)
    a = pair_batch([(1, 0), (0, 1)], (1, 0), (0.0, 0.7), plan, P2)
    b = pair_batch([(0, 1)], (1, 0), (0.0, 0.7), plan, P2)
    c = pair_batch([(1, 0), (0, 1)], (1, 0), (0.0, 0.7), plan, P2)
    assert a == c
    assert a[1].value == b[0].value


def test_modes_agree_two_dimensional():
    wp = WeightProfile(2, 4, (2,))
    b = (0.0, 0.7, -0.5, 1.2)
    J = enumerate_assignments(wp)[0].J
    plan = build_contours(wp, b, P2, 1e-4)
    red = pair(J, J, b, plan, P2, wp=wp, mode="reduced")
    full = pair(J, J, b, plan, P2, wp=wp, mode="w")
    assert abs(red.value - full.value) <= 1e-10 * abs(full.value)


def test_reduced_mode_equals_w_mode_n3():
    p = ModelParams(3, 1.7)
    wp = WeightProfile(3, 4, (2, 0))
    b = (0.0, 0.6, -0.4, 1.1)
    J = enumerate_assignments(wp)[0].J
    plan = build_contours(wp, b, p, 1e-4)
    red = pair(J, J, b, plan, p, wp=wp, mode="reduced", strict=False)
    full = pair(J, J, b, plan, p, wp=wp, mode="w", strict=False)
    assert abs(red.value - full.value) <= 1e-8 * abs(full.value)


def test_no_variable_pairing():
    wp = WeightProfile(2, 2, (0,))
    r = pair((0, 0), (0, 0), (0.0, 0.4), None, P2, wp=wp)
    assert r.value == 1.0 and r.abs_error_estimate == 0.0


def test_profile_mismatch():
    with pytest.raises(ValueError):
        pair((1, 0), (1, 1), (0.0, 1.0), None, P2)


def test_to_json(regression):
    d = regression.to_json()
    assert d["value"] == [regression.value.real, regression.value.imag]
    assert isinstance(regression, PairingResult)


# --- continuation ---------------------------------------------------------


def test_zero_shift_is_pair():
    plan = build_contours(WP21, [0.0, 0.7], P2, 1e-6)
    a = pair((1, 0), (1, 0), (0.0, 0.7), plan, P2)
    b = shifted_pair((1, 0), (1, 0), (0.0, 0.7), plan, P2, 0j)
    assert a == b


def test_offset_continuity():
    betas = (0.0, 0.7)
    plan = build_contours(WP21, list(betas), P2, 1e-8)

    def f(t):
        return shifted_pair((1, 0), (1, 0), betas, plan, P2, -1j * P2.lam * t).value

    for t in (0.0, 0.25, 0.5, 0.75, 1.0):
        d = -1e-3 if t == 1.0 else 1e-3
        f0 = f(t)
        a, b = abs(f(t + d) - f0), abs(f(t + d / 2) - f0)
        # no jump: the increment halves with the step
        assert b / a == pytest.approx(0.5, abs=0.05)
        assert a < 0.05 * abs(f0) + 1e-3


def test_pole_crossing_detected():
    with pytest.raises(PoleCrossing):
        shifted_pair((1, 0), (1, 0), (0.3, 0.3 + 0.1j), None, P2, -1j * P2.lam)
