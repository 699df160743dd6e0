import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import morreylab as ml
from morreylab import (
    Ball,
    BallFamily,
    ExponentVector,
    FractionalParams,
    GridFunction,
    PowerWeight,
    SampledWeight,
    unit_weight,
    weight_measure,
)


# ---------------------------------------------------------------------------
# weight construction and measures
# ---------------------------------------------------------------------------


def test_power_weight_rejects_nonintegrable():
    with pytest.raises(ValueError):
        PowerWeight(-1.0, 1)
    with pytest.raises(ValueError):
        PowerWeight(-2.0, 2)
    PowerWeight(-0.9, 1)
    PowerWeight(-1.5, 2)


def test_sampled_weight_requires_positive(lat_129):
    with pytest.raises(ValueError):
        SampledWeight(GridFunction.constant(lat_129, 0.0))


def test_weight_measure_unit():
    assert weight_measure(unit_weight(1), Ball((0.0,), 1.0)) == pytest.approx(2.0)


def test_weight_measure_power_centered():
    w = PowerWeight(0.5, 1)
    assert weight_measure(w, Ball((0.0,), 1.0)) == pytest.approx(4.0 / 3.0, rel=1e-14)


def test_weight_measure_power_offcenter():
    # closed form: integral of x^{1/2} over [1, 3]
    w = PowerWeight(0.5, 1)
    expected = (2.0 / 3.0) * (3.0**1.5 - 1.0)
    assert weight_measure(w, Ball((2.0,), 1.0)) == pytest.approx(expected, rel=1e-14)


def test_weight_measure_sampled_matches_quadrature(lat_257, rng):
    w = ml.random_sampled_weight(lat_257, rng)
    ball = Ball((0.4,), 0.8)
    direct = ml.integrate(GridFunction(lat_257, w.sample(lat_257)), ball)
    assert weight_measure(w, ball) == pytest.approx(direct, rel=1e-14)


def test_power_measure_2d_centered_closed_form():
    w = PowerWeight(0.0, 2)
    assert weight_measure(w, Ball((0.0, 0.0), 0.5)) == pytest.approx(
        math.pi * 0.25, rel=1e-12
    )


# ---------------------------------------------------------------------------
# exponent bookkeeping
# ---------------------------------------------------------------------------


def test_exponent_vector_basics():
    P = ExponentVector((2.0, 2.0))
    assert P.m == 2
    assert P.p == pytest.approx(1.0)
    assert P.conjugates == (2.0, 2.0)
    assert ExponentVector((1.0, 2.0)).conjugates[0] == math.inf
    with pytest.raises(ValueError):
        ExponentVector((0.5, 2.0))
    with pytest.raises(ValueError):
        ExponentVector((2.0,))


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(1.0, 20.0), min_size=2, max_size=5))
def test_exponent_vector_harmonic_identity(ps):
    P = ExponentVector(tuple(ps))
    assert abs(1.0 / P.p - sum(1.0 / pi for pi in P.exponents)) < 1e-12


@settings(max_examples=50, deadline=None)
@given(
    st.lists(st.floats(1.0, 3.0), min_size=2, max_size=3),
    st.floats(0.05, 0.45),
)
def test_fractional_companion_identity(ps, alpha_frac):
    P = ExponentVector(tuple(ps))
    mn = P.m  # n = 1
    alpha = alpha_frac * mn / max(ps)  # keeps every companion exponent positive
    fp = FractionalParams(alpha, P, 1)
    assert abs(1.0 / fp.q - sum(1.0 / qk for qk in fp.qk)) < 1e-12


def test_fractional_params_rejects():
    P = ExponentVector((2.0, 2.0))
    with pytest.raises(ValueError):
        FractionalParams(0.0, P, 1)
    with pytest.raises(ValueError):
        FractionalParams(2.0, P, 1)
    with pytest.raises(ValueError):
        FractionalParams(1.0, P, 1)  # companion exponent would be nonpositive


# ---------------------------------------------------------------------------
# joint-average constants
# ---------------------------------------------------------------------------


def test_muckenhoupt_unit_weight(lat_257, default_family):
    for p in (1.0, 2.0, 4.0):
        rep = ml.muckenhoupt_constant(unit_weight(1), p, default_family, lat_257)
        assert rep.value == pytest.approx(1.0, abs=1e-10)
    ones = SampledWeight(GridFunction.constant(lat_257, 1.0))
    rep = ml.muckenhoupt_constant(ones, 2.0, default_family, lat_257)
    assert rep.value == pytest.approx(1.0, abs=1e-10)


def test_muckenhoupt_power_centered_value(lat_257, centered_family):
    # centered-ball closed form: (2/3 r^{1/2}) * (2 r^{-1/2}) = 4/3
    rep = ml.muckenhoupt_constant(PowerWeight(0.5, 1), 2.0, centered_family, lat_257)
    assert rep.value == pytest.approx(4.0 / 3.0, rel=1e-12)


def test_muckenhoupt_power_dense_family_lower_bound(lat_257, default_family):
    rep = ml.muckenhoupt_constant(PowerWeight(0.5, 1), 2.0, default_family, lat_257)
    assert rep.value >= 4.0 / 3.0 - 1e-12


def test_muckenhoupt_rejects_bad_exponent(lat_257, centered_family):
    with pytest.raises(ValueError):
        ml.muckenhoupt_constant(unit_weight(1), 0.5, centered_family, lat_257)


def test_a2_violation_detected():
    # |x|^{3/2} fails the p = 2 condition: closed form diverges, and the
    # sampled estimate grows without bound as the grid refines
    w = PowerWeight(1.5, 1)
    fam = BallFamily.centered([0.5, 1.0])
    lat = ml.make_lattice(1, 4.0, 129)
    assert ml.muckenhoupt_constant(w, 2.0, fam, lat).value == math.inf

    vals = []
    for N in (129, 513):
        latN = ml.make_lattice(1, 4.0, N)
        wN = SampledWeight(GridFunction(latN, w.sample(latN)))
        vals.append(ml.muckenhoupt_constant(wN, 2.0, fam, latN).value)
    assert vals[1] >= 2.0 * vals[0]


def test_a2_member_stable_under_refinement():
    w = PowerWeight(0.5, 1)
    fam = BallFamily.centered([0.5, 1.0])
    vals = []
    for N in (129, 513):
        latN = ml.make_lattice(1, 4.0, N)
        wN = SampledWeight(GridFunction(latN, w.sample(latN)))
        vals.append(ml.muckenhoupt_constant(wN, 2.0, fam, latN).value)
    assert abs(vals[1] - vals[0]) / vals[0] <= 0.05


def test_a1_branch(lat_257, centered_family):
    # |x|^{-1/2} satisfies the p = 1 condition; |x|^{1/2} does not
    # (its infimum over any ball containing the origin is zero)
    rep = ml.muckenhoupt_constant(PowerWeight(-0.5, 1), 1.0, centered_family, lat_257)
    assert math.isfinite(rep.value) and rep.value >= 1.0
    rep = ml.muckenhoupt_constant(PowerWeight(0.5, 1), 1.0, centered_family, lat_257)
    assert rep.value == math.inf


def test_apq_unit_weight(lat_257, default_family):
    rep = ml.apq_constant(unit_weight(1), 2.0, 4.0, default_family, lat_257)
    assert rep.value == pytest.approx(1.0, abs=1e-10)
    rep = ml.apq_constant(unit_weight(1), 1.0, 4.0, default_family, lat_257)
    assert rep.value == pytest.approx(1.0, abs=1e-10)


def test_apq_power_window_stability():
    # a = 0.3 lies inside the (p, q) = (2, 4) window; the family-sup
    # estimate settles under one refinement step
    w = PowerWeight(0.3, 1)
    vals = []
    for N in (129, 257):
        lat = ml.make_lattice(1, 4.0, N)
        spec = ml.BallFamilySpec(stride=16, r0=0.125, count=6)
        fam = ml.make_ball_family(lat, spec.refined() if N == 257 else spec)
        vals.append(ml.apq_constant(w, 2.0, 4.0, fam, lat).value)
    assert all(math.isfinite(v) for v in vals)
    assert abs(vals[1] - vals[0]) / vals[0] <= 0.05


def test_apq_powered_weight_consistency(lat_257, default_family):
    # the two-exponent condition holds exactly when the q-th power
    # satisfies the joint-average condition at 1 + q/p'; a power whose
    # q-th power is not even locally integrable counts as failing
    p, q = 2.0, 4.0
    s = 1.0 + q / ml.conjugate_exponent(p)
    for a, member in ((0.3, True), (0.7, False), (-0.2, True), (-0.3, False)):
        w = PowerWeight(a, 1)
        c1 = ml.apq_constant(w, p, q, default_family, lat_257).value
        try:
            c2 = ml.muckenhoupt_constant(w.pow(q), s, default_family, lat_257).value
        except ValueError:
            c2 = math.inf
        assert math.isfinite(c1) == member
        assert math.isfinite(c1) == math.isfinite(c2)


def test_apq_rejects_bad_exponents(lat_257, centered_family):
    with pytest.raises(ValueError):
        ml.apq_constant(unit_weight(1), 2.0, 2.0, centered_family, lat_257)


# ---------------------------------------------------------------------------
# multiple-weight constants
# ---------------------------------------------------------------------------


def test_multi_ap_unit(lat_257, default_family):
    P = ExponentVector((2.0, 2.0))
    rep = ml.multi_ap_constant([unit_weight(1)] * 2, P, default_family, lat_257)
    assert rep.value == pytest.approx(1.0, abs=1e-10)


def test_multi_ap_holder_inclusion(lat_257, default_family):
    # finite componentwise constants imply a finite joint constant
    P = ExponentVector((2.0, 2.0))
    ws = [PowerWeight(0.5, 1), PowerWeight(0.25, 1)]
    singles = [
        ml.muckenhoupt_constant(w, pi, default_family, lat_257).value
        for w, pi in zip(ws, P.exponents)
    ]
    joint = ml.multi_ap_constant(ws, P, default_family, lat_257).value
    assert all(math.isfinite(v) for v in singles)
    assert math.isfinite(joint)


def test_multi_ap_reciprocal_pair(lat_257, default_family):
    # composite weight is identically 1 for the pair (|x|^{1/2}, |x|^{-1/2})
    P = ExponentVector((2.0, 2.0))
    ws = [PowerWeight(0.5, 1), PowerWeight(-0.5, 1)]
    nu = ml.nu_weight(ws, P, "czo")
    assert isinstance(nu, PowerWeight) and nu.exponent == 0.0
    rep = ml.multi_ap_constant(ws, P, default_family, lat_257)
    assert math.isfinite(rep.value)


def test_multi_ap_p1_branch(lat_257, centered_family):
    P = ExponentVector((1.0, 2.0))
    ws = [PowerWeight(-0.5, 1), PowerWeight(0.25, 1)]
    rep = ml.multi_ap_constant(ws, P, centered_family, lat_257)
    assert math.isfinite(rep.value) and rep.value > 0


def test_multi_apq_unit(lat_257, default_family):
    P = ExponentVector((2.0, 2.0))
    rep = ml.multi_apq_constant([unit_weight(1)] * 2, P, 2.0, default_family, lat_257)
    assert rep.value == pytest.approx(1.0, abs=1e-10)


def test_multi_apq_product_inclusion(lat_257, default_family):
    # componentwise two-exponent membership implies the joint condition
    P = ExponentVector((2.0, 2.0))
    fp = FractionalParams(0.5, P, 1)
    ws = [PowerWeight(0.3, 1), PowerWeight(-0.2, 1)]
    singles = [
        ml.apq_constant(w, pi, qi, default_family, lat_257).value
        for w, pi, qi in zip(ws, P.exponents, fp.qk)
    ]
    joint = ml.multi_apq_constant(ws, P, fp.q, default_family, lat_257).value
    assert all(math.isfinite(v) for v in singles)
    assert math.isfinite(joint)


def test_family_monotonicity(lat_257):
    small = BallFamily.centered([0.5, 1.0])
    large = BallFamily.centered([0.25, 0.5, 1.0, 2.0])
    w = PowerWeight(0.5, 1)
    P = ExponentVector((2.0, 2.0))
    pairs = [
        (
            ml.muckenhoupt_constant(w, 2.0, small, lat_257).value,
            ml.muckenhoupt_constant(w, 2.0, large, lat_257).value,
        ),
        (
            ml.apq_constant(w, 2.0, 4.0, small, lat_257).value,
            ml.apq_constant(w, 2.0, 4.0, large, lat_257).value,
        ),
        (
            ml.multi_apq_constant([w, w], P, 2.0, small, lat_257).value,
            ml.multi_apq_constant([w, w], P, 2.0, large, lat_257).value,
        ),
    ]
    for small_val, large_val in pairs:
        assert large_val >= small_val - 1e-12


def test_scale_invariance(lat_257, default_family, rng):
    w = ml.random_sampled_weight(lat_257, rng)
    scaled = SampledWeight(GridFunction(lat_257, 3.7 * w.sample(lat_257)))
    c1 = ml.muckenhoupt_constant(w, 2.0, default_family, lat_257).value
    c2 = ml.muckenhoupt_constant(scaled, 2.0, default_family, lat_257).value
    assert c2 == pytest.approx(c1, rel=1e-10)


def test_empty_balls_skipped_with_warning(lat_257):
    # second ball sits between nodes with a radius below half the spacing
    h = lat_257.h
    fam = BallFamily.from_balls([Ball((0.0,), 1.0), Ball((3.5 + h / 2,), h / 4)])
    ones = SampledWeight(GridFunction.constant(lat_257, 1.0))
    with pytest.warns(RuntimeWarning):
        rep = ml.muckenhoupt_constant(ones, 2.0, fam, lat_257)
    assert rep.skipped == 1
    assert rep.value == pytest.approx(1.0, abs=1e-10)


# ---------------------------------------------------------------------------
# composite weight
# ---------------------------------------------------------------------------


def test_nu_weight_unit():
    P = ExponentVector((2.0, 2.0))
    nu = ml.nu_weight([unit_weight(1)] * 2, P, "czo")
    assert isinstance(nu, PowerWeight) and nu.exponent == 0.0


def test_nu_weight_power_arithmetic():
    P = ExponentVector((2.0, 2.0))  # p = 1, so each factor carries p/p_i = 1/2
    ws = [PowerWeight(0.5, 1), PowerWeight(0.25, 1)]
    nu = ml.nu_weight(ws, P, "czo")
    assert nu.exponent == pytest.approx(0.375, abs=1e-15)
    nu_frac = ml.nu_weight(ws, P, "fractional")
    assert nu_frac.exponent == pytest.approx(0.75, abs=1e-15)


def test_nu_weight_mixed_inputs(lat_257, rng):
    P = ExponentVector((2.0, 2.0))
    sw = ml.random_sampled_weight(lat_257, rng)
    nu = ml.nu_weight([PowerWeight(0.5, 1), sw], P, "czo")
    assert isinstance(nu, SampledWeight)
    expect = PowerWeight(0.5, 1).sample(lat_257) ** 0.5 * sw.sample(lat_257) ** 0.5
    assert np.allclose(nu.sample(lat_257), expect, rtol=1e-14)


def test_nu_weight_length_mismatch():
    P = ExponentVector((2.0, 2.0))
    with pytest.raises(ValueError):
        ml.nu_weight([unit_weight(1)], P, "czo")


# ---------------------------------------------------------------------------
# doubling and A-infinity diagnostics
# ---------------------------------------------------------------------------


def test_doubling_unit(lat_257, centered_family):
    rep = ml.doubling_constant(unit_weight(1), centered_family, lat_257)
    assert rep.value == pytest.approx(2.0, rel=1e-12)


def test_doubling_unit_2d():
    lat = ml.make_lattice(2, 1.0, 129)
    fam = BallFamily.centered([0.2, 0.4], n=2)
    rep = ml.doubling_constant(unit_weight(2), fam, lat)
    assert rep.value == pytest.approx(4.0, rel=1e-12)


def test_doubling_sampled_unit_within_band(lat_257):
    ones = SampledWeight(GridFunction.constant(lat_257, 1.0))
    fam = BallFamily.centered([1.99])
    rep = ml.doubling_constant(ones, fam, lat_257)
    assert rep.value == pytest.approx(2.0, rel=0.01)


def test_doubling_power_weight(lat_257, centered_family):
    rep = ml.doubling_constant(PowerWeight(0.5, 1), centered_family, lat_257)
    assert rep.value == pytest.approx(2.0**1.5, rel=1e-12)


def test_ainfty_unit(lat_257, centered_family):
    diag = ml.ainfty_diagnostics(unit_weight(1), centered_family, lat_257)
    assert diag.reverse_jensen.value == pytest.approx(1.0, abs=1e-12)
    assert diag.delta is not None
    assert diag.delta.value == pytest.approx(1.0, abs=1e-9)


def test_ainfty_power_weight_delta(lat_257, centered_family):
    # centered sub-balls: w(E)/w(B) = (|E|/|B|)^{3/2} exactly
    diag = ml.ainfty_diagnostics(PowerWeight(0.5, 1), centered_family, lat_257)
    assert diag.delta.value == pytest.approx(1.5, abs=1e-9)


def test_ainfty_powered_weight_delta(lat_257, centered_family):
    # the q-powered weight carries its own comparability exponent:
    # |x|^{1/2} squared is |x|, whose centered slope is (1 + 1)/1 = 2
    diag = ml.ainfty_diagnostics(PowerWeight(0.5, 1).pow(2.0), centered_family, lat_257)
    assert diag.delta.value == pytest.approx(2.0, abs=1e-9)


def test_reverse_jensen_at_least_one(lat_257, centered_family, rng):
    for _ in range(10):
        w = ml.random_sampled_weight(lat_257, rng)
        diag = ml.ainfty_diagnostics(w, centered_family, lat_257)
        assert diag.reverse_jensen.value >= 1.0 - 1e-12


def test_delta_omitted_for_degenerate_subballs(lat_257):
    # sub-balls of a barely-resolved ball capture no nodes
    fam = BallFamily.from_balls([Ball((0.015,), 0.04)])
    ones = SampledWeight(GridFunction.constant(lat_257, 1.0))
    diag = ml.ainfty_diagnostics(ones, fam, lat_257)
    assert diag.delta is None
    assert any("delta" in f for f in diag.flags)


def test_coherence_joint_implies_composite(lat_257, default_family):
    # finite joint constant comes with a finite composite-weight constant
    P = ExponentVector((2.0, 2.0))
    ws = [PowerWeight(0.5, 1), PowerWeight(0.25, 1)]
    joint = ml.multi_ap_constant(ws, P, default_family, lat_257).value
    nu = ml.nu_weight(ws, P, "czo")
    composite = ml.muckenhoupt_constant(nu, P.m * P.p, default_family, lat_257).value
    assert math.isfinite(joint) and math.isfinite(composite)

    fp = FractionalParams(0.5, P, 1)
    ws_f = [PowerWeight(0.3, 1), PowerWeight(-0.2, 1)]
    joint_f = ml.multi_apq_constant(ws_f, P, fp.q, default_family, lat_257).value
    nu_q = ml.nu_weight(ws_f, P, "fractional").pow(fp.q)
    composite_f = ml.muckenhoupt_constant(
        nu_q, P.m * fp.q, default_family, lat_257
    ).value
    assert math.isfinite(joint_f) and math.isfinite(composite_f)
