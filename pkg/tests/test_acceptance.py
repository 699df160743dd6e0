"""Acceptance criteria, one test per criterion (run with -s for the lines).

Desk scale throughout: one dimension, two operator inputs, at most 257
nodes per axis.  Every tolerance is pinned here, not configured.
"""

import math

import numpy as np
import pytest

import morreylab as ml
from morreylab import (
    BallFamily,
    ExponentVector,
    FractionalParams,
    GridFunction,
    KernelSamplingPlan,
    MorreyParams,
    PowerWeight,
    SampledWeight,
    unit_weight,
)
from morreylab.spaces import morrey_norm
from test_operators import dense_czo_oracle, dense_fractional_oracle


def _report(name: str, ok: bool, detail: str = "") -> None:
    line = f"{name}: {'PASS' if ok else 'FAIL'}"
    if detail:
        line += f"  [{detail}]"
    print(line)
    assert ok, line


@pytest.fixture(scope="module")
def lat():
    return ml.make_lattice(1, 4.0, 257)


@pytest.fixture(scope="module")
def family(lat):
    return ml.ExperimentConfig(N=257).make_family(lat)


@pytest.fixture(scope="module")
def frac_reports():
    return {
        "unweighted": ml.sweep(ml.default_config("1.3")),
        "weighted": ml.sweep(ml.default_config("1.3", weighted=True)),
    }


@pytest.fixture(scope="module")
def czo_reports():
    return {
        "unweighted": ml.sweep(ml.default_config("1.1")),
        "weighted": ml.sweep(ml.default_config("1.1", weighted=True)),
    }


def test_ac1_unit_weight_constants_and_diagnostics(lat, family):
    one = unit_weight(1)
    P = ExponentVector((2.0, 2.0))
    checks = {
        "A_p(1)": ml.muckenhoupt_constant(one, 2.0, family, lat).value,
        "A_1(1)": ml.muckenhoupt_constant(one, 1.0, family, lat).value,
        "A_pq(1)": ml.apq_constant(one, 2.0, 4.0, family, lat).value,
        "A_P(1)": ml.multi_ap_constant([one, one], P, family, lat).value,
        "A_Pq(1)": ml.multi_apq_constant([one, one], P, 2.0, family, lat).value,
    }
    ok = all(abs(v - 1.0) <= 1e-10 for v in checks.values())

    dbl_1d = ml.doubling_constant(one, family, lat).value
    ok &= abs(dbl_1d - 2.0) <= 0.02
    lat2 = ml.make_lattice(2, 1.0, 129)
    fam2 = BallFamily.centered([0.2, 0.4], n=2)
    dbl_2d = ml.doubling_constant(unit_weight(2), fam2, lat2).value
    ok &= abs(dbl_2d - 4.0) <= 0.04
    ones = SampledWeight(GridFunction.constant(lat, 1.0))
    dbl_quad = ml.doubling_constant(ones, BallFamily.centered([1.99]), lat).value
    ok &= abs(dbl_quad - 2.0) <= 0.02

    rng = np.random.default_rng(20250809)
    rj_min = math.inf
    for _ in range(50):
        w = ml.random_sampled_weight(lat, rng)
        diag = ml.ainfty_diagnostics(w, family, lat)
        rj_min = min(rj_min, diag.reverse_jensen.value)
    ok &= rj_min >= 1.0 - 1e-12

    _report(
        "AC-1 unit-weight constants, doubling, reverse-Jensen",
        ok,
        f"constants {max(abs(v - 1) for v in checks.values()):.2e} from 1, "
        f"doubling ({dbl_1d:.4f}, {dbl_2d:.4f}, {dbl_quad:.4f}), min RJ {rj_min:.6f}",
    )


def test_ac2_product_lemma(lat, family):
    P = ExponentVector((2.0, 2.0))
    rng = np.random.default_rng(20250809)
    holder_ok = True
    for _ in range(10):
        ws = [ml.random_sampled_weight(lat, rng) for _ in range(2)]
        rep = ml.check_product_lemma(ws, P, family, lat, "czo")
        holder_ok &= rep.holder_ok
        rep_f = ml.check_product_lemma(
            ws, P, family, lat, "fractional", fractional=FractionalParams(0.5, P, 1)
        )
        holder_ok &= rep_f.holder_ok

    ws_pow = [PowerWeight(0.5, 1), PowerWeight(-0.5, 1)]
    cs = []
    for N in (129, 257):
        latN = ml.make_lattice(1, 4.0, N)
        famN = ml.ExperimentConfig(N=N).make_family(latN)
        cs.append(
            ml.check_product_lemma(ws_pow, P, famN, latN, "czo", quadrature=True).c_lemma
        )
    drift = abs(cs[1] - cs[0]) / cs[0]
    ok = holder_ok and drift <= 0.05
    _report(
        "AC-2 product lemma: reverse direction + refinement stability",
        ok,
        f"reverse direction holds={holder_ok}, C_lemma drift {drift:.4%}",
    )


def test_ac3_pointwise_tail_bounds():
    cfg = ml.default_config("1.3")
    ok = True
    details = []
    for mode in ("czo", "fractional"):
        rep = ml.check_tail_bounds(cfg, mode=mode, slack=1.2, holdout_count=20)
        ok &= rep.passed
        worst = max(p.holdout_worst / p.c_calibrated for p in rep.patterns)
        details.append(f"{mode} worst holdout/C {worst:.3f}")
    _report("AC-3 pointwise tail bounds (calibrate + holdout 1.2x)", ok, "; ".join(details))


def test_ac4_fractional_sweep(frac_reports):
    ok = True
    details = []
    for tag, rep in frac_reports.items():
        ok &= rep.passed is True and rep.spread <= 10.0
        details.append(f"{tag} spread {rep.spread:.3f}")
    _report("AC-4 fractional-statement sweep (two decades, spread <= 10)", ok, "; ".join(details))


def test_ac5_singular_sweep_and_truncation(czo_reports):
    ok = True
    details = []
    for tag, rep in czo_reports.items():
        ok &= rep.passed is True and rep.spread <= 10.0
        details.append(f"{tag} spread {rep.spread:.3f}")

    # truncation sensitivity on resolved instances (bump width >= 4 delta)
    for tag in ("unweighted", "weighted"):
        cfg = ml.default_config("1.1", weighted=(tag == "weighted"))
        lat = cfg.make_lattice()
        delta = cfg.delta_factor * lat.h
        fine = ml.sweep(ml.ExperimentConfig(**{**cfg.to_dict(), "delta_factor": 1.0}))
        coarse = czo_reports[tag]
        worst = 0.0
        resolved = 0
        for rc, rf in zip(coarse.instances, fine.instances):
            if not (rc.accepted and rf.accepted):
                continue
            if rc.instance.dilation < 4.0 * delta:
                continue
            resolved += 1
            worst = max(worst, abs(rf.ratio - rc.ratio) / rc.ratio)
        ok &= resolved >= 5 and worst <= 0.20
        details.append(f"{tag} delta-halving worst {worst:.3f} over {resolved} resolved")
    _report("AC-5 singular-statement sweep + truncation sensitivity", ok, "; ".join(details))


def test_ac6_weak_ratios_below_strong(frac_reports, czo_reports):
    # the strong sweeps carry the weak left-hand variant as companion
    worst = 0.0
    for rep in list(frac_reports.values()) + list(czo_reports.values()):
        for res in rep.instances:
            if res.accepted:
                worst = max(worst, res.companion_ratio / res.ratio)
    ok = worst <= 1.0 + 1e-12
    _report("AC-6 weak-side ratio <= strong-side ratio on all corpora", ok, f"worst weak/strong {worst:.12f}")


def test_ac7_dense_oracle_equivalence():
    lat = ml.make_lattice(1, 4.0, 33)
    f1 = GridFunction.poly_bump(lat, 0.5, 1.0)
    f2 = GridFunction.poly_bump(lat, -0.25, 1.5, 1.3)
    kern = ml.homogeneous_odd_kernel()
    delta = 2 * lat.h
    fast = ml.apply_czo(kern, [f1, f2], ml.TruncationPolicy(delta)).values
    slow = dense_czo_oracle(kern, f1, f2, delta)
    rel_czo = np.abs(fast - slow).max() / np.abs(slow).max()

    fast_f = ml.apply_fractional(0.5, [f1, f2]).values
    slow_f = dense_fractional_oracle(0.5, f1, f2)
    rel_frac = np.abs(fast_f - slow_f).max() / np.abs(slow_f).max()
    ok = rel_czo <= 1e-10 and rel_frac <= 1e-10
    _report("AC-7 dense-sum oracle equivalence at N=33", ok, f"czo {rel_czo:.2e}, fractional {rel_frac:.2e}")


def test_ac8_closed_forms(lat):
    # fractional value at the corner of the unit square support
    lat2 = ml.make_lattice(1, 2.0, 129)
    f = GridFunction.indicator_box(lat2, 0.0, 1.0)
    i0 = (lat2.N - 1) // 2
    got = ml.apply_fractional(1.0, [f, f], nodes=[i0]).values[i0]
    target = 2.0 * math.log(1.0 + math.sqrt(2.0))
    rel_frac = abs(got - target) / target

    fam = BallFamily.centered([0.25, 0.5, 1.0, 2.0])
    ind = GridFunction.indicator_box(lat, -1.0, 1.0)
    morrey = morrey_norm(ind, unit_weight(1), MorreyParams(1.0, 0.5), fam).value
    rel_morrey = abs(morrey - math.sqrt(2.0)) / math.sqrt(2.0)

    rep = ml.verify_kernel_class(
        ml.homogeneous_odd_kernel(), KernelSamplingPlan(n_samples=10_000, seed=20250809)
    )
    rel_size = abs(rep.a_size - 2.0 * math.sqrt(2.0)) / (2.0 * math.sqrt(2.0))

    ok = rel_frac <= 0.02 and rel_morrey <= 0.05 and rel_size <= 0.01
    _report(
        "AC-8 closed-form targets",
        ok,
        f"fractional {rel_frac:.3%} (<=2%), Morrey {rel_morrey:.3%} (<=5%), "
        f"kernel size {rel_size:.2e} (<=1%)",
    )


def test_ac9_kernel_class_verifier():
    plan = KernelSamplingPlan(n_samples=10_000, seed=20250809)
    good = ml.verify_kernel_class(ml.homogeneous_odd_kernel(), plan)
    bad = ml.verify_kernel_class(ml.angular_jump_kernel(), plan)
    slack = 1.05 * bad.declared_A
    ok = good.passed and (not bad.passed) and bad.a_size <= slack and max(bad.a_reg_y) > slack
    _report(
        "AC-9 kernel-class verifier",
        ok,
        f"smooth odd kernel passed={good.passed}; jump kernel size ok, "
        f"regularity constant {max(bad.a_reg_y):.3g} >> declared {bad.declared_A:g}",
    )
