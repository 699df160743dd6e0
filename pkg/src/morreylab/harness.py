"""Experiment harness: ratio-boundedness sweeps, lemma and corollary
checkers, tail-bound calibration, and report emission.

A boundedness statement of the form "output norm <= C * product of
input norms, uniformly in the inputs" is operationalized as a sweep:
evaluate the ratio over a deterministic corpus of dilated, translated,
rescaled bumps and require the max/min spread to stay under a
threshold.  Four statements are wired in, addressed by the identifiers
the CLI exposes:

    1.1  strong Morrey bound for the singular operator
    1.2  weak-type variant of 1.1
    1.3  strong two-weight Morrey bound for the fractional operator
    1.4  weak-type variant of 1.3

Identical config and seed produce bit-identical CSV output; sweep
instances are independent and may be evaluated in parallel, with the
report assembled by instance index.
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from typing import Iterable, Literal, Sequence

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .lattice import (
    Ball,
    BallFamily,
    BallFamilySpec,
    GridFunction,
    Lattice,
    make_ball_family,
    make_lattice,
    split_at_ball,
)
from .operators import (
    KernelSpec,
    TruncationPolicy,
    apply_czo,
    apply_fractional,
    fractional_size_kernel,
    homogeneous_odd_kernel,
    tail_majorant,
)
from .spaces import (
    MorreyParams,
    morrey_norm,
    two_weight_morrey_norm,
    weak_morrey_norm,
)
from .weights import (
    ExponentVector,
    FractionalParams,
    PowerWeight,
    Weight,
    apq_constant,
    conjugate_exponent,
    muckenhoupt_constant,
    multi_ap_constant,
    multi_apq_constant,
    nu_weight,
)

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "FunctionInstance",
    "InstanceResult",
    "RatioReport",
    "LemmaReport",
    "CorollaryReport",
    "TailCheckReport",
    "THEOREM_IDS",
    "default_config",
    "theorem_ratio",
    "sweep",
    "check_product_lemma",
    "check_corollaries",
    "check_tail_bounds",
    "write_sweep_csv",
    "write_sweep_json",
    "render_sweep_svg",
]


class ConfigError(ValueError):
    """Invalid experiment configuration (CLI exit code 2)."""


#: statement id -> (operator kind, weak left-hand side)
THEOREM_IDS: dict[str, tuple[str, bool]] = {
    "1.1": ("czo", False),
    "1.2": ("czo", True),
    "1.3": ("fractional", False),
    "1.4": ("fractional", True),
}

_KERNELS = {
    "homogeneous_odd": homogeneous_odd_kernel,
    "fractional_size": fractional_size_kernel,
}


def log_spaced(lo: float, hi: float, count: int) -> tuple[float, ...]:
    return tuple(float(v) for v in np.geomspace(lo, hi, count))


@dataclass(frozen=True)
class FunctionInstance:
    """One corpus member: the input pair is the bump (t, s, amp) used
    for every component."""

    translation: float
    dilation: float
    amplitude: float
    index: int = 0


@dataclass(frozen=True)
class ExperimentConfig:
    """Declarative description of one experiment run (TOML-mirrored)."""

    # lattice
    n: int = 1
    L: float = 4.0
    N: int = 129
    # ball family
    family_stride: int = 16
    family_r0: float = 0.125
    family_count: int = 6
    # operator
    operator: str = "fractional"  # "czo" | "fractional"
    alpha: float = 0.5
    kernel: str = "homogeneous_odd"
    delta_factor: float = 2.0
    # exponents
    exponents: tuple[float, ...] = (2.0, 2.0)
    kappa: float = 0.25
    # weights (power exponents, one per component)
    weight_powers: tuple[float, ...] = (0.0, 0.0)
    # function corpus
    translations: tuple[float, ...] = (0.25,)
    dilations: tuple[float, ...] = log_spaced(0.0175, 1.75, 20)
    amplitudes: tuple[float, ...] = (1.0,)
    # misc
    seed: int = 20250809
    spread_threshold: float = 10.0

    # -- construction ------------------------------------------------------
    @staticmethod
    def from_dict(data: dict) -> "ExperimentConfig":
        kw: dict = {}
        plain = {"seed", "spread_threshold"}
        sections = {
            "lattice": {"n": "n", "L": "L", "N": "N"},
            "family": {
                "stride": "family_stride",
                "r0": "family_r0",
                "count": "family_count",
            },
            "operator": {
                "kind": "operator",
                "alpha": "alpha",
                "kernel": "kernel",
                "delta_factor": "delta_factor",
            },
            "exponents": {"p": "exponents", "kappa": "kappa"},
            "weights": {"powers": "weight_powers"},
            "functions": {
                "translations": "translations",
                "dilations": "dilations",
                "amplitudes": "amplitudes",
            },
        }
        for key, value in data.items():
            if key in plain:
                kw[key] = value
            elif key in sections:
                if not isinstance(value, dict):
                    raise ConfigError(f"section [{key}] must be a table")
                for sub, target in sections[key].items():
                    if sub in value:
                        kw[target] = value[sub]
                unknown = set(value) - set(sections[key])
                if unknown:
                    raise ConfigError(f"unknown keys in [{key}]: {sorted(unknown)}")
            else:
                raise ConfigError(f"unknown config key {key!r}")
        for name in ("exponents", "weight_powers", "translations", "amplitudes"):
            if name in kw:
                kw[name] = tuple(float(v) for v in kw[name])
        if "dilations" in kw:
            dil = kw["dilations"]
            if isinstance(dil, dict):
                try:
                    dil = log_spaced(dil["min"], dil["max"], dil["count"])
                except KeyError as exc:
                    raise ConfigError("dilations table needs min, max, count") from exc
            kw["dilations"] = tuple(float(v) for v in dil)
        try:
            return ExperimentConfig(**kw)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @staticmethod
    def from_toml(path: str) -> "ExperimentConfig":
        with open(path, "rb") as fh:
            try:
                data = tomllib.load(fh)
            except tomllib.TOMLDecodeError as exc:
                raise ConfigError(f"malformed TOML in {path}: {exc}") from exc
        return ExperimentConfig.from_dict(data)

    def to_dict(self) -> dict:
        return asdict(self)

    # -- validation --------------------------------------------------------
    def validate(self) -> tuple[str, ...]:
        """Raise ConfigError on malformed configs; return hypothesis
        warnings (window violations) that demote the sweep verdict."""
        try:
            lat = self.make_lattice()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if self.operator not in ("czo", "fractional"):
            raise ConfigError(f"unknown operator kind {self.operator!r}")
        if self.operator == "czo" and self.kernel not in _KERNELS:
            raise ConfigError(f"unknown kernel {self.kernel!r}")
        if self.family_r0 < lat.h:
            raise ConfigError(
                f"family base radius {self.family_r0} is below the spacing {lat.h}"
            )
        if len(self.weight_powers) != len(self.exponents):
            raise ConfigError("one weight power per exponent required")
        if not self.dilations or not self.translations or not self.amplitudes:
            raise ConfigError("function corpus must be nonempty")
        if any(s <= 0 for s in self.dilations):
            raise ConfigError("dilations must be positive")
        try:
            P = ExponentVector(self.exponents)
            for a in self.weight_powers:
                PowerWeight(a, self.n)
            if self.operator == "fractional":
                FractionalParams(self.alpha, P, self.n)
            if self.operator == "czo":
                TruncationPolicy(self.delta_factor * lat.h).validate_against(lat)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

        notes: list[str] = []
        if self.kappa <= 0:
            raise ConfigError("kappa must be positive")
        if self.operator == "czo":
            if self.kappa >= 1.0:
                notes.append(f"kappa={self.kappa} outside the window (0, 1)")
            for a, pi in zip(self.weight_powers, self.exponents):
                hi = self.n * (pi - 1.0)
                if not (-self.n < a < hi):
                    notes.append(
                        f"power {a} outside the component window (-{self.n}, {hi:g})"
                    )
        else:
            fp = FractionalParams(self.alpha, ExponentVector(self.exponents), self.n)
            window = fp.exponents.p / fp.q
            if self.kappa >= window:
                notes.append(f"kappa={self.kappa} outside the window (0, {window:g})")
            for a, pi, qi in zip(self.weight_powers, self.exponents, fp.qk):
                lo = -self.n / qi
                hi = self.n / conjugate_exponent(pi) if pi > 1 else 0.0
                if not (lo < a < hi) and not (pi == 1.0 and lo < a <= 0.0):
                    notes.append(
                        f"power {a} outside the component window ({lo:g}, {hi:g})"
                    )
        return tuple(notes)

    # -- materialization ---------------------------------------------------
    def make_lattice(self) -> Lattice:
        return make_lattice(self.n, self.L, self.N)

    def make_family(self, lattice: Lattice | None = None) -> BallFamily:
        lat = lattice or self.make_lattice()
        return make_ball_family(
            lat, BallFamilySpec(self.family_stride, self.family_r0, self.family_count)
        )

    def make_weights(self) -> list[Weight]:
        return [PowerWeight(a, self.n) for a in self.weight_powers]

    def make_kernel(self) -> KernelSpec:
        return _KERNELS[self.kernel]()

    def instances(self) -> list[FunctionInstance]:
        out = []
        idx = 0
        for t in self.translations:
            for s in self.dilations:
                for a in self.amplitudes:
                    out.append(FunctionInstance(t, s, a, idx))
                    idx += 1
        return out


def default_config(theorem: str = "1.3", weighted: bool = False) -> ExperimentConfig:
    """Shipped defaults for the four sweeps (the acceptance settings)."""
    if theorem not in THEOREM_IDS:
        raise ConfigError(f"unknown statement id {theorem!r}")
    kind, _ = THEOREM_IDS[theorem]
    if kind == "fractional":
        powers = (0.3, -0.2) if weighted else (0.0, 0.0)
        return ExperimentConfig(
            operator="fractional", alpha=0.5, kappa=0.25, weight_powers=powers
        )
    powers = (0.5, -0.25) if weighted else (0.0, 0.0)
    return ExperimentConfig(
        operator="czo", kernel="homogeneous_odd", kappa=0.5, weight_powers=powers
    )


# ---------------------------------------------------------------------------
# theorem ratios
# ---------------------------------------------------------------------------


class _Bench:
    """Materialized config: lattice, family, weights, and norm wiring."""

    def __init__(self, cfg: ExperimentConfig, theorem: str):
        kind, weak = THEOREM_IDS[theorem]
        if kind != cfg.operator:
            raise ConfigError(
                f"statement {theorem} needs a {kind!r} operator, config has "
                f"{cfg.operator!r}"
            )
        self.cfg = cfg
        self.theorem = theorem
        self.weak = weak
        self.lattice = cfg.make_lattice()
        self.family = cfg.make_family(self.lattice)
        self.weights = cfg.make_weights()
        self.P = ExponentVector(cfg.exponents)
        if cfg.operator == "czo":
            self.kernel = cfg.make_kernel()
            self.trunc = TruncationPolicy(cfg.delta_factor * self.lattice.h)
            self.left_weight = nu_weight(self.weights, self.P, "czo")
            self.left_mp = MorreyParams(self.P.p, cfg.kappa)
            self.right = [
                (w, MorreyParams(pi, cfg.kappa))
                for w, pi in zip(self.weights, self.P.exponents)
            ]
        else:
            self.fp = FractionalParams(cfg.alpha, self.P, cfg.n)
            q, p = self.fp.q, self.P.p
            self.left_weight = nu_weight(self.weights, self.P, "fractional").pow(q)
            self.left_mp = MorreyParams(q, cfg.kappa * q / p)
            self.right = [
                (
                    w.pow(pi),
                    w.pow(qi),
                    MorreyParams(pi, cfg.kappa * pi * q / (p * qi)),
                )
                for w, pi, qi in zip(self.weights, self.P.exponents, self.fp.qk)
            ]

    def bump_pair(self, inst: FunctionInstance) -> list[GridFunction]:
        f = GridFunction.poly_bump(
            self.lattice, inst.translation, inst.dilation, inst.amplitude
        )
        return [f] * self.P.m

    def supported(self, inst: FunctionInstance) -> bool:
        return abs(inst.translation) + inst.dilation <= self.cfg.L / 2.0 + 1e-12

    def apply(self, fs: Sequence[GridFunction]) -> GridFunction:
        if self.cfg.operator == "czo":
            return apply_czo(self.kernel, fs, self.trunc)
        return apply_fractional(self.fp, fs)

    def left_norms(self, out: GridFunction) -> tuple[float, float]:
        """(strong, weak) left-hand Morrey norms of the operator output."""
        strong = morrey_norm(out, self.left_weight, self.left_mp, self.family).value
        weak = weak_morrey_norm(out, self.left_weight, self.left_mp, self.family).value
        return strong, weak

    def right_norms(self, fs: Sequence[GridFunction]) -> list[float]:
        vals = []
        if self.cfg.operator == "czo":
            for f, (w, mp) in zip(fs, self.right):
                vals.append(morrey_norm(f, w, mp, self.family).value)
        else:
            for f, (u, v, mp) in zip(fs, self.right):
                vals.append(two_weight_morrey_norm(f, u, v, mp, self.family).value)
        return vals

    def evaluate(self, inst: FunctionInstance) -> "InstanceResult":
        if not self.supported(inst):
            return InstanceResult(
                inst, None, None, None, (), accepted=False,
                reason=f"support [{inst.translation - inst.dilation:g}, "
                f"{inst.translation + inst.dilation:g}] exceeds [-L/2, L/2]",
            )
        fs = self.bump_pair(inst)
        rights = self.right_norms(fs)
        denom = math.prod(rights)
        if denom == 0.0 or not math.isfinite(denom):
            return InstanceResult(
                inst, None, None, None, tuple(rights), accepted=False,
                reason="degenerate input norms",
            )
        strong, weak = self.left_norms(self.apply(fs))
        left = weak if self.weak else strong
        companion = strong if self.weak else weak
        return InstanceResult(
            inst, left / denom, left, companion / denom, tuple(rights), accepted=True
        )


@dataclass(frozen=True)
class InstanceResult:
    instance: FunctionInstance
    ratio: float | None
    left_norm: float | None
    companion_ratio: float | None  # the other (weak/strong) left-side variant
    right_norms: tuple[float, ...]
    accepted: bool
    reason: str = ""


@dataclass(frozen=True)
class RatioReport:
    theorem: str
    instances: tuple[InstanceResult, ...]
    ratio_max: float
    ratio_min: float
    spread: float
    argmax: int
    argmin: int
    threshold: float
    passed: bool | None  # None when hypothesis warnings demote the verdict
    hypothesis_warnings: tuple[str, ...]
    config: dict
    rejected: int

    def summary(self) -> str:
        verdict = (
            "pass" if self.passed else "FAIL" if self.passed is not None else "no verdict"
        )
        return (
            f"statement {self.theorem}: spread {self.spread:.4g} "
            f"(max {self.ratio_max:.4g} @#{self.argmax}, min {self.ratio_min:.4g} "
            f"@#{self.argmin}, threshold {self.threshold:g}, rejected {self.rejected}) "
            f"-> {verdict}"
        )


def theorem_ratio(
    config: ExperimentConfig,
    instance: FunctionInstance | Sequence[GridFunction],
    theorem: str | None = None,
) -> float:
    """Single-instance ratio (output-side norm) / (product of input norms).

    ``instance`` is either a corpus member or an explicit tuple of grid
    functions; a zero denominator raises ValueError (the sweep records
    such instances as rejected instead).
    """
    theorem = theorem or ("1.1" if config.operator == "czo" else "1.3")
    bench = _Bench(config, theorem)
    if isinstance(instance, FunctionInstance):
        res = bench.evaluate(instance)
        if not res.accepted:
            raise ValueError(f"rejected instance: {res.reason}")
        return res.ratio
    fs = list(instance)
    rights = bench.right_norms(fs)
    denom = math.prod(rights)
    if denom == 0.0 or not math.isfinite(denom):
        raise ValueError("degenerate input norms")
    strong, weak = bench.left_norms(bench.apply(fs))
    return (weak if bench.weak else strong) / denom


def _sweep_chunk(cfg_dict: dict, theorem: str, indices: list[int]) -> list[InstanceResult]:
    cfg = ExperimentConfig(**cfg_dict)
    bench = _Bench(cfg, theorem)
    table = cfg.instances()
    return [bench.evaluate(table[i]) for i in indices]


def sweep(
    config: ExperimentConfig,
    theorem: str | None = None,
    jobs: int = 1,
) -> RatioReport:
    """Evaluate the ratio over the full corpus and grade the spread.

    Hypothesis-window warnings do not stop the run; they demote the
    verdict to None (spread reported without pass/fail).
    """
    theorem = theorem or ("1.1" if config.operator == "czo" else "1.3")
    if theorem not in THEOREM_IDS:
        raise ConfigError(f"unknown statement id {theorem!r}")
    notes = config.validate()
    for note in notes:
        warnings.warn(f"hypothesis violated: {note}", RuntimeWarning, stacklevel=2)
    table = config.instances()
    if len(table) < 10:
        raise ConfigError(f"corpus has {len(table)} instances; need at least 10")

    if jobs > 1:
        chunks = [list(range(k, len(table), jobs)) for k in range(jobs)]
        cfg_dict = config.to_dict()
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = list(
                pool.map(_sweep_chunk, [cfg_dict] * jobs, [theorem] * jobs, chunks)
            )
        results: list[InstanceResult | None] = [None] * len(table)
        for chunk, part in zip(chunks, parts):
            for i, res in zip(chunk, part):
                results[i] = res
        results = [r for r in results if r is not None]
    else:
        bench = _Bench(config, theorem)
        results = [bench.evaluate(inst) for inst in table]

    accepted = [r for r in results if r.accepted]
    if not accepted:
        raise ConfigError("every corpus instance was rejected")
    ratios = [r.ratio for r in accepted]
    hi, lo = max(ratios), min(ratios)
    argmax = accepted[ratios.index(hi)].instance.index
    argmin = accepted[ratios.index(lo)].instance.index
    spread = hi / lo if lo > 0 else math.inf
    passed: bool | None
    passed = None if notes else spread <= config.spread_threshold
    return RatioReport(
        theorem,
        tuple(results),
        hi,
        lo,
        spread,
        argmax,
        argmin,
        config.spread_threshold,
        passed,
        notes,
        config.to_dict(),
        rejected=len(results) - len(accepted),
    )


# ---------------------------------------------------------------------------
# product lemma and corollaries
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LemmaReport:
    mode: str
    c_lemma: float
    extremal_ball: Ball | None
    holder_ok: bool
    holder_worst: float  # max over balls of RHS/LHS, must be <= 1 + 1e-8
    balls: int
    skipped: int

    def summary(self) -> str:
        return (
            f"product lemma ({self.mode}): C={self.c_lemma:.6g} over {self.balls} "
            f"balls, reverse direction {'holds' if self.holder_ok else 'FAILS'} "
            f"(worst {self.holder_worst:.12g})"
        )


def _ball_integral_pow(
    w: Weight, t: float, ball: Ball, lattice: Lattice, quadrature: bool
) -> float | None:
    """Integral of w^t over the ball, or None when no node is captured."""
    if not quadrature and w.has_closed_form(ball):
        return w._closed_measure(ball, t)
    mask = lattice.ball_mask(ball)
    if not mask.any():
        return None
    vals = w.sample(lattice)[mask]
    return float(np.sum(vals**t)) * lattice.h**lattice.n


def check_product_lemma(
    ws: Sequence[Weight],
    P: ExponentVector,
    family: BallFamily,
    lattice: Lattice,
    mode: Literal["czo", "fractional"] = "czo",
    fractional: FractionalParams | None = None,
    quadrature: bool = False,
) -> LemmaReport:
    """Per ball, compare the split product of integrals with the integral
    of the composite weight.

    czo mode: LHS = prod (int_B w_i)^{p/p_i}, RHS = int_B prod w_i^{p/p_i};
    fractional mode: LHS = prod (int_B w_i^{q_i})^{q/q_i}, RHS = int_B
    (prod w_i)^q.  Reports C = max LHS/RHS and verifies the opposite
    inequality RHS <= LHS * (1 + 1e-8) on every ball (the split-exponent
    product inequality, exact for node sums).
    """
    if len(ws) != P.m:
        raise ValueError(f"expected {P.m} weights, got {len(ws)}")
    if mode == "czo":
        inner = [1.0] * P.m
        outer = [P.p / pi for pi in P.exponents]
    elif mode == "fractional":
        if fractional is None:
            raise ValueError("fractional mode needs FractionalParams")
        inner = list(fractional.qk)
        outer = [fractional.q / qi for qi in fractional.qk]
    else:
        raise ValueError(f"unknown mode {mode!r}")
    force_quadrature = quadrature or any(not isinstance(w, PowerWeight) for w in ws)

    best, best_ball = -math.inf, None
    worst_reverse = 0.0
    skipped = 0
    used = 0
    for ball in family:
        lhs = 1.0
        empty = False
        for w, ti, ei in zip(ws, inner, outer):
            integral = _ball_integral_pow(w, ti, ball, lattice, force_quadrature)
            if integral is None:
                empty = True
                break
            lhs *= integral**ei
        if empty:
            skipped += 1
            continue
        # composite integrand built with the same backend as the factors
        if force_quadrature:
            mask = lattice.ball_mask(ball)
            vals = np.ones(int(mask.sum()))
            for w, ti, ei in zip(ws, inner, outer):
                vals = vals * w.sample(lattice)[mask] ** (ti * ei)
            rhs = float(np.sum(vals)) * lattice.h**lattice.n
        else:
            total = sum(
                w.exponent * ti * ei for w, ti, ei in zip(ws, inner, outer)  # type: ignore[attr-defined]
            )
            rhs = PowerWeight(total, lattice.n)._closed_measure(ball)
        used += 1
        if rhs > 0 and lhs / rhs > best:
            best, best_ball = lhs / rhs, ball
        if lhs > 0:
            worst_reverse = max(worst_reverse, rhs / lhs)
    if used == 0:
        raise ValueError("every ball in the family was empty")
    return LemmaReport(
        mode, best, best_ball, worst_reverse <= 1.0 + 1e-8, worst_reverse, used, skipped
    )


@dataclass(frozen=True)
class CorollaryReport:
    mode: str
    single_constants: tuple[float, ...]
    singles_finite: bool
    multi_constant: float
    multi_finite: bool
    sweep_passed: bool | None
    equivalence_agreement: tuple[bool, ...]  # fractional only, per component
    chain_ok: bool

    def summary(self) -> str:
        singles = ", ".join(f"{v:.4g}" for v in self.single_constants)
        eq = (
            "; equivalence " + str(all(self.equivalence_agreement))
            if self.equivalence_agreement
            else ""
        )
        return (
            f"corollary chain ({self.mode}): singles [{singles}] finite="
            f"{self.singles_finite} -> multi {self.multi_constant:.4g} finite="
            f"{self.multi_finite} -> sweep {self.sweep_passed}{eq} => "
            f"{'ok' if self.chain_ok else 'BROKEN'}"
        )


def check_corollaries(config: ExperimentConfig, jobs: int = 1) -> CorollaryReport:
    """Numerically verify the implication chain behind the corollaries:
    componentwise weight constants finite => joint constant finite =>
    the sweep passes; in the fractional mode also check, per component,
    that the two-exponent constant and the powered-weight constant at
    1 + q_i/p_i' agree on finiteness."""
    config.validate()
    lat = config.make_lattice()
    fam = config.make_family(lat)
    ws = config.make_weights()
    P = ExponentVector(config.exponents)

    singles: list[float] = []
    equivalence: list[bool] = []
    if config.operator == "czo":
        for w, pi in zip(ws, P.exponents):
            singles.append(muckenhoupt_constant(w, pi, fam, lat).value)
        multi = multi_ap_constant(ws, P, fam, lat).value
    else:
        fp = FractionalParams(config.alpha, P, config.n)
        for w, pi, qi in zip(ws, P.exponents, fp.qk):
            c_apq = apq_constant(w, pi, qi, fam, lat).value
            singles.append(c_apq)
            try:
                c_pow = muckenhoupt_constant(
                    w.pow(qi), 1.0 + qi / conjugate_exponent(pi), fam, lat
                ).value
            except ValueError:  # powered weight not locally integrable
                c_pow = math.inf
            equivalence.append(math.isfinite(c_apq) == math.isfinite(c_pow))
        multi = multi_apq_constant(ws, P, fp.q, fam, lat).value

    singles_finite = all(math.isfinite(v) for v in singles)
    multi_finite = math.isfinite(multi)
    report = sweep(config, jobs=jobs)
    chain_ok = (not singles_finite or multi_finite) and (
        not multi_finite or report.passed is not False
    )
    if equivalence:
        chain_ok = chain_ok and all(equivalence)
    return CorollaryReport(
        config.operator,
        tuple(singles),
        singles_finite,
        multi,
        multi_finite,
        report.passed,
        tuple(equivalence),
        chain_ok,
    )


# ---------------------------------------------------------------------------
# pointwise tail bounds
# ---------------------------------------------------------------------------

_SPLIT_PATTERNS: tuple[tuple[str, str], ...] = (
    ("far", "far"),
    ("far", "near"),
    ("near", "far"),
)


@dataclass(frozen=True)
class TailPatternResult:
    pattern: tuple[str, ...]
    c_calibrated: float
    holdout_worst: float  # max over held-out (B, x) of LHS/RHS
    points: int
    passed: bool


@dataclass(frozen=True)
class TailCheckReport:
    mode: str
    slack: float
    patterns: tuple[TailPatternResult, ...]
    passed: bool

    def summary(self) -> str:
        lines = [f"tail bounds ({self.mode}), holdout slack {self.slack:g}:"]
        for pr in self.patterns:
            lines.append(
                f"  {'/'.join(pr.pattern)}: C={pr.c_calibrated:.4g} "
                f"holdout_worst={pr.holdout_worst:.4g} "
                f"({pr.points} points) -> {'pass' if pr.passed else 'FAIL'}"
            )
        lines.append(f"  overall: {'pass' if self.passed else 'FAIL'}")
        return "\n".join(lines)


def _tail_calibration_instances(lattice: Lattice) -> list[tuple[Ball, list[GridFunction]]]:
    """Designed 20-instance calibration corpus.

    Covers the geometries that maximize the pointwise-to-majorant
    ratio: narrow bumps hugging the doubled ball from outside (far-far
    extremal) and edge pairs with near mass at the ball boundary and
    far mass just past the doubled ball (mixed extremal), at several
    radii and on both sides, plus two generic fillers.
    """
    out: list[tuple[Ball, list[GridFunction]]] = []
    for r in (0.3, 0.45, 0.55):
        ball = Ball((0.0,) * lattice.n, r)
        for side in (1.0, -1.0):
            hug = GridFunction.poly_bump(lattice, side * (2 * r + 0.31), 0.3, 1.0)
            edge_near = GridFunction.poly_bump(lattice, side * 1.3 * r, 0.5, 1.0)
            edge_far = GridFunction.poly_bump(lattice, side * (2 * r + 0.081), 0.45, 1.0)
            out.append((ball, [hug, hug]))
            out.append((ball, [edge_near, edge_far]))
            out.append((ball, [edge_far, edge_near]))
    filler_ball = Ball((0.5,) * lattice.n, 0.3)
    f1 = GridFunction.poly_bump(lattice, -0.8, 0.8, 1.0)
    f2 = GridFunction.poly_bump(lattice, 0.9, 0.6, 1.5)
    out.append((filler_ball, [f1, f2]))
    out.append((filler_ball, [f2, f1]))
    return out


def _tail_random_instances(
    lattice: Lattice, rng: np.random.Generator, count: int
) -> list[tuple[Ball, list[GridFunction]]]:
    """Random corpus with nondegenerate near and far parts throughout."""
    out: list[tuple[Ball, list[GridFunction]]] = []
    half = lattice.L / 2.0
    while len(out) < count:
        r = float(rng.uniform(0.2, 0.6))
        c = float(rng.uniform(-1.0, 1.0))
        ball = Ball((c,) * lattice.n, r)
        fs = []
        ok = True
        for _ in range(2):
            s = float(rng.uniform(0.3, 1.2))
            t = float(rng.uniform(-(half - s), half - s))
            amp = float(rng.uniform(0.5, 2.0))
            f = GridFunction.poly_bump(lattice, t, s, amp)
            near, far = split_at_ball(f, ball)
            if np.abs(far.values).max() == 0 or np.abs(near.values).max() == 0:
                ok = False
            fs.append(f)
        if ok:
            out.append((ball, fs))
    return out


def _tail_ratios(
    lattice: Lattice,
    instances: Iterable[tuple[Ball, list[GridFunction]]],
    mode: str,
    pattern: tuple[str, ...],
    kernel: KernelSpec | None,
    trunc: TruncationPolicy | None,
    alpha: float | None,
    annuli: int = 8,
    x_samples: int = 9,
) -> list[float]:
    ratios: list[float] = []
    for ball, fs in instances:
        parts = []
        degenerate = False
        for f, tag in zip(fs, pattern):
            near, far = split_at_ball(f, ball)
            part = far if tag == "far" else near
            if np.abs(part.values).max() == 0:
                degenerate = True
                break
            parts.append(part)
        if degenerate:
            continue
        mask = lattice.ball_mask(ball)
        idx = np.flatnonzero(mask)
        if idx.size == 0:
            continue
        sel = idx[np.linspace(0, idx.size - 1, min(x_samples, idx.size)).astype(int)]
        if mode == "czo":
            out = apply_czo(kernel, parts, trunc, nodes=list(sel))
            rhs = tail_majorant(fs, ball, annuli, "czo")
        else:
            out = apply_fractional(alpha, parts, nodes=list(sel))
            rhs = tail_majorant(fs, ball, annuli, "fractional", alpha=alpha)
        flat = out.values.ravel()
        for i in sel:
            ratios.append(abs(float(flat[i])) / rhs)
    return ratios


def check_tail_bounds(
    config: ExperimentConfig,
    mode: str | None = None,
    slack: float = 1.2,
    holdout_count: int = 20,
) -> TailCheckReport:
    """Calibrate the pointwise tail constant per split pattern on the
    designed corpus, then require every held-out (ball, point) to
    satisfy LHS <= slack * C * majorant."""
    config.validate()
    mode = mode or config.operator
    if mode not in ("czo", "fractional"):
        raise ConfigError(f"unknown mode {mode!r}")
    lat = config.make_lattice()
    kernel = config.make_kernel() if mode == "czo" else None
    trunc = TruncationPolicy(config.delta_factor * lat.h) if mode == "czo" else None
    alpha = config.alpha if mode == "fractional" else None

    cal = _tail_calibration_instances(lat)
    rng = np.random.default_rng(config.seed)
    hold = _tail_random_instances(lat, rng, holdout_count)

    results = []
    for pattern in _SPLIT_PATTERNS:
        rc = _tail_ratios(lat, cal, mode, pattern, kernel, trunc, alpha)
        rh = _tail_ratios(lat, hold, mode, pattern, kernel, trunc, alpha)
        c_cal = max(rc)
        worst = max(rh) if rh else 0.0
        results.append(
            TailPatternResult(pattern, c_cal, worst, len(rh), worst <= slack * c_cal)
        )
    return TailCheckReport(mode, slack, tuple(results), all(r.passed for r in results))


# ---------------------------------------------------------------------------
# emission
# ---------------------------------------------------------------------------

_CSV_COLUMNS = (
    "index",
    "translation",
    "dilation",
    "amplitude",
    "accepted",
    "reason",
    "ratio",
    "companion_ratio",
    "left_norm",
    "right_norms",
)


def write_sweep_csv(report: RatioReport, path: str) -> None:
    """One row per instance; float fields use repr for bit-stable output."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(_CSV_COLUMNS)
        for res in report.instances:
            inst = res.instance
            writer.writerow(
                [
                    inst.index,
                    repr(inst.translation),
                    repr(inst.dilation),
                    repr(inst.amplitude),
                    int(res.accepted),
                    res.reason,
                    "" if res.ratio is None else repr(res.ratio),
                    "" if res.companion_ratio is None else repr(res.companion_ratio),
                    "" if res.left_norm is None else repr(res.left_norm),
                    ";".join(repr(v) for v in res.right_norms),
                ]
            )


def _report_payload(report: RatioReport) -> dict:
    return {
        "statement": report.theorem,
        "spread": report.spread,
        "ratio_max": report.ratio_max,
        "ratio_min": report.ratio_min,
        "argmax": report.argmax,
        "argmin": report.argmin,
        "threshold": report.threshold,
        "passed": report.passed,
        "hypothesis_warnings": list(report.hypothesis_warnings),
        "rejected": report.rejected,
        "config": report.config,
        "instances": [
            {
                "index": r.instance.index,
                "translation": r.instance.translation,
                "dilation": r.instance.dilation,
                "amplitude": r.instance.amplitude,
                "accepted": r.accepted,
                "reason": r.reason,
                "ratio": r.ratio,
                "companion_ratio": r.companion_ratio,
                "left_norm": r.left_norm,
                "right_norms": list(r.right_norms),
            }
            for r in report.instances
        ],
    }


def write_sweep_json(report: RatioReport, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(_report_payload(report), fh, indent=2, sort_keys=True)
        fh.write("\n")


def render_sweep_svg(csv_path: str, out_path: str) -> None:
    """Ratio against dilation on a log x-axis, from a sweep CSV."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    dil, ratios = [], []
    with open(csv_path, newline="") as fh:
        for row in csv.DictReader(fh):
            if row["accepted"] == "1" and row["ratio"]:
                dil.append(float(row["dilation"]))
                ratios.append(float(row["ratio"]))
    if not dil:
        raise ValueError(f"no accepted instances in {csv_path}")
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.semilogx(dil, ratios, "o-")
    ax.set_xlabel("bump dilation")
    ax.set_ylabel("norm ratio")
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(out_path, format="svg")
    plt.close(fig)
