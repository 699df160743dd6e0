"""Weight functions, weight-class constants, and A-infinity diagnostics.

Two weight representations are supported: the power weight |x|^a
(kept symbolic, so one-dimensional and origin-centered measures come
from exact antiderivatives) and a sampled strictly positive grid
function (always handled by midpoint quadrature).  Ball averages are
backend-consistent: the exact path divides an exact integral by the
exact ball volume, and the quadrature path divides a node sum by the
node count, so the constant weight produces constants equal to 1 to
machine precision on every estimator.

Essential infima and suprema over a ball are realized as the min/max
of the raw weight over the lattice nodes inside the ball; for a power
weight the raw node value at the origin is the exact limit (0, 1, or
+inf depending on the sign of the exponent), which makes failures of
the p = 1 conditions visible instead of smoothed away.

Every sup-over-balls estimator walks a finite BallFamily, so reported
constants are family-relative lower estimates of the true suprema and
are nondecreasing as the family grows.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np

from .lattice import Ball, BallFamily, GridFunction, Lattice, integrate

__all__ = [
    "Weight",
    "PowerWeight",
    "SampledWeight",
    "unit_weight",
    "random_sampled_weight",
    "ExponentVector",
    "FractionalParams",
    "EstimateReport",
    "WeightDiagnostics",
    "conjugate_exponent",
    "weight_measure",
    "muckenhoupt_constant",
    "apq_constant",
    "multi_ap_constant",
    "multi_apq_constant",
    "nu_weight",
    "doubling_constant",
    "ainfty_diagnostics",
    "EmptyBallError",
]


class EmptyBallError(Exception):
    """A ball captured no lattice node but the computation needs nodes."""


def conjugate_exponent(p: float) -> float:
    """p' = p/(p-1), with p = 1 mapping to infinity."""
    if p < 1:
        raise ValueError(f"exponent must be >= 1, got {p}")
    if p == 1.0:
        return math.inf
    return p / (p - 1.0)


# ---------------------------------------------------------------------------
# closed-form power integrals
# ---------------------------------------------------------------------------


def _power_antiderivative(t: float, a: float) -> float:
    # F'(t) = |t|^a for a != -1
    return math.copysign(abs(t) ** (a + 1.0), t) / (a + 1.0)


def _power_interval_integral(a: float, lo: float, hi: float) -> float:
    """Exact integral of |t|^a over [lo, hi]; +inf when nonintegrable."""
    if hi <= lo:
        return 0.0
    if a <= -1.0 and lo <= 0.0 <= hi:
        return math.inf
    if a == -1.0:
        return math.log(abs(hi) / abs(lo)) if lo > 0 else math.log(abs(lo) / abs(hi))
    return _power_antiderivative(hi, a) - _power_antiderivative(lo, a)


def _power_centered_ball_integral(a: float, n: int, radius: float) -> float:
    """Exact integral of |x|^a over the ball B(0, r) in dimension n."""
    if a <= -n:
        return math.inf
    sphere_area = n * (math.pi ** (n / 2.0)) / math.gamma(n / 2.0 + 1.0)
    return sphere_area * radius ** (a + n) / (a + n)


# ---------------------------------------------------------------------------
# weight classes
# ---------------------------------------------------------------------------


class Weight:
    """Common interface for the two weight representations."""

    n: int

    def sample(self, lattice: Lattice) -> np.ndarray:
        raise NotImplementedError

    def raw_node_values(self, lattice: Lattice) -> np.ndarray:
        """Pointwise values used for ess-inf/ess-sup surrogates."""
        raise NotImplementedError

    def pow(self, t: float) -> "Weight":
        raise NotImplementedError

    def __mul__(self, other: "Weight") -> "Weight":
        return product_weight([self, other])

    def has_closed_form(self, ball: Ball) -> bool:
        return False

    def _closed_measure(self, ball: Ball, t: float = 1.0) -> float:
        raise NotImplementedError

    # -- backend-consistent ball statistics -------------------------------
    def ball_average_pow(
        self,
        t: float,
        ball: Ball,
        lattice: Lattice | None = None,
        quadrature: bool = False,
    ) -> float:
        """Average of w^t over the ball; exact path when available."""
        if not quadrature and self.has_closed_form(ball):
            return self._closed_measure(ball, t) / ball.volume()
        if lattice is None:
            raise ValueError("quadrature average needs a lattice")
        mask = lattice.ball_mask(ball)
        if not mask.any():
            raise EmptyBallError(f"{ball} captures no node")
        vals = self.sample(lattice)[mask]
        return float(np.mean(vals**t))

    def min_in(self, ball: Ball, lattice: Lattice) -> float:
        mask = lattice.ball_mask(ball)
        if not mask.any():
            raise EmptyBallError(f"{ball} captures no node")
        return float(np.min(self.raw_node_values(lattice)[mask]))

    def max_in(self, ball: Ball, lattice: Lattice) -> float:
        mask = lattice.ball_mask(ball)
        if not mask.any():
            raise EmptyBallError(f"{ball} captures no node")
        return float(np.max(self.raw_node_values(lattice)[mask]))


@dataclass(frozen=True)
class PowerWeight(Weight):
    """w(x) = |x|^a with a > -n (local integrability).

    Quadrature sampling replaces the origin node by the exact midpoint
    cell average in one dimension and by the half-cell value (h/2)^a in
    higher dimensions, keeping log w and negative powers summable.
    """

    exponent: float
    n: int = 1

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError("dimension must be >= 1")
        if not self.exponent > -self.n:
            raise ValueError(
                f"power weight |x|^{self.exponent} is not locally integrable in "
                f"dimension {self.n}"
            )

    def __str__(self) -> str:
        return f"|x|^{self.exponent:g}"

    def sample(self, lattice: Lattice) -> np.ndarray:
        self._check_dim(lattice)
        r = np.sqrt(lattice.squared_distance_from((0.0,) * self.n))
        a = self.exponent
        half = lattice.h / 2.0
        with np.errstate(divide="ignore"):
            vals = np.where(r > 0, r, 1.0) ** a
        if self.n == 1:
            origin_value = half**a / (a + 1.0)
        else:
            origin_value = half**a
        return np.where(r > 0, vals, origin_value)

    def raw_node_values(self, lattice: Lattice) -> np.ndarray:
        self._check_dim(lattice)
        r = np.sqrt(lattice.squared_distance_from((0.0,) * self.n))
        a = self.exponent
        if a == 0:
            return np.ones(lattice.shape)
        with np.errstate(divide="ignore"):
            vals = np.where(r > 0, r, 1.0) ** a
        origin = 0.0 if a > 0 else math.inf
        return np.where(r > 0, vals, origin)

    def pow(self, t: float) -> "PowerWeight":
        return PowerWeight(self.exponent * t, self.n)

    def has_closed_form(self, ball: Ball) -> bool:
        return self.n == 1 or all(c == 0.0 for c in ball.center)

    def _closed_measure(self, ball: Ball, t: float = 1.0) -> float:
        a = self.exponent * t
        if self.n == 1:
            c = ball.center[0]
            return _power_interval_integral(a, c - ball.radius, c + ball.radius)
        return _power_centered_ball_integral(a, self.n, ball.radius)

    def _check_dim(self, lattice: Lattice) -> None:
        if lattice.n != self.n:
            raise ValueError(
                f"weight dimension {self.n} does not match lattice dimension {lattice.n}"
            )


@dataclass(frozen=True, eq=False)
class SampledWeight(Weight):
    """Strictly positive grid function used through quadrature."""

    gf: GridFunction

    def __post_init__(self) -> None:
        if not np.all(self.gf.values > 0):
            raise ValueError("sampled weight must be strictly positive everywhere")

    @property
    def n(self) -> int:  # type: ignore[override]
        return self.gf.lattice.n

    @property
    def lattice(self) -> Lattice:
        return self.gf.lattice

    def __str__(self) -> str:
        return f"sampled(N={self.gf.lattice.N})"

    def sample(self, lattice: Lattice) -> np.ndarray:
        if lattice != self.gf.lattice:
            raise ValueError("sampled weight queried on a different lattice")
        return self.gf.values

    def raw_node_values(self, lattice: Lattice) -> np.ndarray:
        return self.sample(lattice)

    def pow(self, t: float) -> "SampledWeight":
        return SampledWeight(GridFunction(self.gf.lattice, self.gf.values**t))


def unit_weight(n: int = 1) -> PowerWeight:
    """The constant weight 1 (as the power weight with exponent 0)."""
    return PowerWeight(0.0, n)


def product_weight(ws: Sequence[Weight], exponents: Sequence[float] | None = None) -> Weight:
    """prod_i w_i^{e_i}; power inputs stay symbolic, otherwise sampled."""
    if exponents is None:
        exponents = [1.0] * len(ws)
    if len(exponents) != len(ws):
        raise ValueError("one exponent per weight required")
    if all(isinstance(w, PowerWeight) for w in ws):
        n = ws[0].n
        total = sum(w.exponent * e for w, e in zip(ws, exponents))  # type: ignore[attr-defined]
        return PowerWeight(total, n)
    lattices = {w.lattice for w in ws if isinstance(w, SampledWeight)}
    if len(lattices) != 1:
        raise ValueError("sampled weights must share one lattice")
    lat = lattices.pop()
    vals = np.ones(lat.shape)
    for w, e in zip(ws, exponents):
        vals = vals * w.sample(lat) ** e
    return SampledWeight(GridFunction(lat, vals))


def random_sampled_weight(lattice: Lattice, rng: np.random.Generator) -> SampledWeight:
    """Smooth random strictly positive weight exp(trig polynomial)."""
    log_w = np.full(lattice.shape, rng.uniform(-1.0, 1.0))
    for grid in lattice.coordinate_grids():
        for k in range(1, 4):
            amp = rng.uniform(-1.0, 1.0)
            phase = rng.uniform(0.0, 2.0 * math.pi)
            log_w = log_w + amp * np.sin(k * math.pi * grid / lattice.L + phase)
    return SampledWeight(GridFunction(lattice, np.exp(log_w)))


# ---------------------------------------------------------------------------
# exponent bookkeeping
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExponentVector:
    """Exponent tuple (p_1, ..., p_m) with the harmonic-mean target p."""

    exponents: tuple[float, ...]

    def __post_init__(self) -> None:
        exps = tuple(float(p) for p in self.exponents)
        object.__setattr__(self, "exponents", exps)
        if len(exps) < 2:
            raise ValueError("need at least two exponents")
        if any(p < 1.0 for p in exps):
            raise ValueError(f"every exponent must be >= 1, got {exps}")

    @property
    def m(self) -> int:
        return len(self.exponents)

    @property
    def p(self) -> float:
        return 1.0 / sum(1.0 / pi for pi in self.exponents)

    @property
    def conjugates(self) -> tuple[float, ...]:
        return tuple(conjugate_exponent(pi) for pi in self.exponents)


@dataclass(frozen=True)
class FractionalParams:
    """Order alpha in (0, mn) and the companion exponents it induces.

    1/q_k = 1/p_k - alpha/(mn) componentwise and 1/q = 1/p - alpha/n,
    so that sum(1/q_k) = 1/q automatically.
    """

    alpha: float
    exponents: ExponentVector
    n: int = 1

    def __post_init__(self) -> None:
        mn = self.exponents.m * self.n
        if not 0.0 < self.alpha < mn:
            raise ValueError(f"order must lie in (0, {mn}), got {self.alpha}")
        for pk in self.exponents.exponents:
            if 1.0 / pk - self.alpha / mn <= 0.0:
                raise ValueError(
                    f"exponent {pk} too large for order {self.alpha}: companion "
                    "exponent would be nonpositive"
                )

    @property
    def qk(self) -> tuple[float, ...]:
        mn = self.exponents.m * self.n
        return tuple(1.0 / (1.0 / pk - self.alpha / mn) for pk in self.exponents.exponents)

    @property
    def q(self) -> float:
        return 1.0 / (1.0 / self.exponents.p - self.alpha / self.n)


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EstimateReport:
    """A named sup-over-family estimate with its extremal ball."""

    quantity: str
    value: float
    extremal_ball: Ball | None = None
    extremal_level: float | None = None
    config: dict = field(default_factory=dict)
    skipped: int = 0
    notes: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        d = {
            "quantity": self.quantity,
            "value": self.value,
            "extremal_ball": repr(self.extremal_ball) if self.extremal_ball else None,
            "skipped": self.skipped,
        }
        if self.extremal_level is not None:
            d["extremal_level"] = self.extremal_level
        d.update(self.config)
        if self.notes:
            d["notes"] = list(self.notes)
        return d


@dataclass(frozen=True)
class WeightDiagnostics:
    """Doubling, reverse-Jensen, and comparability-exponent diagnostics."""

    doubling: EstimateReport
    reverse_jensen: EstimateReport
    delta: EstimateReport | None
    flags: tuple[str, ...] = ()


# ---------------------------------------------------------------------------
# measures and constants
# ---------------------------------------------------------------------------


def weight_measure(w: Weight, ball: Ball, lattice: Lattice | None = None) -> float:
    """w(B): exact antiderivative for power weights in one dimension or
    centered balls, midpoint quadrature otherwise."""
    if w.has_closed_form(ball):
        return w._closed_measure(ball)
    if lattice is None:
        if isinstance(w, SampledWeight):
            lattice = w.lattice
        else:
            raise ValueError("off-center power measure needs a lattice for quadrature")
    return integrate(GridFunction(lattice, w.sample(lattice)), ball)


def _sup_over_family(quantity, family, per_ball, config):
    best = -math.inf
    best_ball = None
    skipped = 0
    for ball in family:
        try:
            val = per_ball(ball)
        except EmptyBallError:
            skipped += 1
            continue
        if val > best:
            best, best_ball = val, ball
    if skipped:
        warnings.warn(
            f"{quantity}: skipped {skipped} ball(s) capturing no lattice node",
            RuntimeWarning,
            stacklevel=3,
        )
    if best_ball is None:
        raise ValueError(f"{quantity}: every ball in the family was empty")
    return EstimateReport(quantity, best, best_ball, config=config, skipped=skipped)


def muckenhoupt_constant(
    w: Weight,
    p: float,
    family: BallFamily,
    lattice: Lattice,
    quadrature: bool = False,
) -> EstimateReport:
    """Joint-average constant of w at exponent p, maximized over the family.

    For p > 1 each ball contributes (avg w) * (avg w^{-1/(p-1)})^{p-1};
    for p = 1 it contributes (avg w) / (min w over nodes in the ball).
    """
    if p < 1:
        raise ValueError(f"exponent must be >= 1, got {p}")

    def per_ball(ball: Ball) -> float:
        avg_w = w.ball_average_pow(1.0, ball, lattice, quadrature)
        if p == 1.0:
            lo = w.min_in(ball, lattice)
            return avg_w / lo if lo > 0 else math.inf
        avg_inv = w.ball_average_pow(-1.0 / (p - 1.0), ball, lattice, quadrature)
        return avg_w * avg_inv ** (p - 1.0)

    return _sup_over_family(
        "A_p", family, per_ball, {"p": p, "weight": str(w), "family": str(family.provenance)}
    )


def apq_constant(
    w: Weight,
    p: float,
    q: float,
    family: BallFamily,
    lattice: Lattice,
    quadrature: bool = False,
) -> EstimateReport:
    """Two-exponent constant: (avg w^q)^{1/q} * (avg w^{-p'})^{1/p'},
    with the p = 1 branch using the max of 1/w over nodes in the ball."""
    if not 1.0 <= p < q:
        raise ValueError(f"need 1 <= p < q, got p={p}, q={q}")

    def per_ball(ball: Ball) -> float:
        first = w.ball_average_pow(q, ball, lattice, quadrature) ** (1.0 / q)
        if p == 1.0:
            lo = w.min_in(ball, lattice)
            return first / lo if lo > 0 else math.inf
        pc = conjugate_exponent(p)
        second = w.ball_average_pow(-pc, ball, lattice, quadrature) ** (1.0 / pc)
        return first * second

    return _sup_over_family(
        "A_pq",
        family,
        per_ball,
        {"p": p, "q": q, "weight": str(w), "family": str(family.provenance)},
    )


def nu_weight(
    ws: Sequence[Weight],
    P: ExponentVector,
    mode: Literal["czo", "fractional"] = "czo",
) -> Weight:
    """Composite output-side weight: prod w_i^{p/p_i} for the singular
    mode, plain product for the fractional mode."""
    if len(ws) != P.m:
        raise ValueError(f"expected {P.m} weights, got {len(ws)}")
    if mode == "czo":
        exps = [P.p / pi for pi in P.exponents]
    elif mode == "fractional":
        exps = [1.0] * P.m
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return product_weight(list(ws), exps)


def multi_ap_constant(
    ws: Sequence[Weight],
    P: ExponentVector,
    family: BallFamily,
    lattice: Lattice,
    quadrature: bool = False,
) -> EstimateReport:
    """Joint constant of a weight vector for the singular-integral scale."""
    if len(ws) != P.m:
        raise ValueError(f"expected {P.m} weights, got {len(ws)}")
    nu = nu_weight(ws, P, "czo")
    p = P.p

    def per_ball(ball: Ball) -> float:
        val = nu.ball_average_pow(1.0, ball, lattice, quadrature) ** (1.0 / p)
        for w, pi, pci in zip(ws, P.exponents, P.conjugates):
            if pi == 1.0:
                lo = w.min_in(ball, lattice)
                val = val / lo if lo > 0 else math.inf
            else:
                avg = w.ball_average_pow(1.0 - pci, ball, lattice, quadrature)
                val = val * avg ** (1.0 / pci)
        return val

    return _sup_over_family(
        "A_P",
        family,
        per_ball,
        {
            "p": P.exponents,
            "weights": [str(w) for w in ws],
            "family": str(family.provenance),
        },
    )


def multi_apq_constant(
    ws: Sequence[Weight],
    P: ExponentVector,
    q: float,
    family: BallFamily,
    lattice: Lattice,
    quadrature: bool = False,
) -> EstimateReport:
    """Joint constant of a weight vector for the fractional scale."""
    if len(ws) != P.m:
        raise ValueError(f"expected {P.m} weights, got {len(ws)}")
    if q <= 0:
        raise ValueError(f"q must be positive, got {q}")
    nu = nu_weight(ws, P, "fractional")

    def per_ball(ball: Ball) -> float:
        val = nu.ball_average_pow(q, ball, lattice, quadrature) ** (1.0 / q)
        for w, pi, pci in zip(ws, P.exponents, P.conjugates):
            if pi == 1.0:
                lo = w.min_in(ball, lattice)
                val = val / lo if lo > 0 else math.inf
            else:
                avg = w.ball_average_pow(-pci, ball, lattice, quadrature)
                val = val * avg ** (1.0 / pci)
        return val

    return _sup_over_family(
        "A_Pq",
        family,
        per_ball,
        {
            "p": P.exponents,
            "q": q,
            "weights": [str(w) for w in ws],
            "family": str(family.provenance),
        },
    )


def doubling_constant(w: Weight, family: BallFamily, lattice: Lattice) -> EstimateReport:
    """max over the family of w(2B)/w(B)."""

    def per_ball(ball: Ball) -> float:
        return weight_measure(w, ball.scaled(2.0), lattice) / weight_measure(w, ball, lattice)

    return _sup_over_family(
        "doubling", family, per_ball, {"weight": str(w), "family": str(family.provenance)}
    )


def ainfty_diagnostics(
    w: Weight,
    family: BallFamily,
    lattice: Lattice,
    sublevels: int = 4,
) -> WeightDiagnostics:
    """Doubling constant, reverse-Jensen ratio, and the comparability
    exponent delta fitted from nested concentric sub-balls.

    The reverse-Jensen ratio compares the arithmetic and geometric node
    means inside each ball, so it is >= 1 exactly.  delta is the
    least-squares slope of log(w(E)/w(B)) against log(|E|/|B|) over
    E = B(c, r/2^k), k = 1..sublevels, minimized over the family; balls
    whose sub-balls capture fewer than two usable points are flagged
    and skipped, and delta is omitted when no ball survives.
    """
    flags: list[str] = []

    def rj_per_ball(ball: Ball) -> float:
        mask = lattice.ball_mask(ball)
        if not mask.any():
            raise EmptyBallError(f"{ball} captures no node")
        vals = w.sample(lattice)[mask]
        return float(np.mean(vals) / np.exp(np.mean(np.log(vals))))

    rj = _sup_over_family(
        "reverse_jensen",
        family,
        rj_per_ball,
        {"weight": str(w), "family": str(family.provenance)},
    )

    best_delta = math.inf
    best_ball = None
    degenerate = 0
    for ball in family:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            w_ball = weight_measure(w, ball, lattice)
        if not (w_ball > 0 and math.isfinite(w_ball)):
            degenerate += 1
            continue
        xs, ys = [], []
        for k in range(1, sublevels + 1):
            sub = ball.scaled(2.0**-k)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                w_sub = weight_measure(w, sub, lattice)
            if not (w_sub > 0 and math.isfinite(w_sub)):
                continue
            xs.append(-k * lattice.n * math.log(2.0))
            ys.append(math.log(w_sub / w_ball))
        if len(xs) < 2:
            degenerate += 1
            continue
        slope = float(np.polyfit(xs, ys, 1)[0])
        if slope < best_delta:
            best_delta, best_ball = slope, ball
    if degenerate:
        flags.append(f"delta regression skipped {degenerate} ball(s)")
    if best_ball is None:
        flags.append("delta omitted: no ball had enough usable sub-balls")
        delta_report = None
    else:
        delta_report = EstimateReport(
            "delta",
            best_delta,
            best_ball,
            config={"weight": str(w), "sublevels": sublevels},
        )

    dbl = doubling_constant(w, family, lattice)
    return WeightDiagnostics(dbl, rj, delta_report, tuple(flags))
