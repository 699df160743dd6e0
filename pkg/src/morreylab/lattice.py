"""Truncated uniform lattices on [-L, L]^n with midpoint-rule quadrature.

Everything downstream (weight constants, norms, operator quadrature)
reduces to weighted sums over lattice nodes.  A ball selects nodes by
strict Euclidean distance from its center; integrals are h^n times the
node sum over the selection.  All types are immutable after
construction and all operations are pure, so per-ball evaluations can
run in parallel without coordination.

Convention used by the experiment harness: functions fed to tail
estimates are supported in [-L/2, L/2]^n, so that dyadic annuli
reaching past the domain boundary contribute exactly zero instead of a
silently truncated value.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Iterable, Iterator, Sequence

import numpy as np

__all__ = [
    "Lattice",
    "GridFunction",
    "Ball",
    "BallFamily",
    "BallFamilySpec",
    "make_lattice",
    "integrate",
    "split_at_ball",
    "make_ball_family",
    "unit_ball_volume",
]


def unit_ball_volume(n: int) -> float:
    """Volume of the Euclidean unit ball in dimension n."""
    return math.pi ** (n / 2.0) / math.gamma(n / 2.0 + 1.0)


@dataclass(frozen=True)
class Lattice:
    """Uniform grid on [-L, L]^n with an odd number of nodes per axis.

    N odd guarantees the origin is a node; the spacing is h = 2L/(N-1).
    """

    n: int
    L: float
    N: int

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError(f"dimension must be >= 1, got {self.n}")
        if self.L <= 0:
            raise ValueError(f"half-width must be positive, got {self.L}")
        if self.N < 3 or self.N % 2 == 0:
            raise ValueError(f"points per axis must be odd and >= 3, got {self.N}")

    @property
    def h(self) -> float:
        return 2.0 * self.L / (self.N - 1)

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.N,) * self.n

    @property
    def node_count(self) -> int:
        return self.N**self.n

    @cached_property
    def axis(self) -> np.ndarray:
        ax = np.linspace(-self.L, self.L, self.N)
        ax.setflags(write=False)
        return ax

    def coordinate_grids(self) -> tuple[np.ndarray, ...]:
        """Per-axis coordinate arrays broadcastable to ``shape``."""
        grids = []
        for i in range(self.n):
            sh = [1] * self.n
            sh[i] = self.N
            grids.append(self.axis.reshape(sh))
        return tuple(grids)

    def squared_distance_from(self, point: Sequence[float]) -> np.ndarray:
        pt = np.asarray(point, dtype=float)
        if pt.shape != (self.n,):
            raise ValueError(f"point must have {self.n} coordinates, got {pt.shape}")
        d2 = np.zeros(self.shape)
        for grid, c in zip(self.coordinate_grids(), pt):
            d2 = d2 + (grid - c) ** 2
        return d2

    def ball_mask(self, ball: "Ball") -> np.ndarray:
        """Boolean node selection |x - center| < radius (strict)."""
        return self.squared_distance_from(ball.center) < ball.radius**2

    def intersects(self, ball: "Ball") -> bool:
        """True when the ball meets the closed cube [-L, L]^n."""
        gap2 = sum(max(abs(c) - self.L, 0.0) ** 2 for c in ball.center)
        return gap2 < ball.radius**2

    def refined(self) -> "Lattice":
        """Same domain with spacing halved (N -> 2N - 1, still odd)."""
        return Lattice(self.n, self.L, 2 * self.N - 1)


def make_lattice(n: int, L: float, N: int) -> Lattice:
    """Build a lattice; rejects even N, N < 3 and nonpositive L."""
    return Lattice(n, L, N)


@dataclass(frozen=True, eq=False)
class Ball:
    """Open Euclidean ball; ``scaled`` gives the concentric dilate."""

    center: tuple[float, ...]
    radius: float

    def __post_init__(self) -> None:
        c = self.center
        if np.isscalar(c):
            object.__setattr__(self, "center", (float(c),))
        else:
            object.__setattr__(self, "center", tuple(float(x) for x in c))
        if not self.radius > 0:
            raise ValueError(f"radius must be positive, got {self.radius}")

    @property
    def n(self) -> int:
        return len(self.center)

    def scaled(self, factor: float) -> "Ball":
        return Ball(self.center, factor * self.radius)

    def volume(self) -> float:
        """Exact Lebesgue measure (2r in one dimension, pi r^2 in two)."""
        return unit_ball_volume(self.n) * self.radius**self.n

    def __repr__(self) -> str:
        c = ", ".join(f"{x:g}" for x in self.center)
        return f"Ball(({c}), r={self.radius:g})"


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Real values, one per lattice node.  Values are finite and frozen."""

    lattice: Lattice
    values: np.ndarray

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != self.lattice.shape:
            raise ValueError(
                f"values shape {vals.shape} does not match lattice {self.lattice.shape}"
            )
        if not np.all(np.isfinite(vals)):
            raise ValueError("grid function values must be finite")
        vals = vals.copy()
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    # -- algebra ---------------------------------------------------------
    def _like(self, values: np.ndarray) -> "GridFunction":
        return GridFunction(self.lattice, values)

    def _other_values(self, other) -> np.ndarray:
        if isinstance(other, GridFunction):
            if other.lattice != self.lattice:
                raise ValueError("grid functions live on different lattices")
            return other.values
        return np.asarray(other, dtype=float)

    def __add__(self, other) -> "GridFunction":
        return self._like(self.values + self._other_values(other))

    def __sub__(self, other) -> "GridFunction":
        return self._like(self.values - self._other_values(other))

    def __mul__(self, other) -> "GridFunction":
        return self._like(self.values * self._other_values(other))

    __rmul__ = __mul__

    def __neg__(self) -> "GridFunction":
        return self._like(-self.values)

    def __abs__(self) -> "GridFunction":
        return self._like(np.abs(self.values))

    # -- factories -------------------------------------------------------
    @staticmethod
    def constant(lattice: Lattice, value: float) -> "GridFunction":
        return GridFunction(lattice, np.full(lattice.shape, float(value)))

    @staticmethod
    def from_callable(lattice: Lattice, fn: Callable[..., np.ndarray]) -> "GridFunction":
        """Sample a vectorized callable of the n coordinate arrays."""
        grids = np.broadcast_arrays(*lattice.coordinate_grids())
        return GridFunction(lattice, np.asarray(fn(*grids), dtype=float))

    @staticmethod
    def indicator_box(
        lattice: Lattice, lo: Sequence[float] | float, hi: Sequence[float] | float
    ) -> "GridFunction":
        """Indicator of the box prod_i [lo_i, hi_i], sampled by cell averages.

        Each node carries the exact fraction of its midpoint cell inside
        the box, so whole-domain integrals of the indicator are exact
        whatever the alignment; boundary nodes get fractional values.
        """
        lo_t = (lo,) * lattice.n if np.isscalar(lo) else tuple(lo)
        hi_t = (hi,) * lattice.n if np.isscalar(hi) else tuple(hi)
        half = lattice.h / 2.0
        frac = np.ones(lattice.shape)
        for grid, a, b in zip(lattice.coordinate_grids(), lo_t, hi_t):
            overlap = np.minimum(grid + half, b) - np.maximum(grid - half, a)
            frac = frac * np.clip(overlap, 0.0, lattice.h) / lattice.h
        return GridFunction(lattice, frac)

    @staticmethod
    def poly_bump(
        lattice: Lattice,
        center: Sequence[float] | float,
        width: float,
        amplitude: float = 1.0,
    ) -> "GridFunction":
        """Compactly supported C^2 bump  a * (1 - |x-c|^2/s^2)^3  on |x-c| <= s."""
        if width <= 0:
            raise ValueError("bump width must be positive")
        c = (center,) * lattice.n if np.isscalar(center) else tuple(center)
        d2 = lattice.squared_distance_from(c)
        profile = np.clip(1.0 - d2 / width**2, 0.0, None) ** 3
        return GridFunction(lattice, amplitude * profile)


def integrate(f: GridFunction, region: Ball | None = None) -> float:
    """Midpoint-rule integral h^n * sum of f over the region's nodes.

    ``region=None`` sums over the whole domain.  A ball capturing no
    node yields 0 and a RuntimeWarning so callers can flag the case.
    """
    lat = f.lattice
    if region is None:
        return float(f.values.sum() * lat.h**lat.n)
    mask = lat.ball_mask(region)
    if not mask.any():
        warnings.warn(
            f"{region} contains no lattice node; integral treated as 0",
            RuntimeWarning,
            stacklevel=2,
        )
        return 0.0
    return float(f.values[mask].sum() * lat.h**lat.n)


def split_at_ball(f: GridFunction, ball: Ball) -> tuple[GridFunction, GridFunction]:
    """Near/far decomposition at the doubled ball.

    Returns (f * chi_{2B}, f - f * chi_{2B}); the parts have disjoint
    supports and reconstruct f exactly at every node.
    """
    mask = f.lattice.ball_mask(ball.scaled(2.0))
    near = np.where(mask, f.values, 0.0)
    return GridFunction(f.lattice, near), GridFunction(f.lattice, f.values - near)


@dataclass(frozen=True)
class BallFamilySpec:
    """Generator for a deterministic family: centers on a node sublattice
    (every ``stride``-th node around the origin), radii r0 * ratio^j for
    0 <= j < count."""

    stride: int
    r0: float
    count: int
    ratio: float = 2.0

    def __post_init__(self) -> None:
        if self.stride < 1:
            raise ValueError("stride must be >= 1")
        if self.count < 1:
            raise ValueError("count must be >= 1")
        if self.r0 <= 0:
            raise ValueError("base radius must be positive")
        if self.ratio <= 1:
            raise ValueError("radius ratio must exceed 1")

    def refined(self) -> "BallFamilySpec":
        """One refinement step: halve the base radius, keep the top radius."""
        return BallFamilySpec(self.stride, self.r0 / 2.0, self.count + 1, self.ratio)


@dataclass(frozen=True)
class BallFamily:
    """Finite, ordered ball family; all suprema in this package run over one."""

    balls: tuple[Ball, ...]
    provenance: BallFamilySpec | str | None = None

    def __post_init__(self) -> None:
        if len(self.balls) == 0:
            raise ValueError("ball family must be nonempty")

    def __iter__(self) -> Iterator[Ball]:
        return iter(self.balls)

    def __len__(self) -> int:
        return len(self.balls)

    @staticmethod
    def from_balls(balls: Iterable[Ball], provenance: str | None = "manual") -> "BallFamily":
        return BallFamily(tuple(balls), provenance)

    @staticmethod
    def centered(radii: Iterable[float], n: int = 1) -> "BallFamily":
        """Origin-centered family, one ball per radius."""
        origin = (0.0,) * n
        return BallFamily(tuple(Ball(origin, r) for r in radii), "centered")


def make_ball_family(lattice: Lattice, spec: BallFamilySpec) -> BallFamily:
    """Materialize a family on the lattice, center-major then radius-minor.

    Balls smaller than one cell (r0 < h) are rejected; balls that miss
    the domain entirely are dropped.
    """
    if spec.r0 < lattice.h:
        raise ValueError(
            f"base radius {spec.r0} is below the lattice spacing {lattice.h}"
        )
    mid = (lattice.N - 1) // 2
    reach = mid // spec.stride
    axis_idx = [mid + k * spec.stride for k in range(-reach, reach + 1)]
    centers = [
        tuple(float(lattice.axis[i]) for i in combo)
        for combo in itertools.product(axis_idx, repeat=lattice.n)
    ]
    balls = []
    for center in centers:
        for j in range(spec.count):
            ball = Ball(center, spec.r0 * spec.ratio**j)
            if lattice.intersects(ball):
                balls.append(ball)
    return BallFamily(tuple(balls), spec)
