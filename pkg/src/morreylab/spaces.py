"""Weighted Lebesgue, weak Lebesgue, and Morrey-type norms.

Weak norms search the level parameter over the distinct positive
values attained by |f| on the lattice, with the closed threshold
{|f| >= level}: on a finite grid this equals the supremum of the
continuous-level formulation, so no level grid needs tuning.  Morrey
suprema run over a finite BallFamily and report the extremal ball.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .lattice import Ball, BallFamily, GridFunction
from .weights import Weight, weight_measure

__all__ = [
    "MorreyParams",
    "NormReport",
    "lebesgue_norm",
    "weak_lebesgue_norm",
    "morrey_norm",
    "weak_morrey_norm",
    "two_weight_morrey_norm",
]


@dataclass(frozen=True)
class MorreyParams:
    """Integrability exponent p in (0, inf) and shape parameter kappa.

    The meaningful scale is 0 < kappa < 1; values at or above 1 are
    tolerated with a warning so that deliberately broken hypothesis
    configurations can still be run as diagnostics.
    """

    p: float
    kappa: float

    def __post_init__(self) -> None:
        if not self.p > 0:
            raise ValueError(f"p must be positive, got {self.p}")
        if not self.kappa > 0:
            raise ValueError(f"kappa must be positive, got {self.kappa}")
        if self.kappa >= 1.0:
            warnings.warn(
                f"kappa={self.kappa} is outside the scale (0, 1); diagnostic use only",
                RuntimeWarning,
                stacklevel=2,
            )


@dataclass(frozen=True)
class NormReport:
    value: float
    extremal_ball: Ball | None = None
    extremal_level: float | None = None
    provenance: object = None
    flags: tuple[str, ...] = ()


def _weight_values(f: GridFunction, w: Weight) -> np.ndarray:
    return w.sample(f.lattice)


def lebesgue_norm(f: GridFunction, w: Weight, p: float) -> float:
    """(integral of |f|^p w over the whole domain)^(1/p)."""
    if p <= 0:
        raise ValueError(f"p must be positive, got {p}")
    lat = f.lattice
    total = float(np.sum(np.abs(f.values) ** p * _weight_values(f, w)) * lat.h**lat.n)
    return total ** (1.0 / p)


def _weak_sup(absf: np.ndarray, wvals: np.ndarray, p: float, cell: float):
    """max over attained positive levels of level * w{|f| >= level}^(1/p).

    Sorting |f| descending makes the measure of the closed superlevel
    set a cumulative sum, one pass for all levels.
    """
    pos = absf > 0
    if not pos.any():
        return 0.0, None
    vals = absf[pos]
    ws = wvals[pos]
    order = np.argsort(vals)[::-1]
    vals = vals[order]
    ws = ws[order]
    cum = np.cumsum(ws) * cell
    # last index of each run of equal values = measure of {|f| >= value}
    last = np.nonzero(np.append(vals[1:] != vals[:-1], True))[0]
    cand = vals[last] * cum[last] ** (1.0 / p)
    k = int(np.argmax(cand))
    return float(cand[k]), float(vals[last[k]])


def weak_lebesgue_norm(f: GridFunction, w: Weight, p: float) -> NormReport:
    """Weak counterpart of ``lebesgue_norm``; reports the maximizing level."""
    if p <= 0:
        raise ValueError(f"p must be positive, got {p}")
    lat = f.lattice
    value, level = _weak_sup(
        np.abs(f.values).ravel(), _weight_values(f, w).ravel(), p, lat.h**lat.n
    )
    flags = () if level is not None else ("zero function: level undefined",)
    return NormReport(value, None, level, flags=flags)


def _ball_weight_or_none(w: Weight, ball: Ball, lat) -> float | None:
    """w(B), or None for balls whose quadrature measure degenerates to 0."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        wb = weight_measure(w, ball, lat)
    return wb if wb > 0 else None


def morrey_norm(
    f: GridFunction, w: Weight, mp: MorreyParams, family: BallFamily
) -> NormReport:
    """sup over the family of (w(B)^{-kappa} * integral_B |f|^p w)^{1/p}.

    Balls capturing no lattice node (zero quadrature measure) are
    skipped; a family consisting only of such balls is rejected.
    """
    lat = f.lattice
    wvals = _weight_values(f, w)
    absp = np.abs(f.values) ** mp.p
    cell = lat.h**lat.n
    best, best_ball, skipped = -math.inf, None, 0
    for ball in family:
        wb = _ball_weight_or_none(w, ball, lat)
        if wb is None:
            skipped += 1
            continue
        mask = lat.ball_mask(ball)
        num = float(np.sum(absp[mask] * wvals[mask]) * cell)
        val = (num / wb**mp.kappa) ** (1.0 / mp.p)
        if val > best:
            best, best_ball = val, ball
    if best_ball is None:
        raise ValueError("no ball in the family captures a lattice node")
    flags = (f"skipped {skipped} empty ball(s)",) if skipped else ()
    return NormReport(best, best_ball, provenance=family.provenance, flags=flags)


def weak_morrey_norm(
    f: GridFunction, w: Weight, mp: MorreyParams, family: BallFamily
) -> NormReport:
    """Weak Morrey norm; level search restricted to values attained in each ball."""
    lat = f.lattice
    wvals = _weight_values(f, w)
    absf = np.abs(f.values)
    cell = lat.h**lat.n
    best, best_ball, best_level = 0.0, None, None
    for ball in family:
        wb = _ball_weight_or_none(w, ball, lat)
        if wb is None:
            continue
        mask = lat.ball_mask(ball)
        val, level = _weak_sup(absf[mask], wvals[mask], mp.p, cell)
        if level is None:
            continue
        val = val * wb ** (-mp.kappa / mp.p)
        if val > best:
            best, best_ball, best_level = val, ball, level
    flags = () if best_level is not None else ("zero function: level undefined",)
    return NormReport(best, best_ball, best_level, family.provenance, flags)


def two_weight_morrey_norm(
    f: GridFunction, u: Weight, v: Weight, mp: MorreyParams, family: BallFamily
) -> NormReport:
    """sup over the family of (v(B)^{-kappa} * integral_B |f|^p u)^{1/p}."""
    lat = f.lattice
    uvals = _weight_values(f, u)
    absp = np.abs(f.values) ** mp.p
    cell = lat.h**lat.n
    best, best_ball, skipped = -math.inf, None, 0
    for ball in family:
        vb = _ball_weight_or_none(v, ball, lat)
        if vb is None:
            skipped += 1
            continue
        mask = lat.ball_mask(ball)
        num = float(np.sum(absp[mask] * uvals[mask]) * cell)
        val = (num / vb**mp.kappa) ** (1.0 / mp.p)
        if val > best:
            best, best_ball = val, ball
    if best_ball is None:
        raise ValueError("no ball in the family captures a lattice node")
    flags = (f"skipped {skipped} empty ball(s)",) if skipped else ()
    return NormReport(best, best_ball, provenance=family.provenance, flags=flags)
