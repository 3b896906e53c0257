"""Conserved quantities, the normalized gradient and the dichotomy classifier."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Optional

import numpy as np
from scipy.optimize import brentq

from .grid import RadialField, dirichlet_form, moment
from .potential import lv_quartic

if TYPE_CHECKING:
    from .ground_state import GroundState

ROOT_RESIDUAL = 1e-12
SANDWICH_TOL = 1e-6


class Inconsistent(ArithmeticError):
    """The two-sided mass-energy bound failed; Q or the quadrature is broken."""


@dataclass(frozen=True)
class ConservedSet:
    mass: float
    kinetic: float
    lv4: float
    energy: float
    momentum: np.ndarray = field(default_factory=lambda: np.zeros(5), repr=False)


def conserved_set(u: RadialField) -> ConservedSet:
    """Mass, ``||grad u||^2``, interaction quartic and energy of ``u``.

    The momentum of a radial field vanishes identically, so it is stored as
    the zero vector rather than computed.
    """
    mass = moment(u, 0)
    kinetic = dirichlet_form(u.grid, u.samples)
    lv4 = lv_quartic(u)
    return ConservedSet(mass, kinetic, lv4, 0.5 * kinetic - 0.25 * lv4)


def eta(u: RadialField, gs: "GroundState") -> float:
    """``||grad u|| ||u|| / (||grad Q|| ||Q||)``."""
    k = dirichlet_form(u.grid, u.samples)
    m = moment(u, 0)
    return math.sqrt(max(k * m, 0.0) / (gs.kinetic * gs.mass))


def _sandwich_violation(ratio: float, et: float) -> float:
    hi = 3 * et**2
    lo = 3 * et**2 - 2 * et**3
    scale = max(abs(ratio), hi, np.finfo(float).tiny)
    return max(ratio - hi, lo - ratio, 0.0) / scale


def mass_energy_ratio(u: RadialField, gs: "GroundState", *, check: bool = True) -> float:
    """``M(u) E(u) / (M(Q) E(Q))`` with ``E(Q)`` taken as ``||grad Q||^2 / 6``.

    With ``check`` set, raise :class:`Inconsistent` if
    ``3 eta^2 >= ratio >= 3 eta^2 - 2 eta^3`` fails by more than 1e-6 relative.
    """
    cs = conserved_set(u)
    ratio = cs.mass * cs.energy / (gs.mass * gs.e_ref)
    if check:
        et = math.sqrt(cs.kinetic * cs.mass / (gs.kinetic * gs.mass))
        bad = _sandwich_violation(ratio, et)
        if bad > SANDWICH_TOL:
            raise Inconsistent(
                f"mass-energy ratio {ratio:.12g} outside [3e^2-2e^3, 3e^2] at "
                f"eta={et:.12g} (relative violation {bad:.3g})"
            )
    return ratio


@dataclass(frozen=True)
class ThresholdRoots:
    ratio: float
    lambda_minus: Optional[float]
    lambda_plus: float


def _cubic(lam: float, ratio: float) -> float:
    return 3 * lam * lam - 2 * lam**3 - ratio


def threshold_roots(ratio: float) -> ThresholdRoots:
    """Roots of ``3 l^2 - 2 l^3 = ratio`` on ``[0, 1)`` and ``(1, inf)``.

    The polynomial increases on [0, 1] and decreases beyond 1, so each root
    is bracketed and found with Brent's method.
    """
    ratio = float(ratio)
    if not math.isfinite(ratio) or ratio >= 1:
        raise ValueError(f"ratio must be finite and < 1, got {ratio!r}")
    lam_minus = None
    if ratio >= 0:
        lam_minus = brentq(_cubic, 0.0, 1.0, args=(ratio,), xtol=1e-15, rtol=1e-15)
    hi = 1.5
    while _cubic(hi, ratio) > 0:
        hi *= 2
    lam = brentq(_cubic, 1.0, hi, args=(ratio,), xtol=1e-15, rtol=1e-15)
    # absolute for |ratio| <= 1, relative beyond, where the cubic itself is large
    limit = ROOT_RESIDUAL * max(1.0, abs(ratio))
    for root in (lam_minus, lam):
        if root is not None and abs(_cubic(root, ratio)) >= limit:
            raise ArithmeticError(f"root {root!r} has residual {_cubic(root, ratio)!r}")
    return ThresholdRoots(ratio, lam_minus, lam)


class RegimeKind(enum.Enum):
    GLOBAL_BOUNDED = "GlobalBounded"
    DIVERGENT = "DivergentRegime"
    OUT_OF_THEORY = "OutOfTheory"
    INCONSISTENT = "Inconsistent"


@dataclass(frozen=True)
class Regime:
    kind: RegimeKind
    ratio: float
    eta0: float
    lambda_minus: Optional[float] = None
    lambda_plus: Optional[float] = None

    def as_dict(self) -> dict:
        return {
            "ratio": self.ratio,
            "eta0": self.eta0,
            "lambda_minus": self.lambda_minus,
            "lambda": self.lambda_plus,
            "regime": self.kind.value,
        }


def classify(u0: RadialField, gs: "GroundState", tol: float = 1e-6) -> Regime:
    """Decide which side of the ground-state threshold ``u0`` lies on.

    A ratio within ``tol`` of 1 (or above) is outside the sub-threshold
    hypothesis.  A value of eta strictly between the two roots cannot occur
    for exact data and is returned as ``Inconsistent``.
    """
    ratio = mass_energy_ratio(u0, gs, check=False)
    et = eta(u0, gs)
    if ratio > 1 - tol:
        return Regime(RegimeKind.OUT_OF_THEORY, ratio, et)
    roots = threshold_roots(ratio)
    lm, lp = roots.lambda_minus, roots.lambda_plus
    if lm is not None and et <= lm + tol:
        kind = RegimeKind.GLOBAL_BOUNDED
    elif et >= lp - tol:
        kind = RegimeKind.DIVERGENT
    else:
        kind = RegimeKind.INCONSISTENT
    return Regime(kind, ratio, et, lm, lp)
