"""Variance and localized-variance diagnostics and blow-up time estimates.

``z_R(u) = int R^2 phi(|x|/R) |u|^2 dx`` uses a cutoff with ``phi(s) = s^2``
near the origin and compact support.  Its second derivative along the flow is
bounded by ``24 E - 4 ||grad u||^2 + A_R`` with a remainder controlled by
tail quantities; the estimators below turn that into explicit times.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np
from scipy.interpolate import PPoly

from .evolution import bond_rate
from .grid import RadialField, dirichlet_form, integrate, moment, tail_l2_sq
from .ground_state import GroundState, ZeroField
from .potential import tail_lv_quartic

CURVATURE_CAP = 2.0
CURVATURE_SLACK = 1e-9


class ConstraintViolated(ValueError):
    pass


# ---------------------------------------------------------------------------
# cutoff


@dataclass(frozen=True)
class CutoffProfile:
    """C^2 cutoff with ``phi = s^2`` on [0, 1] and ``phi = 0`` beyond ``s_out``.

    ``phi''`` is continuous and piecewise linear: it drops from 2 at s = 1 to
    ``-dip`` at ``1 + d``, rises to ``plateau`` at ``1 + 2d``, stays there until
    ``s_out - e`` and returns to 0 at ``s_out``.  ``dip`` and ``plateau`` are
    fixed by ``phi(s_out) = phi'(s_out) = 0``.
    """

    s_out: float
    d: float
    e: float
    dip: float
    plateau: float
    _pp: PPoly
    s: np.ndarray
    phi: np.ndarray
    dphi: np.ndarray
    d2phi: np.ndarray

    def __call__(self, s) -> np.ndarray:
        return self._eval(s, 0)

    def d1(self, s) -> np.ndarray:
        return self._eval(s, 1)

    def d2(self, s) -> np.ndarray:
        return self._eval(s, 2)

    def _eval(self, s, nu: int) -> np.ndarray:
        s = np.abs(np.asarray(s, dtype=float))
        out = self._pp.derivative(nu)(s) if nu else self._pp(s)
        inner = s <= 1
        exact = (s * s, 2 * s, np.full_like(s, 2.0))[nu]
        out = np.where(inner, exact, out)
        return np.where(s >= self.s_out, 0.0, out)


def _curvature(s_out, d, e, dip, plateau) -> PPoly:
    x = np.array([0.0, 1.0, 1 + d, 1 + 2 * d, s_out - e, s_out, s_out + 1.0])
    y = np.array([2.0, 2.0, -dip, plateau, plateau, 0.0, 0.0])
    slope = np.diff(y) / np.diff(x)
    return PPoly(np.vstack([slope, y[:-1]]), x)


def build_cutoff(s_out: float = 2.5, d: float = 0.2, e: float = 0.05,
                 n_samples: int = 2001) -> CutoffProfile:
    """Construct and verify the cutoff; raise :class:`ConstraintViolated` on failure.

    The returned object's ``_pp`` holds ``phi`` itself as a piecewise cubic
    obtained by integrating the curvature twice from the origin.
    """
    if not (d > 0 and e > 0 and 1 + 2 * d < s_out - e):
        raise ValueError(f"need d, e > 0 and 1 + 2d < s_out - e; got s_out={s_out}, d={d}, e={e}")

    def ends(dip, plateau):
        phi = _curvature(s_out, d, e, dip, plateau).antiderivative(2)
        return np.array([phi.derivative()(s_out), phi(s_out)])

    c0 = ends(0.0, 0.0)
    jac = np.column_stack([ends(1.0, 0.0) - c0, ends(0.0, 1.0) - c0])
    dip, plateau = np.linalg.solve(jac, -c0)
    pp = _curvature(s_out, d, e, dip, plateau).antiderivative(2)

    s = np.linspace(0.0, s_out + 0.5, n_samples)
    prof = CutoffProfile(s_out, d, e, float(dip), float(plateau), pp, s,
                         np.empty(0), np.empty(0), np.empty(0))
    phi, dphi, d2phi = prof(s), prof.d1(s), prof.d2(s)
    if d2phi.max() > CURVATURE_CAP + CURVATURE_SLACK:
        raise ConstraintViolated(f"max phi'' = {d2phi.max():.6g} exceeds {CURVATURE_CAP}")
    if phi.min() < -1e-12:
        raise ConstraintViolated(f"phi dips to {phi.min():.3g} < 0")
    for a in (phi, dphi, d2phi):
        a.setflags(write=False)
    object.__setattr__(prof, "phi", phi)
    object.__setattr__(prof, "dphi", dphi)
    object.__setattr__(prof, "d2phi", d2phi)
    return prof


# ---------------------------------------------------------------------------
# variance family


def variance(u: RadialField) -> float:
    return moment(u, 2)


def variance_rate(u: RadialField) -> float:
    """``d/dt ||x u||^2 = 4 Im int r conj(u) u_r dx``, in the bond form that is
    exact for the discrete linear flow."""
    r = u.grid.nodes
    return bond_rate(u.grid, u.samples, r * r)


def _z_weight(u: RadialField, R: float, phi: CutoffProfile) -> np.ndarray:
    if not R > 0:
        raise ValueError(f"R must be positive, got {R!r}")
    return R * R * phi(np.asarray(u.grid.nodes) / R)


def z_R(u: RadialField, R: float, phi: CutoffProfile) -> float:
    return integrate(u.grid, _z_weight(u, R, phi) * u.density)


def z_R_rate(u: RadialField, R: float, phi: CutoffProfile) -> float:
    return bond_rate(u.grid, u.samples, _z_weight(u, R, phi))


@dataclass(frozen=True)
class VirialConfig:
    c_local: float = 1.0
    c_rs: float = 1.0
    gamma: float = 0.1
    R: float = 10.0

    def __post_init__(self):
        for name in ("c_local", "c_rs", "gamma", "R"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"virial.{name} must be positive, got {v!r}")


def a_R_bound(u: RadialField, R: float, cfg: VirialConfig) -> float:
    """``c (||u||^2_{L^2(|x|>R)} / R^2 + ||u||^4_{L^V(|x|>R)})``."""
    return cfg.c_local * (tail_l2_sq(u, R) / R**2 + tail_lv_quartic(u, R))


# ---------------------------------------------------------------------------
# blow-up time estimators


def _tb(r0: float, r1: float) -> float:
    return r1 + math.sqrt(r1 * r1 + 2 * r0)


def tb_finite_variance(variance0: float, rate0: float, lam: float, E_Q: float) -> float:
    """``t_b = r'(0) + sqrt(r'(0)^2 + 2 r(0))`` with ``r = ||xu||^2 / (48 lam^2 (lam-1) E_Q)``."""
    if not lam > 1:
        raise ValueError(f"lambda must exceed 1, got {lam!r}")
    if variance0 < 0:
        raise ValueError("variance must be nonnegative")
    if not E_Q > 0:
        raise ValueError("E_Q must be positive")
    scale = 48 * lam * lam * (lam - 1) * E_Q
    return _tb(variance0 / scale, rate0 / scale)


@dataclass(frozen=True)
class HypothesisFailed:
    which: str
    measured: float
    required: float

    def as_dict(self) -> dict:
        return {"which": self.which, "measured": self.measured, "required": self.required}


@dataclass(frozen=True)
class TbResult:
    estimator: str
    t_b: Optional[float]
    c: float
    failure: Optional[HypothesisFailed] = None
    conditional: bool = False
    binding: Optional[str] = None
    R_required: Optional[float] = None

    @property
    def ok(self) -> bool:
        return self.failure is None

    def as_dict(self) -> dict:
        d = {"estimator": self.estimator, "t_b": self.t_b, "c": self.c,
             "conditional": self.conditional}
        if self.R_required is not None:
            d["R_required"] = self.R_required
        if self.binding is not None:
            d["binding"] = self.binding
        if self.failure is not None:
            d["failure"] = self.failure.as_dict()
        return d


def _check_gamma(lam: float, gamma: float) -> None:
    if not lam > 1:
        raise ValueError(f"lambda must exceed 1, got {lam!r}")
    hi = min(lam - 1, 1.0)
    if not 0 < gamma < hi:
        raise ValueError(f"gamma must lie in (0, {hi:.6g}), got {gamma!r}")


def _tb_local(u0, lam, cfg, gs, phi) -> float:
    scale = 48 * lam * lam * (lam - 1 - cfg.gamma) * gs.e_ref
    return _tb(z_R(u0, cfg.R, phi) / scale, z_R_rate(u0, cfg.R, phi) / scale)


def tb_localized(u0: RadialField, lam: float, cfg: VirialConfig, gs: GroundState,
                 phi: CutoffProfile, trajectory: Optional[Iterable[RadialField]] = None) -> TbResult:
    """Estimate from ``z_R`` under a small interaction tail outside radius R.

    The tail hypothesis is needed for all times.  It is checked at t = 0 and
    on every field of ``trajectory`` if given; the answer is therefore
    labelled conditional.
    """
    _check_gamma(lam, cfg.gamma)
    c = cfg.c_local
    R_req = math.sqrt(c / (6 * cfg.gamma))
    if cfg.R < R_req:
        return TbResult("localized", None, c, HypothesisFailed("R lower bound", cfg.R, R_req),
                        R_required=R_req)
    cap = 6 * cfg.gamma * gs.e_ref / c
    fields = [u0] + ([] if trajectory is None else list(trajectory))
    worst = max(tail_lv_quartic(f, cfg.R) for f in fields)
    if worst >= cap:
        return TbResult("localized", None, c, HypothesisFailed("L^V tail", worst, cap),
                        conditional=True, R_required=R_req)
    return TbResult("localized", _tb_local(u0, lam, cfg, gs, phi), c,
                    conditional=True, R_required=R_req)


def tb_radial(u0: RadialField, lam: float, cfg: VirialConfig, gs: GroundState,
              phi: CutoffProfile) -> TbResult:
    """Estimate for radial data, where only a lower bound on R is needed."""
    _check_gamma(lam, cfg.gamma)
    c = max(cfg.c_local, cfg.c_rs)
    branches = {
        "sqrt(c/6gamma)": math.sqrt(c / (6 * cfg.gamma)),
        "(c E(Q)/12gamma)^(5/4)": (c * gs.e_ref / (12 * cfg.gamma)) ** 1.25,
    }
    binding = max(branches, key=branches.get)
    R_req = branches[binding]
    if cfg.R < R_req:
        return TbResult("radial", None, c, HypothesisFailed("R lower bound", cfg.R, R_req),
                        binding=binding, R_required=R_req)
    return TbResult("radial", _tb_local(u0, lam, cfg, gs, phi), c,
                    binding=binding, R_required=R_req)


def radial_sobolev_quotient(u: RadialField) -> float:
    """``sup r^2 |u|`` squared over ``||u||_2 ||grad u||_2``.

    The supremum is refined with a parabola through the largest node value
    and its neighbours, which keeps the quotient accurate when the peak sits
    between nodes.
    """
    g = u.grid
    f = np.asarray(g.nodes) ** 2 * np.abs(u.samples)
    m = moment(u, 0)
    k = dirichlet_form(g, u.samples)
    if not (m > 0 and k > 0):
        raise ZeroField("radial Sobolev quotient of the zero field")
    i = int(np.argmax(f))
    top = f[i]
    if 0 < i < len(f) - 1:
        a, b, c = f[i - 1], f[i], f[i + 1]
        curv = a - 2 * b + c
        if curv < 0:
            top = b - 0.125 * (c - a) ** 2 / curv
    return float(top * top / math.sqrt(m * k))
