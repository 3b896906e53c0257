"""Radial ground state of ``Q - Lap Q = (|x|^-3 * Q^2) Q`` and its constants.

The profile is computed with a Petviashvili fixed point on the discrete
operators of :mod:`hartree5d.grid`, so the returned samples are a stationary
state of the evolution scheme, not just an approximation of the continuum Q.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.linalg import lapack
from scipy.optimize import brentq, minimize_scalar

from .grid import (
    RadialField,
    RadialGrid,
    build_grid,
    dirichlet_bands,
    dirichlet_form,
    integrate,
)
from .potential import newton_values

CACHE_HEADER = "hartree5d-gs v1"


class NonConvergence(RuntimeError):
    pass


class SignFlip(RuntimeError):
    pass


class ZeroField(ValueError):
    pass


class CacheFormatError(ValueError):
    pass


@dataclass(frozen=True)
class SolverParams:
    tol: float = 1e-8
    max_iters: int = 500
    exponent: float = 1.5  # p/(p-1) for the cubic nonlinearity


@dataclass(frozen=True)
class GroundState:
    field: RadialField
    mass: float
    kinetic: float
    lv4: float
    energy: float
    c_hls: float
    tol: float = 1e-8
    iterations: Optional[int] = field(default=None, compare=False)
    residual: Optional[float] = field(default=None, compare=False)

    @property
    def grid(self) -> RadialGrid:
        return self.field.grid

    @property
    def profile(self) -> np.ndarray:
        return self.field.samples.real

    @property
    def e_ref(self) -> float:
        """``E(Q)`` in its identity form ``||grad Q||^2 / 6``.

        Threshold quantities (mass-energy ratio, blow-up times) are normalized
        by this value so that the two-sided eta bound reduces exactly to the
        discrete HLS inequality with constant :attr:`c_hls`.
        """
        return self.kinetic / 6.0


def _constants(grid: RadialGrid, q: np.ndarray) -> dict:
    rho = q * q
    mass = integrate(grid, rho)
    kinetic = dirichlet_form(grid, q)
    lv4 = integrate(grid, newton_values(grid, rho) * rho)
    return dict(
        mass=mass,
        kinetic=kinetic,
        lv4=lv4,
        energy=0.5 * kinetic - 0.25 * lv4,
        c_hls=(4.0 / 3.0) / (math.sqrt(mass) * math.sqrt(kinetic)),
    )


def equation_residual(grid: RadialGrid, q: np.ndarray) -> float:
    """``||Q - Lap Q - Phi Q|| / ||Q||`` over the unknowns ``0 .. n-2``."""
    dl, d, du = dirichlet_bands(grid)
    m = grid.n_points - 1
    qi = q[:m]
    lap = d * qi
    lap[1:] += dl * qi[:-1]
    lap[:-1] += du * qi[1:]
    res = qi - lap - newton_values(grid, q * q)[:m] * qi
    w = grid.cell_volumes[:m]
    return math.sqrt(np.dot(w, res * res) / np.dot(w, qi * qi))


def solve_ground_state(grid: RadialGrid, params: SolverParams = SolverParams()) -> GroundState:
    """Petviashvili iteration started from ``exp(-r^2/2)``.

    ``Q <- m^p (1 - Lap)^-1 [Phi(Q^2) Q]`` with the stabilizing factor
    ``m = <(1 - Lap) Q, Q> / <Phi Q, Q>`` and ``p = params.exponent``.
    """
    n = grid.n_points
    m = n - 1
    dl, d, du = dirichlet_bands(grid)
    # (1 - Lap) is a symmetric-in-W M-matrix; factor once.
    lu = lapack.dgttrf(-dl, 1.0 - d, -du)
    if lu[-1] != 0:
        raise NonConvergence("singular (1 - Lap) system")
    w = grid.cell_volumes[:m]
    r = grid.nodes
    q = np.exp(-0.5 * r * r)
    q[-1] = 0.0
    residual = math.inf
    for it in range(params.max_iters + 1):
        qi = q[:m]
        phi = newton_values(grid, q * q)[:m]
        nl = phi * qi
        lq = (1.0 - d) * qi
        lq[1:] -= dl * qi[:-1]
        lq[:-1] -= du * qi[1:]
        residual = math.sqrt(np.dot(w, (lq - nl) ** 2) / np.dot(w, qi * qi))
        if residual < params.tol:
            break
        if it == params.max_iters:
            raise NonConvergence(
                f"no convergence after {params.max_iters} iterations "
                f"(residual {residual:.3e}, tol {params.tol:.1e})"
            )
        stab = np.dot(w, lq * qi) / np.dot(w, nl * qi)
        sol, info = lapack.dgttrs(*lu[:-1], nl)
        if info != 0:
            raise NonConvergence("tridiagonal solve failed")
        q = np.zeros(n)
        q[:m] = stab ** params.exponent * sol
        if np.any(q[:m] < 0):
            raise SignFlip(f"iterate lost positivity at iteration {it + 1}")
    return GroundState(
        RadialField(grid, q),
        tol=params.tol,
        iterations=it,
        residual=residual,
        **_constants(grid, q),
    )


def pohozaev_residuals(gs: GroundState) -> tuple[float, float, float]:
    """Relative defects of ``L = 4K/3``, ``L = 4M`` and ``E = K/6``."""
    return (
        abs(gs.lv4 - 4.0 / 3.0 * gs.kinetic) / gs.lv4,
        abs(gs.lv4 - 4.0 * gs.mass) / gs.lv4,
        abs(gs.energy - gs.kinetic / 6.0) / abs(gs.energy),
    )


def hls_quotient(u: RadialField) -> float:
    """``||u||_{L^V}^4 / (||u||_2 ||grad u||_2^3)``."""
    from .potential import lv_quartic

    m = integrate(u.grid, u.density)
    k = dirichlet_form(u.grid, u.samples)
    return lv_quartic(u) / (math.sqrt(m) * k**1.5)


# ---------------------------------------------------------------------------
# cache


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def cache_path(cache_dir, n_points: int, r_max: float, tol: float) -> Path:
    return Path(cache_dir) / f"gs_n{n_points}_r{_fmt(r_max)}_tol{_fmt(tol)}.txt"


def save_ground_state(gs: GroundState, path) -> None:
    lines = [CACHE_HEADER, str(gs.grid.n_points), _fmt(gs.grid.r_max), _fmt(gs.tol)]
    lines += [_fmt(v) for v in (gs.mass, gs.kinetic, gs.lv4, gs.energy, gs.c_hls)]
    lines += [_fmt(v) for v in gs.profile]
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text("\n".join(lines) + "\n")
    tmp.replace(path)


def load_ground_state(path) -> GroundState:
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0].strip() != CACHE_HEADER:
        raise CacheFormatError(f"{path}: missing header {CACHE_HEADER!r}")
    try:
        n = int(lines[1])
        r_max, tol = float(lines[2]), float(lines[3])
        consts = [float(x) for x in lines[4:9]]
        values = np.array([float(x) for x in lines[9:]])
    except (IndexError, ValueError) as exc:
        raise CacheFormatError(f"{path}: malformed cache ({exc})") from exc
    if values.size != n:
        raise CacheFormatError(f"{path}: expected {n} node values, found {values.size}")
    grid = build_grid(n, r_max)
    mass, kinetic, lv4, energy, c_hls = consts
    return GroundState(RadialField(grid, values), mass, kinetic, lv4, energy, c_hls, tol=tol)


def get_ground_state(grid: RadialGrid, params: SolverParams = SolverParams(),
                     cache_dir=None) -> tuple[GroundState, bool]:
    """Load from ``cache_dir`` when present, otherwise solve and store.

    Returns ``(gs, cache_hit)``.  Callers serialize access to one cache dir.
    """
    if cache_dir is not None:
        path = cache_path(cache_dir, grid.n_points, grid.r_max, params.tol)
        if path.exists():
            return load_ground_state(path), True
    gs = solve_ground_state(grid, params)
    if cache_dir is not None:
        save_ground_state(gs, path)
    return gs, False


# ---------------------------------------------------------------------------
# modulation fit


@dataclass(frozen=True)
class ModulationFit:
    theta: float
    lambda_fit: float
    d_l2: float
    d_h1: float
    beta: float


class _Profile:
    """Cubic-spline extension of grid samples to arbitrary radii (zero outside)."""

    def __init__(self, grid: RadialGrid, values: np.ndarray):
        self.r_max = grid.r_max
        self._re = CubicSpline(grid.nodes, values.real, bc_type=((1, 0.0), "not-a-knot"))
        self._im = None
        if np.iscomplexobj(values) and np.any(values.imag != 0):
            self._im = CubicSpline(grid.nodes, values.imag, bc_type=((1, 0.0), "not-a-knot"))

    def __call__(self, r: np.ndarray, nu: int = 0) -> np.ndarray:
        out = self._re(r, nu).astype(complex if self._im is not None else float)
        if self._im is not None:
            out = out + 1j * self._im(r, nu)
        out[r > self.r_max] = 0.0
        return out


def modulated(gs: GroundState, lam: float, theta: float = 0.0) -> RadialField:
    """``exp(i theta) lam^{5/2} Q(lam r)`` resampled on the ground-state grid."""
    prof = _Profile(gs.grid, gs.profile)
    r = np.asarray(gs.grid.nodes)
    return RadialField(gs.grid, np.exp(1j * theta) * lam**2.5 * prof(lam * r))


def proximity_fit(u: RadialField, gs: GroundState, *, lam_range=(0.1, 10.0),
                  tol: float = 1e-8) -> ModulationFit:
    """Best ``exp(i theta) lam^{5/2} Q(lam x)`` approximation of the mass-normalized ``u``.

    ``u`` is first rescaled to ``v(x) = beta^2 u(beta x)`` with
    ``beta = M(u)/M(Q)``, which has the mass of Q.  Translations are not
    representable on a radial grid, so the centre is fixed at the origin.
    ``d_h1`` is the gradient distance divided by the fitted scale.
    """
    gs.grid.check_same(u.grid)
    grid = gs.grid
    r = np.asarray(grid.nodes)
    w = grid.quad_weights
    mass = integrate(grid, u.density)
    if mass <= 0:
        raise ZeroField("cannot fit the zero field")
    beta = mass / gs.mass
    if abs(beta - 1) > 1e-14:
        v = beta**2 * _Profile(grid, u.samples)(beta * r)
    else:
        v = np.asarray(u.samples)

    q = _Profile(grid, gs.profile)

    def overlap(lam):
        return np.dot(w, lam**2.5 * q(lam * r) * v)

    def slope(lam):
        # d/dlam |<Q_lam, v>|
        ov = overlap(lam)
        dq = 2.5 * lam**1.5 * q(lam * r) + lam**2.5 * r * q(lam * r, 1)
        return np.real(np.conj(ov) * np.dot(w, dq * v)) / max(abs(ov), 1e-300)

    lo, hi = lam_range
    scan = np.geomspace(lo, hi, 121)
    vals = np.array([abs(overlap(s)) for s in scan])
    k = int(np.argmax(vals))
    a, c = scan[max(k - 1, 0)], scan[min(k + 1, len(scan) - 1)]
    if 0 < k < len(scan) - 1:
        res = minimize_scalar(lambda s: -abs(overlap(s)), bracket=(a, scan[k], c),
                              method="golden", tol=tol)
        lam = float(res.x)
        # polish on the derivative, which crosses zero linearly
        da, dc = slope(a), slope(c)
        if da > 0 > dc:
            lam = brentq(slope, a, c, xtol=1e-15, rtol=1e-15)
    else:
        lam = float(scan[k])
    ov = overlap(lam)
    theta = float(np.angle(ov))
    if theta <= -math.pi:
        theta = math.pi
    diff = v - np.exp(1j * theta) * lam**2.5 * q(lam * r)
    d_l2 = math.sqrt(max(integrate(grid, np.abs(diff) ** 2), 0.0))
    d_h1 = math.sqrt(dirichlet_form(grid, diff)) / lam
    return ModulationFit(theta, lam, d_l2, d_h1, beta)
