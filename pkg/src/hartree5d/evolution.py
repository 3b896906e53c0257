"""Strang-split time stepping for ``i u_t + Lap u + (|x|^-3 * |u|^2) u = 0``.

The linear part is advanced with Crank-Nicolson on the unknowns
``0 .. n-2`` (the node at ``r_max`` is held at zero).  Because the discrete
Laplacian is symmetric in the cell-volume inner product, the Cayley map is
unitary there and conserves the discrete mass and Dirichlet energy exactly.
The potential sub-flow ``u -> exp(i t Phi) u`` is exact since it leaves
``|u|`` and hence ``Phi`` unchanged.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.linalg import lapack

from .grid import RadialField, RadialGrid, dirichlet_bands, dirichlet_form, integrate, tail_integrate
from .potential import newton_values


class LinearSolveError(ArithmeticError):
    pass


@dataclass(frozen=True)
class EvolutionConfig:
    dt0: float = 5e-4
    t_max: float = 1.0
    eta_max: float = 10.0
    dt_min: float = 1e-9
    boundary_tol: float = 1e-4
    record_stride: int = 1
    adaptive: bool = True
    c_adapt: float = 0.1
    splitting: str = "LNL"
    nonlinear: bool = True

    def __post_init__(self):
        if not (self.dt0 > 0 and math.isfinite(self.dt0)):
            raise ValueError(f"dt0 must be positive, got {self.dt0!r}")
        if not (0 < self.dt_min < self.dt0):
            raise ValueError("need 0 < dt_min < dt0")
        if not (self.t_max > 0 and math.isfinite(self.t_max)):
            raise ValueError(f"t_max must be positive, got {self.t_max!r}")
        if not self.eta_max > 1:
            raise ValueError(f"eta_max must exceed 1, got {self.eta_max!r}")
        if not self.boundary_tol > 0:
            raise ValueError("boundary_tol must be positive")
        if int(self.record_stride) != self.record_stride or self.record_stride < 1:
            raise ValueError("record_stride must be a positive integer")
        if not self.c_adapt > 0:
            raise ValueError("c_adapt must be positive")
        if self.splitting not in ("LNL", "NLN"):
            raise ValueError(f"splitting must be 'LNL' or 'NLN', got {self.splitting!r}")


@dataclass(frozen=True)
class TrajectorySample:
    t: float
    mass: float
    energy: float
    grad_norm_sq: float
    eta: float
    variance: float
    variance_rate: float
    z_R: float
    tail_mass_outer: float
    dt_used: float


class Verdict(enum.Enum):
    COMPLETED = "Completed"
    BLOWUP = "BlowupDetected"
    BOUNDARY_INVALID = "BoundaryInvalid"
    STEP_FLOOR = "StepFloor"


@dataclass(frozen=True)
class RunOutcome:
    verdict: Verdict
    t: float
    reason: str = ""


class CrankNicolson:
    """Cayley map ``(1 - i dt/2 Lap)^-1 (1 + i dt/2 Lap)`` with a cached factorization."""

    def __init__(self, grid: RadialGrid):
        self.grid = grid
        self.dl, self.d, self.du = dirichlet_bands(grid)
        self.m = grid.n_points - 1
        self._dt = None
        self._lu = None

    def _factor(self, dt: float):
        if dt != self._dt:
            a = 0.5j * dt
            lu = lapack.zgttrf(-a * self.dl + 0j, 1.0 - a * self.d, -a * self.du + 0j)
            if lu[-1] != 0:
                raise LinearSolveError(f"singular Crank-Nicolson system at dt={dt!r}")
            self._dt, self._lu = dt, lu[:-1]
        return self._lu

    def __call__(self, s: np.ndarray, dt: float) -> np.ndarray:
        """Advance interior samples ``s[:n-1]`` by ``dt``; returns a new full array."""
        if dt == 0:
            return s.copy()
        m = self.m
        a = 0.5j * dt
        x = s[:m]
        rhs = (1.0 + a * self.d) * x
        rhs[1:] += a * self.dl * x[:-1]
        rhs[:-1] += a * self.du * x[1:]
        sol, info = lapack.zgttrs(*self._factor(dt), rhs)
        if info != 0:
            raise LinearSolveError("Crank-Nicolson solve failed")
        out = np.zeros_like(s)
        out[:m] = sol
        return out


def _potential_flow(grid: RadialGrid, s: np.ndarray, dt: float) -> np.ndarray:
    phi = newton_values(grid, s.real**2 + s.imag**2)
    return np.exp(1j * dt * phi) * s


class Stepper:
    """One Strang step; ``order`` is 'LNL' (default) or 'NLN'."""

    def __init__(self, grid: RadialGrid, order: str = "LNL", nonlinear: bool = True):
        self.grid = grid
        self.order = order
        self.nonlinear = nonlinear
        self.cn = CrankNicolson(grid)
        self._half = CrankNicolson(grid)

    def __call__(self, s: np.ndarray, dt: float) -> np.ndarray:
        g = self.grid
        if not self.nonlinear:
            return self.cn(s, dt)
        if self.order == "LNL":
            s = self._half(s, 0.5 * dt)
            s = _potential_flow(g, s, dt)
            return self._half(s, 0.5 * dt)
        s = _potential_flow(g, s, 0.5 * dt)
        s = self.cn(s, dt)
        return _potential_flow(g, s, 0.5 * dt)


def strang_step(u: RadialField, dt: float, *, order: str = "LNL", nonlinear: bool = True) -> RadialField:
    s = np.array(u.samples)
    s[-1] = 0.0
    return RadialField(u.grid, Stepper(u.grid, order, nonlinear)(s, dt))


# ---------------------------------------------------------------------------
# diagnostics


def bond_rate(grid: RadialGrid, s: np.ndarray, weight: np.ndarray) -> float:
    """Time derivative of ``int weight |u|^2`` under the discrete linear flow.

    ``2 sum_b (omega r_b^4 / h) (weight_{i+1} - weight_i) Im(conj(u_i) u_{i+1})``.
    """
    dw = np.diff(weight)
    return float(2.0 * np.dot(grid.flux_weights * dw, np.imag(np.conj(s[:-1]) * s[1:])))


@dataclass
class StepState:
    """What the detector sees after a step."""

    t: float
    eta: float
    mass: float
    tail_mass_outer: float
    dt_next: float
    max_phi: float
    prev_max_phi: float


def detect_blowup(state: StepState, cfg: EvolutionConfig) -> Optional[RunOutcome]:
    # a run with mass at the wall is untrustworthy whatever else it shows
    if state.mass > 0 and state.tail_mass_outer / state.mass > cfg.boundary_tol:
        return RunOutcome(Verdict.BOUNDARY_INVALID, state.t,
                          f"outer mass fraction {state.tail_mass_outer / state.mass:.3g} "
                          f"> {cfg.boundary_tol:g}")
    if math.isfinite(state.eta) and state.eta > cfg.eta_max:
        return RunOutcome(Verdict.BLOWUP, state.t,
                          f"eta={state.eta:.6g} exceeded eta_max={cfg.eta_max:g}")
    if state.dt_next < cfg.dt_min:
        if state.max_phi > state.prev_max_phi:
            return RunOutcome(Verdict.BLOWUP, state.t,
                              f"step floor reached with max|Phi|={state.max_phi:.6g} growing")
        return RunOutcome(Verdict.STEP_FLOOR, state.t, "adaptive step below dt_min")
    return None


class Diagnostics:
    def __init__(self, grid: RadialGrid, gs=None, z_radius: Optional[float] = None, cutoff=None):
        self.grid = grid
        r = np.asarray(grid.nodes)
        self.r2 = r * r
        self.gs_km = None if gs is None else gs.kinetic * gs.mass
        self.outer_R = 0.9 * grid.r_max
        self.z_weight = None
        if z_radius is not None and cutoff is not None:
            self.z_weight = z_radius**2 * cutoff(r / z_radius)

    def eta(self, s: np.ndarray) -> tuple[float, float, float]:
        rho = s.real**2 + s.imag**2
        mass = integrate(self.grid, rho)
        kin = dirichlet_form(self.grid, s)
        et = math.nan if self.gs_km is None else math.sqrt(kin * mass / self.gs_km)
        return et, mass, kin

    def sample(self, t: float, s: np.ndarray, dt: float) -> TrajectorySample:
        g = self.grid
        rho = s.real**2 + s.imag**2
        et, mass, kin = self.eta(s)
        lv4 = integrate(g, newton_values(g, rho) * rho)
        z = math.nan
        if self.z_weight is not None:
            z = integrate(g, self.z_weight * rho)
        return TrajectorySample(
            t=t,
            mass=mass,
            energy=0.5 * kin - 0.25 * lv4,
            grad_norm_sq=kin,
            eta=et,
            variance=integrate(g, self.r2 * rho),
            variance_rate=bond_rate(g, s, self.r2),
            z_R=z,
            tail_mass_outer=tail_integrate(g, rho, self.outer_R),
            dt_used=dt,
        )


def evolve(u0: RadialField, cfg: EvolutionConfig, gs=None, *, t0: float = 0.0,
           z_radius: Optional[float] = None, cutoff=None,
           on_sample: Optional[Callable[[TrajectorySample], None]] = None,
           on_step: Optional[Callable[[int, float, np.ndarray], None]] = None,
           ) -> tuple[list[TrajectorySample], RunOutcome]:
    """Integrate from ``t0`` to ``cfg.t_max`` or until a detector fires.

    Samples are recorded at the start, every ``record_stride`` steps and at the
    final state.  ``on_step(step, t, samples)`` is called after every step and
    may be used for checkpointing.  ``gs`` is needed for eta; without it the
    eta detector is inactive.
    """
    grid = u0.grid
    if gs is not None:
        grid.check_same(gs.grid)
    s = np.array(u0.samples, dtype=complex)
    s[-1] = 0.0
    stepper = Stepper(grid, cfg.splitting, cfg.nonlinear)
    diag = Diagnostics(grid, gs, z_radius, cutoff)
    samples: list[TrajectorySample] = []

    def record(t, dt):
        row = diag.sample(t, s, dt)
        samples.append(row)
        if on_sample is not None:
            on_sample(row)
        return row

    t = t0
    record(t, 0.0)
    if t >= cfg.t_max:
        return samples, RunOutcome(Verdict.COMPLETED, t)

    prev_max_phi = math.inf
    step = 0
    while True:
        if cfg.adaptive and cfg.nonlinear:
            max_phi = float(np.max(np.abs(newton_values(grid, s.real**2 + s.imag**2))))
            dt_prop = cfg.dt0 if max_phi == 0 else min(cfg.dt0, cfg.c_adapt / max_phi)
        else:
            max_phi, dt_prop = prev_max_phi, cfg.dt0
        if dt_prop < cfg.dt_min:
            et, mass, _ = diag.eta(s)
            verdict = detect_blowup(
                StepState(t, et, mass, 0.0, dt_prop, max_phi, prev_max_phi), cfg)
            record(t, 0.0)
            return samples, verdict
        remaining = cfg.t_max - t
        dt = remaining if remaining <= dt_prop * (1 + 1e-9) else dt_prop
        s = stepper(s, dt)
        step += 1
        t = cfg.t_max if dt == remaining else t + dt
        if on_step is not None:
            on_step(step, t, s)

        et, mass, _ = diag.eta(s)
        outer = tail_integrate(grid, s.real**2 + s.imag**2, diag.outer_R)
        verdict = detect_blowup(StepState(t, et, mass, outer, math.inf, max_phi, prev_max_phi), cfg)
        prev_max_phi = max_phi
        if verdict is not None:
            record(t, dt)
            return samples, verdict
        if t >= cfg.t_max:
            record(t, dt)
            return samples, RunOutcome(Verdict.COMPLETED, t)
        if step % cfg.record_stride == 0:
            record(t, dt)
