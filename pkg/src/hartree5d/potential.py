"""Newton-potential evaluation of ``|x|^-3 * rho`` for radial densities.

In R^5 the kernel ``|x|^-3`` is the fundamental solution of the Laplacian up
to a constant, so for radial ``rho`` Newton's shell theorem gives

    Phi(r) = r^-3 * omega int_0^r rho(s) s^4 ds + omega int_r^inf rho(s) s ds

Both integrals are cumulative trapezoid sums, so one evaluation is O(N).
The resulting discrete operator is ``Phi_i = sum_j w_j max(r_i, r_j)^-3 rho_j``
with ``w`` the grid quadrature weights, i.e. a symmetric quadratic form.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import OMEGA, RadialField, RadialGrid, integrate, tail_integrate


@dataclass(frozen=True)
class PotentialField:
    grid: RadialGrid
    values: np.ndarray = field(repr=False)


def _cumtrapz(f: np.ndarray, h: float) -> np.ndarray:
    out = np.zeros_like(f)
    np.cumsum(0.5 * h * (f[1:] + f[:-1]), out=out[1:])
    return out


def newton_values(grid: RadialGrid, rho) -> np.ndarray:
    """Raw array version of :func:`newton_potential`."""
    rho = np.asarray(rho, dtype=float)
    r, h = grid.nodes, grid.h
    inner = OMEGA * _cumtrapz(rho * r**4, h)
    outer_cum = OMEGA * _cumtrapz(rho * r, h)
    outer = outer_cum[-1] - outer_cum
    phi = outer.copy()
    phi[1:] += inner[1:] / r[1:] ** 3
    return phi


def newton_potential(grid: RadialGrid, rho) -> PotentialField:
    """Potential of a radial density; the tail beyond ``r_max`` is taken as zero."""
    return PotentialField(grid, newton_values(grid, rho))


def lv_quartic(u: RadialField) -> float:
    """``||u||_{L^V}^4 = int int |u(x)|^2 |x-y|^-3 |u(y)|^2 dx dy``."""
    rho = u.density
    return integrate(u.grid, newton_values(u.grid, rho) * rho)


def tail_lv_quartic(u: RadialField, R: float) -> float:
    """Interaction energy with the outer variable restricted to ``|x| > R``."""
    rho = u.density
    return tail_integrate(u.grid, newton_values(u.grid, rho) * rho, R)
