"""Uniform radial mesh for radial functions on R^5.

Every integral over R^5 of a radial density is reduced to
``omega * int_0^rmax f(r) r^4 dr`` with ``omega = 8 pi^2 / 3`` the area of the
unit sphere S^4, and evaluated with the trapezoid rule on a node-centred grid
that includes the origin.

The radial Laplacian is the conservative finite-volume operator
``r^-4 d/dr (r^4 du/dr)`` with fluxes at half nodes.  It is symmetric with
respect to the *cell volumes* returned by :attr:`RadialGrid.cell_volumes`,
which coincide with the trapezoid weights everywhere except at the origin,
where the cell ``[0, h/2]`` carries volume ``omega (h/2)^5 / 5``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

OMEGA = 8.0 * math.pi**2 / 3.0
"""Surface area of the unit sphere S^4."""

MIN_POINTS = 8


class GridMismatch(ValueError):
    """Two objects refer to incompatible radial grids."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class RadialGrid:
    """Nodes ``r_i = i h`` on ``[0, r_max]``; ``h = r_max / (n_points - 1)``."""

    n_points: int
    r_max: float

    @property
    def h(self) -> float:
        return self.r_max / (self.n_points - 1)

    @property
    def omega(self) -> float:
        return OMEGA

    @cached_property
    def nodes(self) -> np.ndarray:
        r = self.h * np.arange(self.n_points, dtype=float)
        r[-1] = self.r_max
        return _frozen(r)

    @cached_property
    def quad_weights(self) -> np.ndarray:
        c = np.ones(self.n_points)
        c[0] = c[-1] = 0.5
        return _frozen(OMEGA * self.h * c * self.nodes**4)

    @cached_property
    def cell_volumes(self) -> np.ndarray:
        """Weights under which :func:`apply_laplacian` is symmetric.

        Equal to :attr:`quad_weights` except at the origin (half-cell ball
        volume) and at ``r_max`` (full interior weight, the Dirichlet node).
        """
        v = OMEGA * self.h * self.nodes**4
        v[0] = OMEGA * (0.5 * self.h) ** 5 / 5.0
        return _frozen(v)

    @cached_property
    def flux_weights(self) -> np.ndarray:
        """``omega * r_{i+1/2}^4 / h`` for the bond between nodes i and i+1."""
        mid = (np.arange(self.n_points - 1) + 0.5) * self.h
        return _frozen(OMEGA * mid**4 / self.h)

    def same_as(self, other: "RadialGrid") -> bool:
        return self.n_points == other.n_points and self.r_max == other.r_max

    def check_same(self, other: "RadialGrid") -> None:
        if not self.same_as(other):
            raise GridMismatch(
                f"grid (n={self.n_points}, r_max={self.r_max}) does not match "
                f"(n={other.n_points}, r_max={other.r_max})"
            )


def build_grid(n_points: int, r_max: float, *, min_points: int = MIN_POINTS) -> RadialGrid:
    """Validate and build a :class:`RadialGrid`.

    ``min_points`` exists so tiny grids can be built in unit tests.
    """
    if int(n_points) != n_points or n_points < min_points:
        raise ValueError(f"n_points must be an integer >= {min_points}, got {n_points!r}")
    r_max = float(r_max)
    if not math.isfinite(r_max) or r_max <= 0:
        raise ValueError(f"r_max must be finite and positive, got {r_max!r}")
    return RadialGrid(int(n_points), r_max)


@dataclass(frozen=True)
class RadialField:
    """Complex samples of a radial function, one per grid node."""

    grid: RadialGrid
    samples: np.ndarray = field(repr=False)

    def __post_init__(self):
        s = np.array(self.samples, dtype=complex)
        if s.shape != (self.grid.n_points,):
            raise ValueError(
                f"expected {self.grid.n_points} samples, got shape {s.shape}"
            )
        if not np.all(np.isfinite(s)):
            raise ValueError("field samples must be finite")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    def __eq__(self, other):
        if not isinstance(other, RadialField):
            return NotImplemented
        return self.grid == other.grid and np.array_equal(self.samples, other.samples)

    __hash__ = None

    @classmethod
    def from_function(cls, grid: RadialGrid, f) -> "RadialField":
        return cls(grid, f(np.asarray(grid.nodes)))

    @property
    def density(self) -> np.ndarray:
        return np.abs(self.samples) ** 2

    def __mul__(self, a) -> "RadialField":
        return RadialField(self.grid, a * self.samples)

    __rmul__ = __mul__

    def __add__(self, other: "RadialField") -> "RadialField":
        self.grid.check_same(other.grid)
        return RadialField(self.grid, self.samples + other.samples)

    def __sub__(self, other: "RadialField") -> "RadialField":
        self.grid.check_same(other.grid)
        return RadialField(self.grid, self.samples - other.samples)


def integrate(grid: RadialGrid, density) -> float:
    """Trapezoid approximation of ``int_{R^5} density dx``."""
    d = np.asarray(density)
    return float(np.real(np.dot(grid.quad_weights, d)))


def radial_derivative(u: RadialField) -> RadialField:
    """Second-order ``du/dr``: central inside, one-sided at ``r_max``, 0 at 0."""
    h = u.grid.h
    s = u.samples
    d = np.empty_like(s)
    d[0] = 0.0
    d[1:-1] = (s[2:] - s[:-2]) / (2 * h)
    d[-1] = (3 * s[-1] - 4 * s[-2] + s[-3]) / (2 * h)
    return RadialField(u.grid, d)


def laplacian_bands(grid: RadialGrid) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Sub-, main and super-diagonal of the discrete radial Laplacian.

    Row ``n-1`` couples to a zero ghost value beyond ``r_max``.  Row 0 is
    ``5 u''(0)`` from the even extension, ``10 (u_1 - u_0) / h^2``.
    """
    n, h = grid.n_points, grid.h
    i = np.arange(n, dtype=float)
    lower = np.zeros(n)
    upper = np.zeros(n)
    lower[1:] = ((i[1:] - 0.5) / i[1:]) ** 4 / h**2
    upper[1:] = ((i[1:] + 0.5) / i[1:]) ** 4 / h**2
    upper[0] = 10.0 / h**2
    diag = -(lower + upper)
    return lower, diag, upper


def _apply_bands(bands, s: np.ndarray) -> np.ndarray:
    lower, diag, upper = bands
    out = diag * s
    out[1:] += lower[1:] * s[:-1]
    out[:-1] += upper[:-1] * s[1:]
    return out


def apply_laplacian(u: RadialField) -> RadialField:
    return RadialField(u.grid, _apply_bands(laplacian_bands(u.grid), u.samples))


def dirichlet_form(grid: RadialGrid, samples) -> float:
    """``sum_bonds omega r_{i+1/2}^4 |u_{i+1} - u_i|^2 / h``.

    Equals ``-<Lap u, u>`` in the cell-volume inner product whenever the
    field vanishes at ``r_max``; used as the discrete ``||grad u||_2^2``.
    """
    s = np.asarray(samples)
    return float(np.dot(grid.flux_weights, np.abs(np.diff(s)) ** 2))


def moment(u: RadialField, p: int = 0) -> float:
    """``int r^p |u|^2 dx``."""
    r = u.grid.nodes
    return integrate(u.grid, r**p * u.density)


def _tail_fraction(grid: RadialGrid, R: float) -> np.ndarray:
    """Per-node multipliers turning trapezoid weights into ``int_{r>R}``."""
    if not 0 <= R <= grid.r_max:
        raise ValueError(f"R must lie in [0, r_max={grid.r_max}], got {R!r}")
    n, h = grid.n_points, grid.h
    if R == grid.r_max:
        return np.zeros(n)
    # per-cell split: cell k = [r_k, r_{k+1}] contributes h/2 to each end node
    left = np.zeros(n - 1)
    right = np.zeros(n - 1)
    k = min(int(R // h), n - 2)
    left[k + 1:] = right[k + 1:] = 0.5
    # straddling cell: linear interpolant of f on [r_k, r_{k+1}], integrate over [R, r_{k+1}]
    a = (R - grid.nodes[k]) / h
    a = min(max(a, 0.0), 1.0)
    # int_a^1 (1-s) ds and int_a^1 s ds
    left[k] = 0.5 * (1 - a) ** 2
    right[k] = 0.5 * (1 - a * a)
    c = np.zeros(n)
    c[:-1] += left
    c[1:] += right
    return c


def tail_integrate(grid: RadialGrid, density, R: float) -> float:
    """``int_{|x|>R} density dx`` with the straddling cell split linearly."""
    c = _tail_fraction(grid, R)
    w = OMEGA * grid.h * grid.nodes**4 * c
    return float(np.real(np.dot(w, np.asarray(density))))


def tail_l2_sq(u: RadialField, R: float) -> float:
    return tail_integrate(u.grid, u.density, R)


def dirichlet_bands(grid: RadialGrid) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Laplacian on the unknowns ``0 .. n-2`` with ``u_{n-1} = 0``.

    Returns ``(dl, d, du)`` in LAPACK ``gttrf`` layout (lengths n-2, n-1, n-2).
    """
    lower, diag, upper = laplacian_bands(grid)
    m = grid.n_points - 1
    return lower[1:m].copy(), diag[:m].copy(), upper[: m - 1].copy()
