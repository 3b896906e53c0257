import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from hartree5d.grid import (
    OMEGA,
    GridMismatch,
    RadialField,
    apply_laplacian,
    build_grid,
    dirichlet_form,
    integrate,
    moment,
    radial_derivative,
    tail_integrate,
    tail_l2_sq,
)

from conftest import PI52, gaussian


def test_nodes_of_tiny_grid():
    g = build_grid(3, 2.0, min_points=2)
    assert np.array_equal(g.nodes, [0.0, 1.0, 2.0])
    assert g.h == 1.0


@pytest.mark.parametrize("n, r_max", [(7, 1.0), (8, 0.0), (8, -1.0), (8, math.inf), (8, math.nan), (9.5, 1.0)])
def test_build_grid_rejects(n, r_max):
    with pytest.raises(ValueError):
        build_grid(n, r_max)


def test_last_node_is_r_max_exactly():
    g = build_grid(4096, 30.0)
    assert g.nodes[0] == 0.0 and g.nodes[-1] == 30.0
    assert np.all(np.diff(g.nodes) > 0)


def test_omega_is_area_of_s4():
    # 2 pi^{5/2} / Gamma(5/2)
    assert OMEGA == pytest.approx(2 * math.pi**2.5 / math.gamma(2.5), rel=1e-15)


def test_volume_of_unit_ball():
    # r = 1 on a node, with the jump sampled at its midpoint value
    g = build_grid(4097, 4.0)
    r = np.asarray(g.nodes)
    ind = (r < 1).astype(float)
    ind[np.isclose(r, 1.0)] = 0.5
    assert integrate(g, ind) == pytest.approx(8 * math.pi**2 / 15, rel=1e-5)


def test_volume_of_unit_ball_jump_between_nodes():
    # a jump between nodes costs O(h): at most half a cell of r^4 weight
    g = build_grid(4096, 4.0)
    r = np.asarray(g.nodes)
    vol = integrate(g, (r <= 1).astype(float))
    assert abs(vol / (8 * math.pi**2 / 15) - 1) < 2.5 * g.h


def test_gaussian_integral():
    g = build_grid(4096, 12.0)
    assert integrate(g, np.exp(-g.nodes**2)) == pytest.approx(PI52, rel=1e-6)


def test_gaussian_moments_and_gradient():
    g = build_grid(4096, 12.0)
    u = gaussian(g)
    assert moment(u, 0) == pytest.approx(PI52, rel=1e-6)
    assert moment(u, 2) == pytest.approx(2.5 * PI52, rel=1e-6)
    assert dirichlet_form(g, u.samples) == pytest.approx(2.5 * PI52, rel=1e-5)


def test_radial_derivative_second_order():
    errs = []
    for n in (1025, 2049):
        g = build_grid(n, 8.0)
        r = np.asarray(g.nodes)
        d = radial_derivative(RadialField(g, np.exp(-r * r / 2))).samples
        errs.append(np.max(np.abs(d - (-r * np.exp(-r * r / 2)))))
    assert d[0] == 0
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.05)


def _lap_error(n, f, lap_f, lo=0.5, hi=8.0):
    g = build_grid(n, 10.0)
    r = np.asarray(g.nodes)
    lap = apply_laplacian(RadialField(g, f(r))).samples.real
    sel = (r >= lo) & (r <= hi)
    return np.max(np.abs(lap[sel] - lap_f(r[sel])))


def test_laplacian_of_r_squared_is_ten():
    errs = [_lap_error(n, lambda r: r * r, lambda r: np.full_like(r, 10.0)) for n in (1025, 2049)]
    assert errs[1] < 1e-3
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.05)


def test_laplacian_of_gaussian_matches_closed_form():
    f = lambda r: np.exp(-r * r / 2)
    lf = lambda r: (r * r - 5) * np.exp(-r * r / 2)
    errs = [_lap_error(n, f, lf) for n in (1025, 2049)]
    assert errs[1] < 1e-3
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.1)


def test_laplacian_near_origin():
    # row 0 is 5 u''(0); rows i >= 1 carry an O(1/i^2) consistency error
    g = build_grid(1025, 10.0)
    r = np.asarray(g.nodes)
    lap = apply_laplacian(RadialField(g, r * r)).samples.real
    assert lap[0] == pytest.approx(10.0, rel=1e-12)
    i = np.arange(1, 40)
    assert np.all(np.abs(lap[i] - 10) <= 6.0 / i**2)


def test_laplacian_of_constant_vanishes_inside():
    g = build_grid(64, 3.0)
    lap = apply_laplacian(RadialField(g, np.full(64, 2.5))).samples
    assert np.max(np.abs(lap[:-1])) < 1e-9


@settings(max_examples=25, deadline=None)
@given(arrays(float, 40, elements=st.floats(-1, 1)), arrays(float, 40, elements=st.floats(-1, 1)))
def test_laplacian_symmetric_in_cell_volumes(a, b):
    g = build_grid(40, 3.0)
    a[-1] = b[-1] = 0.0
    w = g.cell_volumes
    la = apply_laplacian(RadialField(g, a)).samples.real
    lb = apply_laplacian(RadialField(g, b)).samples.real
    scale = 1 + np.sqrt(np.dot(w, a * a) * np.dot(w, b * b)) / g.h**2
    assert abs(np.dot(w, la * b) - np.dot(w, a * lb)) <= 1e-10 * scale


@settings(max_examples=25, deadline=None)
@given(arrays(float, 40, elements=st.floats(-1, 1)))
def test_dirichlet_form_is_minus_laplacian_pairing(a):
    g = build_grid(40, 3.0)
    a[-1] = 0.0
    la = apply_laplacian(RadialField(g, a)).samples.real
    k = dirichlet_form(g, a)
    assert -np.dot(g.cell_volumes, la * a) == pytest.approx(k, rel=1e-10, abs=1e-10)


def test_tail_integrals():
    g = build_grid(4096, 12.0)
    u = gaussian(g)
    assert tail_l2_sq(u, g.r_max) == 0.0
    assert tail_l2_sq(u, 0.0) == pytest.approx(moment(u, 0), rel=1e-14)
    # int_{|x|>1} e^{-r^2} = omega * Gamma(5/2, 1)/2
    from scipy.special import gammaincc
    exact = OMEGA * 0.5 * math.gamma(2.5) * gammaincc(2.5, 1.0)
    assert tail_integrate(g, np.exp(-g.nodes**2), 1.0) == pytest.approx(exact, rel=1e-6)
    with pytest.raises(ValueError):
        tail_l2_sq(u, 12.5)


def test_tail_is_continuous_across_nodes():
    g = build_grid(100, 5.0)
    rho = np.exp(-g.nodes**2)
    node = g.nodes[40]
    left = tail_integrate(g, rho, node - 1e-12)
    right = tail_integrate(g, rho, node + 1e-12)
    assert left == pytest.approx(right, abs=1e-9)


def test_field_validation_and_arithmetic():
    g = build_grid(8, 1.0)
    with pytest.raises(ValueError):
        RadialField(g, np.zeros(7))
    with pytest.raises(ValueError):
        RadialField(g, np.full(8, np.nan))
    u = RadialField(g, np.ones(8))
    assert not u.samples.flags.writeable
    assert np.allclose((2 * u + u - u).samples, 2)
    with pytest.raises(GridMismatch):
        u + RadialField(build_grid(9, 1.0), np.ones(9))
