import io

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conorbit.errors import DomainError, UnsupportedOperation
from conorbit.models import build_model
from conorbit.pathspace import (DiscretePath, LoopPath, action_gradient, alpha_n_loop, check_boundary, circle,
                                classify_component, constant_path, discrete_action, hline, lattice_basis,
                                loop_from_polyline, loop_winding, lower_bound_estimate, path_from_csv,
                                path_to_csv, point, reduce_class, refine, straight_path, vline)

MAG = build_model("torus_magnetic")


def loop_a(N=16):
    return loop_from_polyline([(1.0, 0.5), (0.0, 0.5)], N, 1.0)


@pytest.mark.parametrize("N", [2, 7, 64])
def test_loop_a_action_exact(N):
    assert discrete_action(MAG, loop_a(N), 0.3).A == pytest.approx(-0.2, abs=1e-12)


def test_loop_a_at_045():
    assert discrete_action(MAG, loop_a(), 0.45).A == pytest.approx(-0.05, abs=1e-12)


def test_constant_path_action(mag):
    Q = point((0.3, 0.3))
    p = constant_path(Q, 0.0, Q, 0.0, 10, 2.0)
    assert discrete_action(mag, p, 0.7).A == pytest.approx(1.4, abs=1e-14)


def test_alpha_1_value():
    assert discrete_action(MAG, alpha_n_loop(1, 0.045), 0.045).A == pytest.approx(-0.1, abs=1e-12)


@pytest.mark.parametrize("k", [0.045, 0.08, 0.125])
def test_alpha_n_formula(k):
    for n in range(1, 11):
        ref = n * (2 * np.sqrt(2 * k) - 1) + np.sqrt(2 * k)
        assert discrete_action(MAG, alpha_n_loop(n, k), k).A == pytest.approx(ref, abs=1e-10)


def test_alpha_n_loops_are_contractible():
    assert loop_winding(MAG, alpha_n_loop(3, 0.1)) == (0, 0)
    assert loop_winding(MAG, loop_a()) == (-1, 0)


def test_straight_geodesic_is_critical(flat):
    k = 0.5
    d = 0.5
    p = straight_path(point((0, 0)), 0.0, point((0.3, 0.4)), 0.0, 32, d / np.sqrt(2 * k))
    g = action_gradient(flat, p, k)
    assert g.norm <= 1e-8
    assert discrete_action(flat, p, k).A == pytest.approx(d * np.sqrt(2 * k), abs=1e-14)


def test_dA_dT_identity(mag, rng):
    for _ in range(10):
        p = random_path(mag, rng)
        v = discrete_action(mag, p, 0.4)
        assert v.dA_dT == pytest.approx(0.4 - v.energy_mean, abs=1e-10)
        g = action_gradient(mag, p, 0.4)
        assert g.dA_dT == pytest.approx(v.dA_dT, abs=1e-10)


def test_lower_bound_examples(mag):
    p = straight_path(point((0.0, 0.5)), 0.0, point((1.0, 0.5)), 0.0, 16, 1.0)
    v = discrete_action(mag, p, 1.0)
    assert v.length == pytest.approx(1.0)
    assert lower_bound_estimate(v, 0.5, 0.5, 1.0) == pytest.approx(1.0)
    assert v.A >= 1.0
    Q = point((0.2, 0.2))
    c = discrete_action(mag, constant_path(Q, 0, Q, 0, 8, 3.0), 1.0)
    assert lower_bound_estimate(c, 0.25, 0.5, 1.0) == pytest.approx(3.0 * 0.5)


def test_lower_bound_parabola_minimum(mag):
    a, b, k, ell = 0.25, 1.0, 1.5, 0.8
    p = straight_path(point((0.0, 0.3)), 0.0, point((0.8, 0.3)), 0.0, 16, 1.0)
    vals = [lower_bound_estimate(discrete_action(mag, DiscretePath(p.Q0, p.Q1, 0, p.nodes, 0, T), k), a, b, k)
            for T in np.linspace(0.05, 5, 41)]
    assert min(vals) >= 2 * ell * np.sqrt(a * (k - b)) - 1e-12
    Topt = ell * np.sqrt(a / (k - b))
    v = discrete_action(mag, DiscretePath(p.Q0, p.Q1, 0, p.nodes, 0, Topt), k)
    assert lower_bound_estimate(v, a, b, k) == pytest.approx(2 * ell * np.sqrt(a * (k - b)))


def random_path(model, rng, N=64, Q0=None, Q1=None):
    Q0 = Q0 or circle((0.3, 0.4), 0.2)
    Q1 = Q1 or hline(0.8)
    s0, s1 = rng.uniform(0, 1, 2)
    a, b = Q0.at(s0), Q1.at(s1)
    t = np.linspace(0, 1, N + 1)[1:-1, None]
    nodes = a + t * (b - a) + 0.05 * np.sin(np.pi * t * rng.integers(1, 4)) * rng.normal(size=2)
    return DiscretePath(Q0, Q1, s0, nodes, s1, rng.uniform(0.3, 2.0))


def _fd_gradient(model, p, k, h=1e-6):
    def A(s0, nodes, s1, T):
        return discrete_action(model, DiscretePath(p.Q0, p.Q1, s0, nodes, s1, T), k).A
    out = [(A(p.s0 + h, p.nodes, p.s1, p.T) - A(p.s0 - h, p.nodes, p.s1, p.T)) / (2 * h)]
    for i in range(p.nodes.size):
        e = np.zeros(p.nodes.size)
        e[i] = h
        e = e.reshape(p.nodes.shape)
        out.append((A(p.s0, p.nodes + e, p.s1, p.T) - A(p.s0, p.nodes - e, p.s1, p.T)) / (2 * h))
    out.append((A(p.s0, p.nodes, p.s1 + h, p.T) - A(p.s0, p.nodes, p.s1 - h, p.T)) / (2 * h))
    out.append((A(p.s0, p.nodes, p.s1, p.T + h) - A(p.s0, p.nodes, p.s1, p.T - h)) / (2 * h))
    return np.array(out)


@settings(max_examples=100)
@given(st.integers(0, 2 ** 31 - 1), st.sampled_from(["torus_magnetic", "torus_mechanical"]),
       st.floats(0.05, 1.5))
def test_gradient_matches_finite_differences(seed, name, k):
    """Exact discrete gradient vs central differences at step 1e-6 (relative 1e-5), 100 random paths."""
    model = MAG if name == "torus_magnetic" else build_model(name)
    rng = np.random.default_rng(seed)
    p = random_path(model, rng, N=int(rng.integers(8, 24)))
    g = action_gradient(model, p, k).vector
    fd = _fd_gradient(model, p, k)
    assert np.max(np.abs(g - fd)) <= 1e-5 * max(1.0, np.max(np.abs(g)))


def test_gradient_fd_n64(mag, rng):
    p = random_path(mag, rng, N=64)
    g = action_gradient(mag, p, 0.6).vector
    fd = _fd_gradient(mag, p, 0.6)
    assert np.max(np.abs(g - fd)) <= 1e-5 * max(1.0, np.max(np.abs(g)))


def smooth_path(N, T=1.3):
    Q0, Q1 = circle((0.3, 0.4), 0.2), hline(0.8)
    t = np.linspace(0, 1, N + 1)
    a, b = Q0.at(0.1), Q1.at(0.7)
    X = a + t[:, None] * (b - a) + 0.08 * np.sin(np.pi * t)[:, None] * np.array([1.0, -0.5])
    return DiscretePath(Q0, Q1, 0.1, X[1:-1], 0.7, T)


def quadrature_order(model, k=0.5):
    Ns = [16, 32, 64, 128, 256]
    A = np.array([discrete_action(model, smooth_path(N), k).A for N in Ns])
    d = np.abs(np.diff(A))
    return np.log2(d[:-1] / d[1:])


def test_quadrature_order(mag, mech):
    for m in (mag, mech):
        rates = quadrature_order(m)
        assert rates[-1] >= 1.8


def test_midpoint_subdivision_consistency(mag):
    for N in (64, 128):
        p = smooth_path(N)
        A = discrete_action(mag, p, 0.5).A
        assert abs(discrete_action(mag, refine(mag, p), 0.5).A - A) <= 1e-3 * abs(A) + 1e-6


def test_small_T_blows_up(mag):
    p = smooth_path(64)
    A = [discrete_action(mag, DiscretePath(p.Q0, p.Q1, p.s0, p.nodes, p.s1, T), 0.5).A for T in (1e-2, 1e-3, 1e-4)]
    assert A[0] < A[1] < A[2]


def test_domain_error_reports_node(hyp):
    nodes = np.array([[0.0, 1.0], [0.1, 0.5], [0.2, -0.1], [0.3, 1.0]])
    p = DiscretePath(point((0, 1.2)), point((0.4, 1.0)), 0, nodes, 0, 1.0)
    with pytest.raises(DomainError) as exc:
        discrete_action(hyp, p, 0.5)
    assert exc.value.index is not None


def test_csv_round_trip_bit_exact(mag, rng):
    p = random_path(mag, rng)
    text = path_to_csv(p)
    q = path_from_csv(io.StringIO(text), p.Q0, p.Q1)
    assert q.s0 == p.s0 and q.s1 == p.s1 and q.T == p.T
    assert np.array_equal(q.nodes, p.nodes)
    lp = LoopPath(rng.uniform(0, 1, (10, 2)), 0.7)
    lq = path_from_csv(path_to_csv(lp))
    assert isinstance(lq, LoopPath) and np.array_equal(lq.nodes, lp.nodes)


def test_boundaries_close_and_are_immersed():
    for Q in (circle((0.5, 0.5), 0.3), hline(0.2), vline(0.7)):
        check_boundary(Q)
    assert hline(0.5).generators == ((1, 0),)
    assert circle((0.5, 0.5), 0.3).generators == ()


def test_lattice_reduction():
    assert lattice_basis([]) == []
    assert lattice_basis([(2, 0), (3, 0)]) == [(1, 0)]
    assert lattice_basis([(1, 0), (0, 1)]) == [(1, 0), (0, 1)]
    assert reduce_class((5, -3), [(1, 0)]) == (0, -3)
    assert reduce_class((5, -3), [(1, 0), (0, 1)]) == (0, 0)


def test_components_point_line(mag):
    Q0, Q1 = point((0.5, 0.0)), hline(0.5)
    a = straight_path(Q0, 0, Q1, 0.5, 16, 1.0, end_shift=(-1, 0))
    up = straight_path(Q0, 0, Q1, 0.5, 16, 1.0)
    up2 = straight_path(Q0, 0, Q1, 0.5, 16, 1.0, end_shift=(0, 1))
    assert classify_component(mag, a) == classify_component(mag, up)
    assert classify_component(mag, up) != classify_component(mag, up2)


def test_components_lens_and_four_points(mag):
    from conorbit.critical import intersections
    Q0, Q1 = circle((0.35, 0.5), 0.3), circle((0.65, 0.5), 0.3)
    q = intersections(mag, Q0, Q1)[0]
    from conorbit.solvers import _nearest_param
    c = constant_path(Q0, _nearest_param(Q0, q), Q1, _nearest_param(Q1, q), 8, 1.0)
    assert classify_component(mag, c) == (0, 0)

    Q0, Q1 = circle((0.5, 0.5), 0.3), circle((0.0, 0.5), 0.32)
    pts = intersections(mag, Q0, Q1)
    assert len(pts) == 4
    labels = set()
    for q in pts:
        c = constant_path(Q0, _nearest_param(Q0, q), Q1, _nearest_param(Q1, q), 8, 1.0)
        labels.add(classify_component(mag, c))
    # the two sides of the cell differ by one horizontal turn
    assert len(labels) == 2
    a, b = sorted(labels)
    assert abs(a[0] - b[0]) == 1 and a[1] == b[1]


def test_classify_needs_torus(hyp):
    p = straight_path(point((0, 1)), 0, point((0, 2)), 0, 8, 1.0)
    with pytest.raises(UnsupportedOperation):
        classify_component(hyp, p)
