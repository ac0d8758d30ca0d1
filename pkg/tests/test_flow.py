import numpy as np
import pytest

from conorbit.errors import UnsupportedOperation
from conorbit.flow import (FlowState, conserved_I, integrate_el, nearest_return, no_connection_certificate,
                           verify_solution)
from conorbit.models import build_model
from conorbit.pathspace import DiscretePath, hline, point, straight_path, vline
from conorbit.solvers import MinimizeConfig, minimize_action

ALL = ["torus_magnetic", "torus_mechanical", "half_plane_horocycle", "plane_patch_custom"]


def test_flat_geodesic(flat):
    tr = integrate_el(flat, FlowState(np.zeros(2), np.array([1.0, 0.0])), 0.25, 1e-3)
    assert np.allclose(tr.q[-1], [0.25, 0.0], atol=1e-14)
    assert np.allclose(tr.v[-1], [1.0, 0.0], atol=1e-14)


@pytest.mark.parametrize("start,vel", [((0.1, 0.3), (0.4, 0.7)), ((0.7, 0.5), (-1.0, 0.2)), ((0.0, 0.05), (0.3, -0.9))])
def test_I_conserved(mag, start, vel):
    tr = integrate_el(mag, FlowState(np.array(start), np.array(vel)), 10.0, 1e-3)
    I = conserved_I(mag, tr.q, tr.v)
    assert np.max(np.abs(I - I[0])) <= 1e-8


@pytest.mark.parametrize("name", ALL)
def test_energy_drift_per_unit_time(name):
    m = build_model(name)
    q0 = np.array([0.0, 1.0]) if m.chart_kind == "half_plane" else np.array([0.3, 0.6])
    v0 = np.array([0.6, 0.3]) * (q0[1] if m.chart_kind == "half_plane" else 1.0)
    dur = 5.0
    tr = integrate_el(m, FlowState(q0, v0), dur, 1e-3)
    assert not tr.exited
    assert tr.energy_drift / dur <= 1e-7


def test_horocycle_subcritical_orbit_closes(hyp):
    s0 = FlowState(np.array([0.0, 1.0]), np.array([0.5, 0.0]))
    assert hyp.energy(s0.q, s0.v) == pytest.approx(0.125)
    period, gap = nearest_return(hyp, s0, 12.0)
    assert gap <= 1e-4
    assert 0 < period < 12


def test_subcritical_radius_shrinks(hyp):
    """Smaller energy, smaller circle (euclidean diameter of the orbit)."""
    sizes = []
    for k in (0.3, 0.125, 0.02):
        s = np.sqrt(2 * k)
        tr = integrate_el(hyp, FlowState(np.array([0.0, 1.0]), np.array([s, 0.0])), 40.0, 1e-2)
        sizes.append(np.ptp(tr.q[:, 1]))
    assert sizes[0] > sizes[1] > sizes[2]


def test_half_plane_exit_is_flagged(hyp):
    tr = integrate_el(hyp, FlowState(np.array([0.0, 1.0]), np.array([0.0, -3.0])), 20.0, 1e-2)
    assert tr.exited or np.all(tr.q[:, 1] > 0)


def rk4_order(model, q0, v0, T=1.0, h=0.02):
    def end(step):
        return integrate_el(model, FlowState(q0, v0), T, step).q[-1]
    a, b, c = end(h), end(h / 2), end(h / 4)
    return np.log2(np.linalg.norm(a - b) / np.linalg.norm(b - c))


def test_rk4_order(mag):
    assert rk4_order(mag, np.array([0.2, 0.3]), np.array([0.5, 0.9])) >= 3.8


def test_trajectory_csv(mag):
    tr = integrate_el(mag, FlowState(np.array([0.2, 0.3]), np.array([0.5, 0.9])), 0.01, 1e-3)
    lines = tr.to_csv().splitlines()
    assert lines[0] == "t,x,y,vx,vy,E" and len(lines) == len(tr) + 1


def test_no_connection_examples(mag):
    v = no_connection_certificate(mag, (0.5, 0.0), (0.5, 0.5), 0.08)
    assert v.verdict == "DISJOINT"
    assert np.allclose(v.range0, (-0.4, 0.4)) and np.allclose(v.range1, (0.6, 1.4))
    v = no_connection_certificate(mag, (0.5, 0.0), (0.5, 0.5), 0.125)
    assert v.verdict == "OVERLAP" and v.contact
    for k in (1e-4, 0.3, 2.0):
        v = no_connection_certificate(mag, (0.2, 0.4), (0.2, 0.4), k)
        assert v.verdict == "OVERLAP" and not v.contact


def test_no_connection_unsupported(mech):
    with pytest.raises(UnsupportedOperation):
        no_connection_certificate(mech, (0, 0), (0.5, 0.5), 0.1)


def test_flat_orthogonal_hitting(flat):
    Q0, Q1 = vline(0.2), vline(0.6)
    init = straight_path(Q0, 0.3, Q1, 0.45, 256, 1.0)
    rep = minimize_action(flat, Q0, Q1, 0.5, init, MinimizeConfig(N=256))
    assert rep.converged
    r = verify_solution(flat, rep.path, 0.5)
    assert r.conormal_0 <= 1e-6 and r.conormal_1 <= 1e-6 and r.shooting_gap <= 1e-4


@pytest.mark.parametrize("k", [0.05, 0.2, 0.4])
def test_subcritical_candidates_fail_conormal(mag, k):
    Q0, Q1 = point((0.5, 0.0)), hline(0.5)
    speed = np.sqrt(2 * k)
    for dx in (-0.3, 0.0, 0.2):
        p = straight_path(Q0, 0.0, Q1, (0.5 + dx) % 1.0, 64, 1.0)
        length = np.hypot(dx, 0.5)
        p = DiscretePath(Q0, Q1, p.s0, p.nodes, p.s1, length / speed)
        r = verify_solution(mag, p, k)
        assert r.conormal_1 >= 1 - speed - 1e-9
        assert not r.passes()


def test_perturbed_minimizer_residual(mag):
    Q0, Q1 = point((0.5, 0.0)), hline(0.5)
    init = straight_path(Q0, 0.0, Q1, 0.5, 128, 1.0)
    rep = minimize_action(mag, Q0, Q1, 0.75, init, MinimizeConfig(N=128))
    assert rep.converged
    base = verify_solution(mag, rep.path, 0.75)
    rng = np.random.default_rng(0)
    jittered = DiscretePath(Q0, Q1, rep.path.s0, rep.path.nodes + 1e-2 * rng.normal(size=rep.path.nodes.shape),
                            rep.path.s1, rep.path.T)
    bad = verify_solution(mag, jittered, 0.75)
    assert bad.el_residual >= 10 * base.el_residual


def test_shooting_gap_refinement_order(mag):
    Q0, Q1 = point((0.5, 0.0)), hline(0.5)
    gaps = []
    for N in (32, 64, 128):
        init = straight_path(Q0, 0.0, Q1, 0.5, N, 1.0)
        rep = minimize_action(mag, Q0, Q1, 0.75, init, MinimizeConfig(N=N))
        assert rep.converged
        gaps.append(verify_solution(mag, rep.path, 0.75).shooting_gap)
    rates = np.log2(np.array(gaps[:-1]) / np.array(gaps[1:]))
    assert np.all(rates >= 1.5)
