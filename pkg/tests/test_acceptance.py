"""Acceptance criteria 1-11, one PASS/FAIL line each (see the terminal summary)."""

import time

import numpy as np
import pytest

from conftest import ACCEPTANCE
from conorbit.critical import (bracket_critical, chain_audit, clear_cache, k_N_estimate, k_obstruction)
from conorbit.flow import FlowState, conserved_I, integrate_el, nearest_return, no_connection_certificate
from conorbit.models import build_model, list_models
from conorbit.pathspace import (DiscretePath, action_gradient, alpha_n_loop, circle, classify_component,
                                constant_path, discrete_action, hline, loop_from_polyline, point, straight_path)
from conorbit.reproduce import circle_action, circle_area, circle_length, hyperbolic_action_closed
from conorbit.scenarios import get_scenario, list_scenarios
from conorbit.solvers import MinimizeConfig, StringConfig, _nearest_param, minimize_action, mountain_pass, struwe_scan

SOLVER_REPORTS = []


def record(num, title, ok, detail):
    ACCEPTANCE[num] = f"[{'PASS' if ok else 'FAIL'}] {num:2d}. {title}: {detail}"
    print(ACCEPTANCE[num])
    assert ok, ACCEPTANCE[num]


def test_01_torus_fixtures():
    t0 = time.perf_counter()
    mag = build_model("torus_magnetic")
    err_a = max(abs(discrete_action(mag, loop_from_polyline([(1.0, 0.5), (0.0, 0.5)], 16, 1.0), k).A - (k - 0.5))
                for k in (0.05, 0.3, 0.45, 0.7))
    err_n = 0.0
    for k in (0.045, 0.08, 0.125):
        for n in range(1, 11):
            ref = n * (2 * np.sqrt(2 * k) - 1) + np.sqrt(2 * k)
            err_n = max(err_n, abs(discrete_action(mag, alpha_n_loop(n, k), k).A - ref))
    dt = time.perf_counter() - t0
    record(1, "torus fixtures", err_a <= 1e-12 and err_n <= 1e-10 and dt < 1.0,
           f"S_k(a) err {err_a:.1e}, alpha_n err {err_n:.1e}, {dt:.2f} s")


def test_02_critical_brackets():
    clear_cache()
    t0 = time.perf_counter()
    mag = build_model("torus_magnetic")
    c = bracket_critical(mag, "c")
    cu = bracket_critical(mag, "cu_c0")
    dt = time.perf_counter() - t0
    ok = c.contains(0.5) and cu.contains(0.125) and c.width <= 0.05 and cu.width <= 0.05 and dt < 120
    record(2, "critical brackets", ok,
           f"c in [{c.lower:.5f}, {c.upper:.5f}], c_u in [{cu.lower:.5f}, {cu.upper:.5f}], {dt:.1f} s")


def test_03_obstruction_and_chain():
    clear_cache()
    t0 = time.perf_counter()
    sc = get_scenario("torus_point_line")
    k = k_obstruction(sc.model, sc.Q0, sc.Q1)
    bad = []
    for name, _ in list_scenarios():
        s = get_scenario(name)
        if not chain_audit(s.model, s.Q0, s.Q1, brackets=s.analytic_chain, strict=False).ok:
            bad.append(name)
    dt = time.perf_counter() - t0
    record(3, "obstruction and chain", abs(k - 0.5) <= 1e-4 and not bad and dt < 30,
           f"k_obstruction {k:.8f}, chain failures {bad or 'none'}, {dt:.1f} s")


def test_04_conservation():
    mag = build_model("torus_magnetic")
    tr = integrate_el(mag, FlowState(np.array([0.1, 0.3]), np.array([0.4, 0.7])), 10.0, 1e-3)
    I = conserved_I(mag, tr.q, tr.v)
    dI = float(np.max(np.abs(I - I[0])))
    drifts = {}
    for name, _ in list_models():
        m = build_model(name)
        q0 = np.array([0.0, 1.0]) if m.chart_kind == "half_plane" else np.array([0.3, 0.6])
        v0 = np.array([0.6, 0.3])
        t = integrate_el(m, FlowState(q0, v0), 5.0, 1e-3)
        drifts[name] = t.energy_drift / 5.0 if not t.exited else np.inf
    worst = max(drifts.values())
    record(4, "conservation oracle", dI <= 1e-8 and worst <= 1e-7,
           f"max |I - I0| {dI:.1e}, worst energy drift {worst:.1e} per unit time")


def test_05_no_connection():
    mag = build_model("torus_magnetic")
    a = no_connection_certificate(mag, (0.5, 0.0), (0.5, 0.5), 0.08)
    b = no_connection_certificate(mag, (0.5, 0.0), (0.5, 0.5), 0.125)
    record(5, "no-connection certificate", a.verdict == "DISJOINT" and b.verdict == "OVERLAP" and b.contact,
           f"k=0.08 {a.verdict}, k=0.125 {b.verdict} (contact={b.contact})")


def test_06_supercritical_minimizers():
    t0 = time.perf_counter()
    mag = build_model("torus_magnetic")
    Q0, Q1 = point((0.5, 0.0)), hline(0.5)
    cfg = MinimizeConfig(N=256)
    comps = {}
    worst = [0.0, 0.0, 0.0]
    for j in (0, 1, -1):
        init = straight_path(Q0, 0.0, Q1, 0.3, 256, 1.0, end_shift=(0, j))
        rep = minimize_action(mag, Q0, Q1, 0.75, init, cfg)
        SOLVER_REPORTS.append(rep)
        r = rep.residuals
        if not rep.converged or r is None:
            continue
        good = r.conormal_1 <= 1e-5 and r.energy_mismatch <= 1e-5 and r.shooting_gap <= 1e-3
        worst = [max(worst[0], r.conormal_1), max(worst[1], r.energy_mismatch), max(worst[2], r.shooting_gap)]
        if good:
            comps[classify_component(mag, rep.path)] = rep.action
    dt = time.perf_counter() - t0
    record(6, "supercritical minimizers", len(comps) >= 3 and dt < 60,
           f"{len(comps)} components {sorted(comps)}, conormal {worst[0]:.1e}, energy {worst[1]:.1e}, "
           f"shooting {worst[2]:.1e}, {dt:.1f} s")


def test_07_flat_geodesics():
    flat = build_model("torus_mechanical", amplitude=0.0)
    rng = np.random.default_rng(7)
    errs = []
    for _ in range(20):
        a = rng.uniform(0.05, 0.45, 2)
        b = a + rng.uniform(0.0, 0.5, 2)
        Q0, Q1 = point(a), point(b)
        init = straight_path(Q0, 0, Q1, 0, 64, rng.uniform(0.3, 2.0))
        init.nodes[:] += 0.02 * rng.normal(size=init.nodes.shape)
        rep = minimize_action(flat, Q0, Q1, 0.5, init, MinimizeConfig(N=64))
        SOLVER_REPORTS.append(rep)
        d = float(np.linalg.norm(b - a))
        errs.append(abs(rep.action - d * np.sqrt(2 * 0.5)) if rep.converged else np.inf)
    record(7, "flat geodesics", max(errs) <= 1e-4, f"max |A - d sqrt(2k)| {max(errs):.1e} over 20 pairs")


def test_08_mountain_pass():
    t0 = time.perf_counter()
    sc = get_scenario("torus_lens")
    m = sc.model
    a = m.convexity
    alpha = 2 * sc.epsilon * np.sqrt(a * 0.25)
    rep = mountain_pass(m, sc.Q0, sc.Q1, sc.omega, 0.25, StringConfig(), sc.epsilon)
    grid = np.round(np.arange(0.15, 0.45 + 1e-9, 0.05), 10)
    curve = struwe_scan(m, sc.Q0, sc.Q1, sc.omega, grid, StringConfig(), sc.epsilon)
    dt = time.perf_counter() - t0
    ok_c = curve.c_omega[curve.converged]
    mono = bool(np.all(np.diff(ok_c) >= -1e-6))
    flagged = [float(k) for k, c in zip(curve.k, curve.converged) if not c]
    ok = rep.converged and rep.residual <= 1e-4 and rep.minimax >= alpha and mono and curve.monotone and dt < 300
    record(8, "mountain pass", ok,
           f"minimax {rep.minimax:.6f} >= alpha {alpha:.6f}, residual {rep.residual:.1e}, "
           f"Struwe monotone={mono}, flagged k {flagged or 'none'}, {dt:.1f} s")


def test_09_k_N():
    sc = get_scenario("torus_lens")
    m = sc.model
    b = k_N_estimate(m, sc.Q0, sc.Q1)
    # explicit witness: leftward unit-speed segment along y = 1/2 inside the lens
    s0 = _nearest_param(sc.Q0, (0.65, 0.5))
    s1 = _nearest_param(sc.Q1, (0.35, 0.5))
    J = 0.3
    w = straight_path(sc.Q0, s0, sc.Q1, s1, 64, J)
    const = constant_path(sc.Q0, _nearest_param(sc.Q0, (0.5, 0.5 + np.sqrt(0.0675))), sc.Q1,
                          _nearest_param(sc.Q1, (0.5, 0.5 + np.sqrt(0.0675))), 8, 1.0)
    err = max(abs(discrete_action(m, w, k).A - J * (k - 0.5)) for k in (0.2, 0.4, 0.49))
    same = classify_component(m, w) == classify_component(m, const)
    ok = b.contains(0.5) and b.width <= 0.05 and err <= 1e-10 and same
    record(9, "k_N bracket", ok,
           f"[{b.lower:.5f}, {b.upper:.5f}], witness |A - |J|(k - 1/2)| {err:.1e}, same component={same}")


def test_10_hyperbolic():
    hyp = build_model("half_plane_horocycle")
    err_l = max(abs(circle_length(hyp, r) - 2 * np.pi * np.sinh(r)) for r in (0.5, 1.0, 2.0))
    err_a = max(abs(circle_area(hyp, r) - 2 * np.pi * (np.cosh(r) - 1)) for r in (0.5, 1.0, 2.0))
    pos = all(circle_action(hyp, r, 0.6) > 0 for r in (0.5, 1.0, 2.0, 4.0))
    neg = circle_action(hyp, 4.0, 0.45) < 0
    err_s = max(abs(circle_action(hyp, r, k) - hyperbolic_action_closed(r, k))
                for r in (0.5, 1.0, 2.0, 4.0) for k in (0.45, 0.5, 0.6))
    _, gap = nearest_return(hyp, FlowState(np.array([0.0, 1.0]), np.array([0.5, 0.0])), 12.0, 1e-3)
    ok = err_l <= 1e-6 and err_a <= 1e-6 and pos and neg and gap <= 1e-4 and err_s <= 1e-6
    record(10, "hyperbolic fixtures", ok,
           f"length err {err_l:.1e}, area err {err_a:.1e}, action err {err_s:.1e}, signs ok={pos and neg}, "
           f"closure gap {gap:.1e}")


def _fd_worst(models, rng, count):
    worst = 0.0
    for i in range(count):
        m = models[i % len(models)]
        Q0, Q1 = circle((0.3, 0.4), 0.2), hline(0.8)
        s0, s1 = rng.uniform(0, 1, 2)
        a, b = Q0.at(s0), Q1.at(s1)
        N = int(rng.integers(8, 20))
        t = np.linspace(0, 1, N + 1)[1:-1, None]
        nodes = a + t * (b - a) + 0.05 * np.sin(np.pi * t) * rng.normal(size=2)
        p = DiscretePath(Q0, Q1, s0, nodes, s1, rng.uniform(0.3, 2.0))
        k = rng.uniform(0.05, 1.5)
        g = action_gradient(m, p, k).vector

        def A(z):
            n = p.nodes.size
            return discrete_action(m, DiscretePath(Q0, Q1, z[0], z[1:n + 1].reshape(-1, 2), z[n + 1], z[n + 2]),
                                   k).A
        z = np.concatenate([[p.s0], p.nodes.ravel(), [p.s1, p.T]])
        fd = np.empty_like(z)
        for j in range(z.size):
            e = np.zeros_like(z)
            e[j] = 1e-6
            fd[j] = (A(z + e) - A(z - e)) / 2e-6
        worst = max(worst, float(np.max(np.abs(g - fd)) / max(1.0, np.max(np.abs(g)))))
    return worst


def test_11_property_suites():
    rng = np.random.default_rng(11)
    mag, mech = build_model("torus_magnetic"), build_model("torus_mechanical")
    fd = _fd_worst([mag, mech], rng, 100)

    fen = 0.0
    for name, _ in list_models():
        m = build_model(name)
        q = m.sample_points(10_000, rng)
        v = rng.normal(size=(10_000, 2))
        pv = m.dL_dv(q, v)
        fen = max(fen, float(np.max(np.abs(np.sum(pv * v, -1) - m.lagrangian(q, v) - m.hamiltonian(q, pv)))))
        p = rng.normal(size=(10_000, 2))
        fen = max(fen, float(np.max(np.sum(p * v, -1) - m.lagrangian(q, v) - m.hamiltonian(q, p))))

    if not SOLVER_REPORTS:
        Q0, Q1 = point((0.5, 0.0)), hline(0.5)
        SOLVER_REPORTS.append(minimize_action(mag, Q0, Q1, 0.75, straight_path(Q0, 0, Q1, 0.3, 64, 1.0),
                                              MinimizeConfig(N=64)))
    lb = sum(r.lower_bound_violations for r in SOLVER_REPORTS)

    def smooth(N):
        Q0, Q1 = circle((0.3, 0.4), 0.2), hline(0.8)
        t = np.linspace(0, 1, N + 1)
        a, b = Q0.at(0.1), Q1.at(0.7)
        X = a + t[:, None] * (b - a) + 0.08 * np.sin(np.pi * t)[:, None] * np.array([1.0, -0.5])
        return DiscretePath(Q0, Q1, 0.1, X[1:-1], 0.7, 1.3)
    A = np.array([discrete_action(mag, smooth(N), 0.5).A for N in (32, 64, 128, 256)])
    d = np.abs(np.diff(A))
    q_order = float(np.log2(d[-2] / d[-1]))

    def end(h):
        return integrate_el(mag, FlowState(np.array([0.2, 0.3]), np.array([0.5, 0.9])), 1.0, h).q[-1]
    e1, e2, e3 = end(0.02), end(0.01), end(0.005)
    rk_order = float(np.log2(np.linalg.norm(e1 - e2) / np.linalg.norm(e2 - e3)))

    ok = fd <= 1e-5 and fen <= 1e-9 and lb == 0 and q_order >= 1.8 and rk_order >= 3.8
    record(11, "property suites", ok,
           f"FD rel err {fd:.1e}, Fenchel {fen:.1e}, lower-bound violations {lb} over {len(SOLVER_REPORTS)} runs, "
           f"quadrature order {q_order:.2f}, RK4 order {rk_order:.2f}")
