"""Reproduction suite: closed-form values of the model systems checked end to end.

Each fixture carries a ``source`` (``closed_form`` for values stated for the
model systems, ``identity`` for algebraic facts, ``oracle`` for values
computed independently here) and an ``anchor`` naming the statement checked.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import critical
from .flow import FlowState, integrate_el, nearest_return, no_connection_certificate
from .models import build_model
from .pathspace import alpha_n_loop, discrete_action, loop_from_polyline
from .scenarios import get_scenario

SOURCES = ("closed_form", "identity", "oracle")


@dataclass
class ReproRow:
    name: str
    quantity: str
    expected: object
    computed: object
    tolerance: float
    source: str
    anchor: str
    passed: bool

    def as_list(self):
        fmt = lambda v: f"{v:.17g}" if isinstance(v, (float, np.floating)) else str(v)
        return [self.name, self.quantity, fmt(self.expected), fmt(self.computed), f"{self.tolerance:g}",
                self.source, self.anchor, "PASS" if self.passed else "FAIL"]


@dataclass
class ReproTarget:
    name: str
    source: str
    anchor: str
    run: Callable

    def __call__(self):
        return [ReproRow(self.name, q, e, c, tol, self.source, self.anchor, bool(ok))
                for q, e, c, tol, ok in self.run()]


# ---------------------------------------------------------------------------
# hyperbolic circles
# ---------------------------------------------------------------------------

def hyperbolic_circle(r: float, n: int = 4096, clockwise: bool = False):
    """Half-plane circle of hyperbolic radius ``r`` about ``(0, 1)``: center
    ``(0, cosh r)``, euclidean radius ``sinh r``.  Returns nodes, derivatives
    and the uniform parameter step."""
    t = 2 * np.pi * np.arange(n) / n
    sgn = -1.0 if clockwise else 1.0
    q = np.stack([np.sinh(r) * np.cos(sgn * t), np.cosh(r) + np.sinh(r) * np.sin(sgn * t)], axis=-1)
    dq = sgn * np.stack([-np.sinh(r) * np.sin(sgn * t), np.sinh(r) * np.cos(sgn * t)], axis=-1)
    return q, dq, 2 * np.pi / n


def circle_length(model, r, n=4096):
    q, dq, h = hyperbolic_circle(r, n)
    return float(np.sum(model.norm(q, dq)) * h)


def circle_area(model, r, n=4096):
    """Enclosed area as the flux of ``d(dx/y)``, i.e. the counterclockwise integral of ``dx/y``."""
    q, dq, h = hyperbolic_circle(r, n)
    return float(np.sum(dq[:, 0] / q[:, 1]) * h)


def circle_action(model, r, k, n=4096, clockwise=True):
    """Free-time action of the unit-speed circle: integral of ``L(q, u) + k`` in arclength."""
    q, dq, h = hyperbolic_circle(r, n, clockwise)
    sigma = model.norm(q, dq)
    u = dq / sigma[:, None]
    return float(np.sum((model.lagrangian(q, u) + k) * sigma) * h)


def hyperbolic_action_closed(r, k):
    return 2 * np.pi * (k + 0.5) * np.sinh(r) - 2 * np.pi * (np.cosh(r) - 1)


# ---------------------------------------------------------------------------
# fixture runs: each returns (quantity, expected, computed, tolerance, ok)
# ---------------------------------------------------------------------------

def _torus_c():
    m = build_model("torus_magnetic")
    b = critical.bracket_critical(m, "c")
    return [("c bracket [lower, upper]", 0.5, (b.lower, b.upper), 0.05, b.contains(0.5) and b.width <= 0.05)]


def _torus_cu():
    m = build_model("torus_magnetic")
    b = critical.bracket_critical(m, "cu_c0")
    return [("c_u bracket [lower, upper]", 0.125, (b.lower, b.upper), 0.05, b.contains(0.125) and b.width <= 0.05)]


def _S_a():
    m = build_model("torus_magnetic")
    loop = loop_from_polyline([(1.0, 0.5), (0.0, 0.5)], 16, 1.0)
    out = []
    for k in (0.3, 0.45, 0.6):
        A = discrete_action(m, loop, k).A
        out.append((f"S_k(a) at k={k}", k - 0.5, A, 1e-12, abs(A - (k - 0.5)) <= 1e-12))
    return out


def _alpha_n():
    m = build_model("torus_magnetic")
    err = 0.0
    for k in (0.045, 0.08, 0.125):
        for n in range(1, 11):
            ref = n * (2 * np.sqrt(2 * k) - 1) + np.sqrt(2 * k)
            err = max(err, abs(discrete_action(m, alpha_n_loop(n, k), k).A - ref))
    return [("max |A(alpha_n) - formula|, n<=10", 0.0, err, 1e-10, err <= 1e-10)]


def _I_conservation():
    m = build_model("torus_magnetic")
    traj = integrate_el(m, FlowState(np.array([0.1, 0.3]), np.array([0.4, 0.7])), 10.0, 1e-3)
    I = traj.v[:, 0] + m.one_form(traj.q)[:, 0]
    drift = float(np.max(np.abs(I - I[0])))
    return [("max |I(t) - I(0)| over t<=10", 0.0, drift, 1e-8, drift <= 1e-8)]


def _no_connection():
    m = build_model("torus_magnetic")
    a = no_connection_certificate(m, (0.5, 0.0), (0.5, 0.5), 0.08)
    b = no_connection_certificate(m, (0.5, 0.0), (0.5, 0.5), 0.125)
    return [("verdict at k=0.08", "DISJOINT", a.verdict, 0.0, a.verdict == "DISJOINT"),
            ("verdict at k=0.125", "OVERLAP+contact", b.verdict + ("+contact" if b.contact else ""), 0.0,
             b.verdict == "OVERLAP" and b.contact)]


def _obstruction():
    s = get_scenario("torus_point_line")
    v = critical.k_obstruction(s.model, s.Q0, s.Q1)
    return [("k(L; Q0, Q1)", 0.5, v, 1e-4, abs(v - 0.5) <= 1e-4)]


def _lens_kN():
    s = get_scenario("torus_lens")
    b = critical.k_N_estimate(s.model, s.Q0, s.Q1)
    return [("k_N bracket [lower, upper]", 0.5, (b.lower, b.upper), 0.05, b.contains(0.5) and b.width <= 0.05)]


def _hyp_length():
    m = build_model("half_plane_horocycle")
    out = []
    for r in (0.5, 1.0, 2.0):
        v = circle_length(m, r)
        ref = 2 * np.pi * np.sinh(r)
        out.append((f"length r={r}", ref, v, 1e-6, abs(v - ref) <= 1e-6))
    return out


def _hyp_area():
    m = build_model("half_plane_horocycle")
    out = []
    for r in (0.5, 1.0, 2.0):
        v = circle_area(m, r)
        ref = 2 * np.pi * (np.cosh(r) - 1)
        out.append((f"area r={r}", ref, v, 1e-6, abs(v - ref) <= 1e-6))
    return out


def _hyp_action():
    m = build_model("half_plane_horocycle")
    out = []
    v = circle_action(m, 1.0, 0.5)
    ref = hyperbolic_action_closed(1.0, 0.5)
    out.append(("clockwise action r=1, k=0.5", ref, v, 1e-6, abs(v - ref) <= 1e-6))
    for r in (0.5, 1.0, 2.0, 4.0):
        a = circle_action(m, r, 0.6)
        out.append((f"action sign r={r}, k=0.6", "+", a, 0.0, a > 0))
    a = circle_action(m, 4.0, 0.45)
    out.append(("action sign r=4, k=0.45", "-", a, 0.0, a < 0))
    return out


def _horocycle_closure():
    m = build_model("half_plane_horocycle")
    s0 = FlowState(np.array([0.0, 1.0]), np.array([0.5, 0.0]))
    period, gap = nearest_return(m, s0, 12.0, 1e-3)
    return [("return gap of the k=0.125 orbit", 0.0, gap, 1e-4, gap <= 1e-4)]


FIXTURES = [
    ReproTarget("torus_c", "closed_form", "magnetic torus: c(L) = 1/2", _torus_c),
    ReproTarget("torus_cu", "closed_form", "magnetic torus: c_u(L) = 1/8 via u = x/2", _torus_cu),
    ReproTarget("torus_S_a", "closed_form", "loop a along y = 1/2: S_k(a) = k - 1/2", _S_a),
    ReproTarget("torus_alpha_n", "closed_form", "loops alpha_n: n(2 sqrt(2k) - 1) + sqrt(2k)", _alpha_n),
    ReproTarget("torus_I_conservation", "closed_form", "I = v_x + psi(y) is an integral of motion",
                _I_conservation),
    ReproTarget("torus_no_connection", "closed_form", "I-ranges of the two points are disjoint below 1/8",
                _no_connection),
    ReproTarget("torus_obstruction", "closed_form", "k(L; Q0, Q1) = 1/2 for the point and the line y = 1/2",
                _obstruction),
    ReproTarget("lens_k_N", "closed_form", "two contractible circles: k_N(L) = 1/2", _lens_kN),
    ReproTarget("hyperbolic_length", "closed_form", "length of a hyperbolic circle 2 pi sinh r", _hyp_length),
    ReproTarget("hyperbolic_area", "closed_form", "area of a hyperbolic disc 2 pi (cosh r - 1)", _hyp_area),
    ReproTarget("hyperbolic_action", "oracle", "clockwise circle action 2 pi (k + 1/2) sinh r - area",
                _hyp_action),
    ReproTarget("horocycle_closure", "closed_form", "orbits below energy 1/2 are closed circles",
                _horocycle_closure),
]


def fixture_names():
    return [f.name for f in FIXTURES]


def check_fixtures(fixtures=None):
    """Every fixture needs a known source and a non-empty anchor."""
    bad = [f.name for f in (fixtures or FIXTURES) if f.source not in SOURCES or not f.anchor.strip()]
    if bad:
        raise ValueError(f"fixtures without source or anchor: {bad}")


def reproduce_suite(names=None, threads: int = 1):
    """Run the fixture list (or the named subset) and return all rows."""
    check_fixtures()
    targets = FIXTURES if not names else [f for f in FIXTURES if f.name in set(names)]
    if names:
        unknown = set(names) - {f.name for f in FIXTURES}
        if unknown:
            raise KeyError(f"unknown reproduce targets: {sorted(unknown)}")
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            results = list(ex.map(lambda f: f(), targets))
    else:
        results = [f() for f in targets]
    return [row for rows in results for row in rows]


def rows_to_csv(rows, fh=None) -> str:
    import csv
    import io
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["name", "quantity", "expected", "computed", "tolerance", "source", "anchor", "status"])
    for r in rows:
        w.writerow(r.as_list())
    text = buf.getvalue()
    if fh is not None:
        with open(fh, "w") as f:
            f.write(text)
    return text
