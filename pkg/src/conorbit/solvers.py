"""Critical points of the discrete free-time action.

``minimize_action`` runs a preconditioned quasi-Newton descent with Armijo
backtracking.  For models quadratic in the velocity the time variable is
eliminated in closed form, ``T*(x) = sqrt(K / (k - Vbar))``, and the descent
runs on the reduced action ``min_T A(x, T)``.

``mountain_pass`` relaxes a string of paths between the constant-path valley
at an intersection point and a negative-action path; ``struwe_scan`` repeats
this over an energy grid with warm starts.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp
from scipy.linalg import cho_solve_banded, cholesky_banded
from scipy.sparse.linalg import splu

from .errors import DomainError
from .flow import ResidualReport, verify_solution
from .models import SurfaceModel
from .pathspace import (BoundarySpec, DiscretePath, LoopPath, chain_terms, chords, classify_component,
                        lift, lower_bound_estimate, path_to_csv, polyline_nodes, ActionValue, _wrap)

log = logging.getLogger(__name__)

CONVERGED = "CONVERGED"
COLLAPSED = "COLLAPSED_TO_CONSTANT"
UNBOUNDED = "UNBOUNDED"
MAX_ITERS = "MAX_ITERS"
DOMAIN_EXIT = "DOMAIN_EXIT"
STALLED = "STALLED"
NOT_APPLICABLE = "NOT_APPLICABLE"


@dataclass
class MinimizeConfig:
    N: int = 128
    max_iters: int = 50_000
    grad_tol: float | None = None
    T_min: float = 1e-4
    T_max: float = 1e4
    length_max: float = 50.0
    backtrack: float = 0.5
    armijo: float = 1e-4
    multistart: int = 1
    seed: int = 0
    memory: int = 10
    max_chord: float = 0.25
    check_lower_bound: bool = True
    verify: bool = True

    def __post_init__(self):
        if self.N < 16:
            raise ValueError("MinimizeConfig.N must be at least 16")
        if self.grad_tol is not None and not self.grad_tol > 0:
            raise ValueError("grad_tol must be positive")

    def tol(self, N: int) -> float:
        return self.grad_tol if self.grad_tol is not None else 1e-7 * np.sqrt(N)


@dataclass
class SolveReport:
    verdict: str
    path: object
    k: float
    action: float
    T: float
    grad_norm: float
    iterations: int
    trace: list = field(default_factory=list)
    residuals: ResidualReport | None = None
    component: tuple | None = None
    lower_bound_violations: int = 0
    descent_violations: int = 0
    message: str = ""

    @property
    def converged(self) -> bool:
        return self.verdict == CONVERGED

    def summary_row(self) -> dict:
        row = {"verdict": self.verdict, "k": self.k, "action": self.action, "T": self.T,
               "grad_norm": self.grad_norm, "iterations": self.iterations,
               "component": "" if self.component is None else " ".join(map(str, self.component)),
               "lower_bound_violations": self.lower_bound_violations}
        if self.residuals is not None:
            for key in ("el_residual", "energy_mismatch", "conormal_0", "conormal_1", "shooting_gap", "energy_drift"):
                row[key] = getattr(self.residuals, key)
        return row

    def to_csv(self, summary_file, path_file=None):
        row = self.summary_row()
        with open(summary_file, "w") as f:
            f.write(",".join(row) + "\n")
            f.write(",".join(_fmt(v) for v in row.values()) + "\n")
        if path_file is not None and self.path is not None:
            path_to_csv(self.path, path_file)


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


# ---------------------------------------------------------------------------
# problem wrapper: variables <-> paths
# ---------------------------------------------------------------------------

class PathProblem:
    """Maps a flat variable vector to a path and evaluates the (reduced) action."""

    def __init__(self, model: SurfaceModel, template, k: float):
        self.model = model
        self.k = float(k)
        self.loop = isinstance(template, LoopPath)
        self.N = template.N
        self.h = 1.0 / self.N
        if self.loop:
            self.Q0 = self.Q1 = None
            self.has_s0 = self.has_s1 = False
        else:
            self.Q0, self.Q1 = template.Q0, template.Q1
            self.has_s0 = not self.Q0.is_point
            self.has_s1 = not self.Q1.is_point
        self.reduced = model.quadratic_in_velocity
        self.n_nodes = template.N if self.loop else template.N - 1
        self.nx = 2 * self.n_nodes + int(self.has_s0) + int(self.has_s1)
        self.nvar = self.nx + (0 if self.reduced else 1)

    # -- packing
    def pack(self, path) -> np.ndarray:
        parts = []
        if self.has_s0:
            parts.append([path.s0])
        parts.append(path.nodes.ravel())
        if self.has_s1:
            parts.append([path.s1])
        if not self.reduced:
            parts.append([np.log(path.T)])
        return np.concatenate(parts).astype(float)

    def split(self, z):
        i = 0
        s0 = s1 = 0.0
        if self.has_s0:
            s0 = z[0]
            i = 1
        nodes = z[i:i + 2 * self.n_nodes].reshape(-1, 2)
        i += 2 * self.n_nodes
        if self.has_s1:
            s1 = z[i]
            i += 1
        logT = z[i] if not self.reduced else None
        return s0, nodes, s1, logT

    def points(self, z):
        s0, nodes, s1, _ = self.split(z)
        if self.loop:
            return np.vstack([nodes, nodes[:1]])
        return np.vstack([self.Q0.at(s0), nodes, self.Q1.at(s1)])

    def make_path(self, z, T):
        s0, nodes, s1, logT = self.split(z)
        if logT is not None:
            T = float(np.exp(logT))
        if self.loop:
            return LoopPath(nodes.copy(), T)
        return DiscretePath(self.Q0, self.Q1, s0, nodes.copy(), s1, T)

    # -- evaluation
    def evaluate(self, z, need_grad=True):
        """Return ``(A, grad, T, info)``; ``A = -inf`` flags unboundedness in ``T``."""
        X = self.points(z)
        model = self.model
        if model.chart_kind == "half_plane" and np.any(X[:, 1] <= 0):
            raise DomainError("node left the half-plane", index=int(np.argmax(X[:, 1] <= 0)))
        if self.reduced:
            d, m = chords(model, X)
            g = model.metric(m)
            K = 0.5 * float(np.sum(np.einsum("...i,...ij,...j->...", d, g, d))) / self.h
            S = self.k - float(np.sum(self.h * model.potential(m)))
            if S <= 0:
                return -np.inf, None, np.inf, {"unbounded": True, "K": K, "S": S}
            if K <= 1e-300:
                return float(np.sum(model.one_form(m) * d)), None, 0.0, {"collapsed": True, "K": K, "S": S}
            T = np.sqrt(K / S)
        else:
            T = float(np.exp(self.split(z)[3]))
        res = chain_terms(model, X, T, self.k, need_grad)
        A = float(res["A"])
        info = {"res": res, "X": X}
        if not need_grad:
            return A, None, T, info
        gX = res["gX"]
        if self.loop:
            gX = gX.copy()
            gX[0] += gX[-1]
            gX = gX[:-1]
            grad = gX.ravel()
        else:
            s0, _, s1, _ = self.split(z)
            parts = []
            if self.has_s0:
                parts.append([gX[0] @ self.Q0.tangent_at(s0)])
            parts.append(gX[1:-1].ravel())
            if self.has_s1:
                parts.append([gX[-1] @ self.Q1.tangent_at(s1)])
            grad = np.concatenate(parts)
        if not self.reduced:
            grad = np.concatenate([grad, [T * float(res["dA_dT"])]])
        return A, grad, T, info

    # -- preconditioner
    def jacobian(self, z):
        """Sparse map from variables (without log T) to stacked chart points."""
        s0, _, s1, _ = self.split(z)
        npts = self.n_nodes if self.loop else self.n_nodes + 2
        rows, cols, vals = [], [], []
        c = 0
        off = 0 if self.loop else 1
        if self.has_s0:
            t0 = self.Q0.tangent_at(s0)
            rows += [0, 1]
            cols += [0, 0]
            vals += [t0[0], t0[1]]
            c = 1
        for j in range(self.n_nodes):
            for a in range(2):
                rows.append(2 * (j + off) + a)
                cols.append(c + 2 * j + a)
                vals.append(1.0)
        if self.has_s1:
            t1 = self.Q1.tangent_at(s1)
            col = c + 2 * self.n_nodes
            rows += [2 * (npts - 1), 2 * (npts - 1) + 1]
            cols += [col, col]
            vals += [t1[0], t1[1]]
        return sp.csr_matrix((vals, (rows, cols)), shape=(2 * npts, self.nx))

    def point_metric(self, z, T, weighted=True):
        """Chord-weighted Laplacian plus mass on stacked chart points."""
        X = self.points(z)
        d, m = chords(self.model, X)
        N = len(d)
        if weighted:
            W = self.model.metric(m) / (self.h * T)
            mass = self.h * T
        else:
            W = np.broadcast_to(np.eye(2), (N, 2, 2)) / self.h
            mass = self.h
        npts = self.n_nodes if self.loop else self.n_nodes + 2
        rows, cols, vals = [], [], []
        idx = np.arange(N)
        a_idx = idx
        b_idx = (idx + 1) % npts if self.loop else idx + 1
        for a in range(2):
            for b in range(2):
                w = W[:, a, b]
                for (p, q, sgn) in ((a_idx, a_idx, 1), (b_idx, b_idx, 1), (a_idx, b_idx, -1), (b_idx, a_idx, -1)):
                    rows.append(2 * p + a)
                    cols.append(2 * q + b)
                    vals.append(sgn * w)
        rows.append(np.arange(2 * npts))
        cols.append(np.arange(2 * npts))
        vals.append(np.full(2 * npts, mass))
        M = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                          shape=(2 * npts, 2 * npts))
        return M

    def preconditioner(self, z, T, weighted=True):
        J = self.jacobian(z)
        M = self.point_metric(z, max(T, 1e-12), weighted)
        P = (J.T @ M @ J).tocsc()
        if not self.reduced:
            K = 0.5 * float(self.h * np.sum(np.linalg.norm(np.diff(self.points(z), axis=0), axis=1) ** 2)) / self.h
            P = sp.block_diag([P, sp.csc_matrix([[max(2 * K / T, 1e-8)]])]).tocsc()
        lu = splu(P)
        return P, lu.solve


# ---------------------------------------------------------------------------
# minimization
# ---------------------------------------------------------------------------

def _lbfgs_direction(g, solve, S, Y):
    q = g.copy()
    alphas = []
    for s, y in reversed(list(zip(S, Y))):
        rho = 1.0 / float(y @ s)
        a = rho * float(s @ q)
        alphas.append((a, rho, s, y))
        q -= a * y
    r = solve(q)
    if S:
        s, y = S[-1], Y[-1]
        Hy = solve(y)
        r *= float(s @ y) / float(y @ Hy)
    for a, rho, s, y in reversed(alphas):
        b = rho * float(y @ r)
        r += (a - b) * s
    return -r


def _resample_z(problem: PathProblem, z, N_new=None):
    X = lift(problem.model, problem.points(z))
    N = N_new or problem.N
    Y = polyline_nodes(X, N)
    s0, _, s1, logT = problem.split(z)
    parts = []
    if problem.has_s0:
        parts.append([s0])
    parts.append((Y[:-1] if problem.loop else Y[1:-1]).ravel())
    if problem.has_s1:
        parts.append([s1])
    if logT is not None:
        parts.append([logT])
    return np.concatenate(parts)


def minimize_action(model: SurfaceModel, Q0: BoundarySpec | None, Q1: BoundarySpec | None, k: float,
                    init, cfg: MinimizeConfig | None = None, verify: bool | None = None,
                    callback=None) -> SolveReport:
    """Minimize the free-time action starting from ``init``.

    ``init`` is a :class:`DiscretePath` (its boundaries are replaced by ``Q0``
    and ``Q1`` when given) or a :class:`LoopPath`.
    """
    cfg = cfg or MinimizeConfig()
    verify = cfg.verify if verify is None else verify
    if isinstance(init, DiscretePath) and (Q0 is not None or Q1 is not None):
        init = replace(init, Q0=Q0 or init.Q0, Q1=Q1 or init.Q1, nodes=init.nodes.copy())
    problem = PathProblem(model, init, k)
    z = problem.pack(init)
    tol = cfg.tol(problem.N)
    a_bound, b_bound = model.quadratic_bounds
    trace = []
    lb_viol = 0
    desc_viol = 0

    def finish(verdict, z, A, T, gnorm, it, msg=""):
        path = problem.make_path(z, T if np.isfinite(T) and T > 0 else init.T)
        residuals = None
        comp = None
        if verdict == CONVERGED and verify and not problem.loop:
            try:
                residuals = verify_solution(model, path, k)
            except DomainError:
                residuals = None
        if model.is_torus and not problem.loop:
            try:
                comp = classify_component(model, path)
            except ValueError:
                comp = None
        return SolveReport(verdict, path, float(k), float(A), float(T), float(gnorm), it, trace, residuals,
                           comp, lb_viol, desc_viol, msg)

    try:
        A, g, T, info = problem.evaluate(z)
    except DomainError as exc:
        return finish(DOMAIN_EXIT, z, np.nan, init.T, np.inf, 0, str(exc))
    if not np.isfinite(A) and A < 0:
        return finish(UNBOUNDED, z, A, T, np.inf, 0, "energy below the mean potential: action unbounded in T")
    if g is None:
        return finish(COLLAPSED, z, A, T, 0.0, 0, "path is constant")

    S, Y = [], []
    _, solve = problem.preconditioner(z, T)
    it = 0
    for it in range(1, cfg.max_iters + 1):
        gnorm = float(np.linalg.norm(g))
        if it == 1 or it % 50 == 0:
            trace.append((it, A, gnorm, T))
        if callback is not None:
            callback(it, A, gnorm, T)
        if gnorm <= tol:
            trace.append((it, A, gnorm, T))
            return finish(CONVERGED, z, A, T, gnorm, it)
        if it % 20 == 0:
            _, solve = problem.preconditioner(z, T)
        d = _lbfgs_direction(g, solve, S, Y)
        slope = float(g @ d)
        if not slope < 0:
            S, Y = [], []
            d = -solve(g)
            slope = float(g @ d)
        t = 1.0
        accepted = False
        while t > 1e-14:
            z_new = z + t * d
            try:
                A_new, g_new, T_new, info_new = problem.evaluate(z_new)
            except DomainError:
                t *= cfg.backtrack
                continue
            if A_new == -np.inf:
                return finish(UNBOUNDED, z_new, A_new, T_new, gnorm, it,
                              "mean potential exceeded k along the descent")
            if g_new is None:
                return finish(COLLAPSED, z_new, A_new, 0.0, 0.0, it, "path collapsed to a constant")
            if A_new <= A + cfg.armijo * t * slope:
                accepted = True
                break
            t *= cfg.backtrack
        if not accepted:
            return finish(STALLED if gnorm > 10 * tol else CONVERGED, z, A, T, gnorm, it,
                          "line search failed to make progress")
        if not A_new < A:
            desc_viol += 1
        s_vec = z_new - z
        y_vec = g_new - g
        if float(s_vec @ y_vec) > 1e-16 * float(np.linalg.norm(s_vec) * np.linalg.norm(y_vec)):
            S.append(s_vec)
            Y.append(y_vec)
            if len(S) > cfg.memory:
                S.pop(0)
                Y.pop(0)
        z, A, g, T, info = z_new, A_new, g_new, T_new, info_new

        if cfg.check_lower_bound and "res" in info:
            res = info["res"]
            bound = a_bound / T * float(res["length"]) ** 2 + T * (k - b_bound)
            if A < bound - 1e-9 * (1 + abs(bound)):
                lb_viol += 1
        if T < cfg.T_min:
            return finish(COLLAPSED, z, A, T, float(np.linalg.norm(g)), it, "T fell below the guard")
        if T > cfg.T_max:
            return finish(UNBOUNDED, z, A, T, float(np.linalg.norm(g)), it, "T grew past the guard")
        X = info["X"]
        dmax = float(np.max(np.linalg.norm(chords(model, X)[0], axis=-1)))
        if dmax > cfg.max_chord:
            length = float(np.sum(np.linalg.norm(chords(model, X)[0], axis=-1)))
            if length > cfg.length_max:
                return finish(UNBOUNDED, z, A, T, float(np.linalg.norm(g)), it,
                              f"path length {length:.3g} grew past the guard")
            z = _resample_z(problem, z)
            A, g, T, info = problem.evaluate(z)
            S, Y = [], []
            _, solve = problem.preconditioner(z, T)
    return finish(MAX_ITERS, z, A, T, float(np.linalg.norm(g)), it, "iteration budget exhausted")


def _better(a: SolveReport, b: SolveReport) -> bool:
    """Lowest action wins; ties within 1e-8 go to the smaller time."""
    if b is None:
        return True
    if abs(a.action - b.action) <= 1e-8:
        return a.T < b.T
    return a.action < b.action


def jitter_path(model, path, scale: float, rng: np.random.Generator):
    """Smooth random perturbation of the interior nodes (endpoints untouched)."""
    n = len(path.nodes)
    t = np.linspace(0, 1, n + 2)[1:-1]
    bump = np.zeros((n, 2))
    for mode in range(1, 4):
        bump += np.outer(np.sin(mode * np.pi * t), rng.normal(scale=scale / mode, size=2))
    if isinstance(path, LoopPath):
        return LoopPath(path.nodes + bump, path.T)
    return replace(path, nodes=path.nodes + bump)


def minimize_multistart(model: SurfaceModel, Q0, Q1, k: float, inits, cfg: MinimizeConfig | None = None,
                        threads: int = 1) -> tuple:
    """Run :func:`minimize_action` from several starts; return ``(best, all_reports)``.

    With ``cfg.multistart > len(inits)`` extra starts are made by jittering
    the given ones with a seeded generator.
    """
    cfg = cfg or MinimizeConfig()
    inits = list(inits)
    rng = np.random.default_rng(cfg.seed)
    base = list(inits)
    while len(inits) < cfg.multistart:
        inits.append(jitter_path(model, base[len(inits) % len(base)], 0.05, rng))
    run = lambda p: minimize_action(model, Q0, Q1, k, p, cfg)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            reports = list(ex.map(run, inits))
    else:
        reports = [run(p) for p in inits]
    best = None
    for r in reports:
        if r.converged and _better(r, best):
            best = r
    if best is None:
        for r in reports:
            if np.isfinite(r.action) and _better(r, best):
                best = r
    return best or reports[0], reports


# ---------------------------------------------------------------------------
# mountain pass
# ---------------------------------------------------------------------------

@dataclass
class StringConfig:
    beads: int = 17
    N: int = 48
    max_iters: int = 4000
    residual_tol: float = 1e-4
    climb_after: int = 30
    step: float = 0.5
    freeze: bool = True
    seed_samples: int = 64
    settle_tol: float = 1e-5
    climb_radius: float = 0.02


@dataclass
class MountainPassReport:
    verdict: str
    k: float
    minimax: float
    alpha: float
    alpha_variant: float
    epsilon: float
    T0: float
    saddle: DiscretePath | None
    saddle_T: float
    residual: float
    iterations: int
    residuals: ResidualReport | None = None
    beads: list = field(default_factory=list)
    bead_actions: np.ndarray | None = None
    head: DiscretePath | None = None
    head_action: float = np.nan
    tail_action: float = np.nan
    invariant_ok: bool = True
    trace: list = field(default_factory=list)
    message: str = ""

    @property
    def converged(self) -> bool:
        return self.verdict == CONVERGED


def mountain_pass_alpha(model: SurfaceModel, omega, epsilon: float, k: float, radius: float | None = None,
                        a: float | None = None):
    """Both lower bounds for the minimax value.

    ``2 eps sqrt(a (k - e0))`` (with ``e0`` the maximum of ``E(q, 0)`` near
    ``omega``) and ``(2 sqrt(a (k - c_E)) - c_theta) eps`` with ``c_E``,
    ``c_theta`` the maxima of ``E(q, 0)`` and ``|theta_q|`` over the ball of
    ``radius`` (default ``2 eps``) around ``omega``.
    """
    a = model.convexity if a is None else a
    radius = 2 * epsilon if radius is None else radius
    omega = np.atleast_2d(np.asarray(omega, dtype=float))
    ang = np.linspace(0, 2 * np.pi, 64, endpoint=False)
    rad = np.linspace(0, radius, 17)
    offs = (rad[:, None, None] * np.stack([np.cos(ang), np.sin(ang)], axis=-1)[None]).reshape(-1, 2)
    pts = (omega[:, None, :] + offs[None]).reshape(-1, 2)
    if model.chart_kind == "half_plane":
        pts = pts[pts[:, 1] > 0]
    E0 = model.zero_section_energy(pts)
    theta = model.dL_dv(pts, np.zeros_like(pts))
    c_E = float(np.max(E0))
    c_theta = float(np.max(model.dual_norm(pts, theta)))
    e0_omega = float(np.max(model.zero_section_energy(omega)))
    alpha = 2 * epsilon * np.sqrt(a * max(k - max(e0_omega, c_E), 0.0))
    variant = (2 * np.sqrt(a * max(k - c_E, 0.0)) - c_theta) * epsilon
    return float(alpha), float(variant), c_E, c_theta


def _nearest_param(Q: BoundarySpec, q, n=4096):
    if Q.is_point:
        return 0.0
    s = np.linspace(0, 1, n, endpoint=False)
    pts = Q.at(s)
    d = np.linalg.norm(_wrap(pts - q), axis=-1)
    i = int(np.argmin(d))
    from scipy.optimize import minimize_scalar
    f = lambda t: float(np.linalg.norm(_wrap(Q.at(t) - q)))
    res = minimize_scalar(f, bounds=(s[i] - 1.0 / n, s[i] + 1.0 / n), method="bounded",
                          options={"xatol": 1e-14})
    return float(res.x)


def chord_heads(model: SurfaceModel, Q0, Q1, k: float, label, samples: int = 64, N: int = 48):
    """Straight chords between boundary samples with negative optimal-time action,
    restricted to the component ``label``.  Sorted by action."""
    s = np.linspace(0, 1, samples, endpoint=False)
    s0s = s if not Q0.is_point else np.zeros(1)
    s1s = s if not Q1.is_point else np.zeros(1)
    S0, S1 = np.meshgrid(s0s, s1s, indexing="ij")
    S0, S1 = S0.ravel(), S1.ravel()
    P0 = Q0.at(S0)
    P1 = Q1.at(S1)
    D = P1 - P0
    if model.is_torus:
        D = _wrap(D)
    t = np.linspace(0, 1, N + 1)
    X = P0[:, None, :] + t[None, :, None] * D[:, None, :]
    if model.chart_kind == "half_plane":
        ok = np.all(X[..., 1] > 0, axis=1)
        X, S0, S1 = X[ok], S0[ok], S1[ok]
    h = 1.0 / N
    d, m = chords(model, X)
    g = model.metric(m)
    K = 0.5 * np.sum(np.einsum("...i,...ij,...j->...", d, g, d), axis=1) / h
    theta = np.sum(model.one_form(m) * d, axis=(1, 2))
    Sl = k - np.sum(h * model.potential(m), axis=1)
    A = np.where((K > 0) & (Sl > 0), 2 * np.sqrt(np.maximum(K * Sl, 0)) + theta, np.inf)
    A = np.where(Sl <= 0, -np.inf, A)
    order = np.argsort(A)
    heads = []
    for i in order:
        if not A[i] < -1e-10:
            break
        T = np.sqrt(K[i] / Sl[i]) if np.isfinite(A[i]) else 1.0
        path = DiscretePath(Q0, Q1, S0[i], X[i, 1:-1], S1[i], T)
        if model.is_torus and label is not None:
            try:
                if classify_component(model, path) != tuple(label):
                    continue
            except ValueError:
                continue
        heads.append((float(A[i]), path))
        if len(heads) >= 8:
            break
    return heads


def concatenate_loop_head(model, Q0, Q1, omega_point, loop: LoopPath, N: int = 48, T: float = 1.0):
    """Path that starts at the intersection point, runs once around ``loop``
    (translated so its first node sits at the point) and ends there again."""
    q = np.asarray(omega_point, dtype=float)
    X = lift(model, loop.points())
    X = X - X[0] + q
    Y = polyline_nodes(X, N)
    s0 = _nearest_param(Q0, q)
    s1 = _nearest_param(Q1, q)
    return DiscretePath(Q0, Q1, s0, Y[1:-1], s1, T)


def _staggered_string(problem: PathProblem, z_tail, z_head, s0_om, s1_om, head: DiscretePath, M: int):
    """Initial string: straight chords whose start slides first, then the end,
    followed by a linear blend onto the head.

    Sliding one endpoint at a time breaks the mirror symmetry that a plain
    linear interpolation inherits from symmetric configurations.
    """
    model = problem.model
    tt = np.linspace(0, 1, M)
    Z = np.empty((M, len(z_tail)))
    t = np.linspace(0, 1, problem.N + 1)[1:-1]
    for j, u in enumerate(tt):
        if u >= 0.8:
            w = (u - 0.8) / 0.2
            z_end = _chord_z(problem, model, head.s0, head.s1)
            Z[j] = (1 - w) * z_end + w * z_head
            continue
        a = min(u / 0.4, 1.0)
        b = min(max((u - 0.4) / 0.4, 0.0), 1.0)
        s0 = (1 - a) * s0_om + a * head.s0
        s1 = (1 - b) * s1_om + b * head.s1
        Z[j] = _chord_z(problem, model, s0, s1)
    Z[0], Z[-1] = z_tail, z_head
    return Z


def _chord_z(problem: PathProblem, model, s0, s1):
    p0 = problem.Q0.at(s0)
    p1 = problem.Q1.at(s1)
    D = p1 - p0
    if model.is_torus:
        D = _wrap(D)
    t = np.linspace(0, 1, problem.N + 1)[1:-1]
    nodes = p0[None] + t[:, None] * D[None]
    parts = []
    if problem.has_s0:
        parts.append([s0])
    parts.append(nodes.ravel())
    if problem.has_s1:
        parts.append([s1])
    return np.concatenate(parts)


def _upwind_tangent(Z, A, j):
    """Tangent pointing to the higher neighbour; blended at local extrema."""
    tp, tm = Z[j + 1] - Z[j], Z[j] - Z[j - 1]
    if A[j + 1] > A[j] > A[j - 1]:
        return tp
    if A[j + 1] < A[j] < A[j - 1]:
        return tm
    hi = max(abs(A[j + 1] - A[j]), abs(A[j - 1] - A[j]))
    lo = min(abs(A[j + 1] - A[j]), abs(A[j - 1] - A[j]))
    if A[j + 1] > A[j - 1]:
        return tp * hi + tm * lo
    return tp * lo + tm * hi


class _StringMetric:
    """Unweighted H^1-type metric on open-path variables.

    The interior-node block is a fixed tridiagonal matrix, so it is factored
    once; the endpoint parameters enter through a small Schur complement.
    """

    def __init__(self, problem: PathProblem):
        if problem.loop or not problem.reduced:
            raise ValueError("string metric needs an open path with reduced time")
        self.problem = problem
        n = problem.n_nodes
        h = problem.h
        self.n, self.h = n, h
        ab = np.zeros((2, n))
        ab[0, 1:] = -1.0 / h
        ab[1, :] = 2.0 / h + h
        self.chol = cholesky_banded(ab)
        e = np.zeros((n, 2))
        e[0, 0] = 1.0
        e[-1, 1] = 1.0
        self.w = cho_solve_banded((self.chol, False), e)

    def at(self, z):
        pb = self.problem
        s0, _, s1, _ = pb.split(z)
        t0 = pb.Q0.tangent_at(s0) if pb.has_s0 else None
        t1 = pb.Q1.tangent_at(s1) if pb.has_s1 else None
        return _MetricAt(self, t0, t1), _MetricAt(self, t0, t1).solve


class _MetricAt:
    def __init__(self, base: _StringMetric, t0, t1):
        self.b, self.t0, self.t1 = base, t0, t1
        h, n, w = base.h, base.n, base.w
        ends = []
        if t0 is not None:
            ends.append((t0, 0, w[:, 0]))
        if t1 is not None:
            ends.append((t1, n - 1, w[:, 1]))
        self.ends = ends
        m = len(ends)
        S = np.zeros((m, m))
        for a, (ta, ia, _) in enumerate(ends):
            S[a, a] = float(ta @ ta) * (1.0 / h + h)
            for c, (tc, ic, wc) in enumerate(ends):
                S[a, c] -= float(ta @ tc) / h ** 2 * wc[ia]
        self.S = S

    def _split(self, v):
        i = 0
        a0 = a1 = None
        if self.t0 is not None:
            a0 = v[0]
            i = 1
        V = v[i:i + 2 * self.b.n].reshape(-1, 2)
        if self.t1 is not None:
            a1 = v[i + 2 * self.b.n]
        return a0, V, a1

    def _join(self, a0, V, a1):
        parts = []
        if self.t0 is not None:
            parts.append([a0])
        parts.append(V.ravel())
        if self.t1 is not None:
            parts.append([a1])
        return np.concatenate(parts)

    def __matmul__(self, v):
        h = self.b.h
        a0, V, a1 = self._split(np.asarray(v, dtype=float))
        U = np.vstack([np.zeros(2) if a0 is None else a0 * self.t0, V,
                       np.zeros(2) if a1 is None else a1 * self.t1])
        D = np.diff(U, axis=0) / h
        MU = h * U
        MU[:-1] -= D
        MU[1:] += D
        r0 = None if a0 is None else float(self.t0 @ MU[0])
        r1 = None if a1 is None else float(self.t1 @ MU[-1])
        return self._join(r0, MU[1:-1], r1)

    def solve(self, g):
        h, b = self.b.h, self.b
        g0, Gn, g1 = self._split(np.asarray(g, dtype=float))
        Y = cho_solve_banded((b.chol, False), Gn)
        rhs = []
        for t, i, _ in self.ends:
            rhs.append(float(t @ Y[i]) / h)
        gs = [x for x in (g0, g1) if x is not None]
        a = np.linalg.solve(self.S, np.array(gs) + np.array(rhs)) if self.ends else np.zeros(0)
        X = Y.copy()
        for (t, i, wc), ac in zip(self.ends, a):
            X += (ac / h) * wc[:, None] * t[None, :]
        it = iter(a)
        a0 = next(it) if self.t0 is not None else None
        a1 = next(it) if self.t1 is not None else None
        return self._join(a0, X, a1)


def _reduced_batch(problem: PathProblem, Z):
    """Reduced action and gradient for each row of ``Z``."""
    out_A = np.empty(len(Z))
    out_G = np.zeros_like(Z)
    out_T = np.empty(len(Z))
    for j, z in enumerate(Z):
        A, g, T, _ = problem.evaluate(z)
        out_A[j] = A
        out_T[j] = T
        if g is not None:
            out_G[j] = g
    return out_A, out_G, out_T


def mountain_pass(model: SurfaceModel, Q0: BoundarySpec, Q1: BoundarySpec, omega_point, k: float,
                  cfg: StringConfig | None = None, epsilon: float = 0.05, init_string=None,
                  extra_heads=None, head=None) -> MountainPassReport:
    """Climbing-image string relaxation between the constant path at ``omega_point``
    and a negative-action head path in the same component."""
    cfg = cfg or StringConfig()
    if not model.quadratic_in_velocity:
        raise NotImplementedError("mountain_pass needs a quadratic-in-velocity model")
    q_om = np.asarray(omega_point, dtype=float)
    alpha, alpha_v, c_E, c_theta = mountain_pass_alpha(model, q_om, epsilon, k)
    E_om = float(model.zero_section_energy(q_om))
    empty = dict(minimax=np.nan, alpha=alpha, alpha_variant=alpha_v, epsilon=epsilon, T0=np.nan,
                 saddle=None, saddle_T=np.nan, residual=np.nan, iterations=0)
    if k <= E_om:
        return MountainPassReport(NOT_APPLICABLE, k, message="energy not above E(q,0) at the intersection", **empty)
    T0 = float(np.clip(alpha / (4 * (k - E_om)) if alpha > 0 else 1e-4, 1e-4, 1.0))
    empty["T0"] = T0
    s0_om = _nearest_param(Q0, q_om)
    s1_om = _nearest_param(Q1, q_om)
    N = cfg.N
    tail = DiscretePath(Q0, Q1, s0_om, np.repeat(q_om[None], N - 1, axis=0), s1_om, T0)
    tail_action = T0 * (k - E_om)
    label = classify_component(model, tail) if model.is_torus else None

    # head selection
    candidates = []
    if head is not None:
        candidates.append(head)
    candidates += [p for _, p in chord_heads(model, Q0, Q1, k, label, cfg.seed_samples, N)]
    for p in extra_heads or []:
        candidates.append(p)
    problem = PathProblem(model, tail, k)
    best = None
    for p in candidates:
        if p.N != N:
            X = lift(model, p.points())
            Y = polyline_nodes(X, N)
            p = DiscretePath(Q0, Q1, p.s0, Y[1:-1], p.s1, p.T)
        zh = problem.pack(p)
        A, _, _, _ = problem.evaluate(zh, need_grad=False)
        if A < -1e-10 and (best is None or A < best[0]):
            best = (A, p)
    if best is None:
        return MountainPassReport(NOT_APPLICABLE, k, tail_action=tail_action,
                                  message="no negative-action path found in the constant-path component", **empty)
    head_action, head_path = best

    # lift the head near the tail so linear interpolation is meaningful
    Xh = lift(model, head_path.points())
    if model.is_torus:
        Xh = Xh - np.round(Xh[0] - Q0.at(head_path.s0))
        shift = np.round(Q0.at(head_path.s0) - q_om)
        Xh = Xh - shift
    s0h = head_path.s0 - (np.round(head_path.s0 - s0_om) if not Q0.is_point else 0.0)
    s1h = head_path.s1 - (np.round(head_path.s1 - s1_om) if not Q1.is_point else 0.0)
    if not Q0.is_point and tuple(Q0.shift) != (0, 0):
        s0h = head_path.s0
    if not Q1.is_point and tuple(Q1.shift) != (0, 0):
        s1h = head_path.s1
    head_path = DiscretePath(Q0, Q1, s0h, Xh[1:-1], s1h, head_path.T)
    z_tail = problem.pack(tail)
    z_head = problem.pack(head_path)

    M = cfg.beads
    if init_string is not None and len(init_string) >= 3:
        Z = np.array([np.asarray(z, dtype=float) for z in init_string])
        Z[0], Z[-1] = z_tail, z_head
        M = len(Z)
    else:
        Z = _staggered_string(problem, z_tail, z_head, s0_om, s1_om, head_path, M)

    smetric = _StringMetric(problem)

    def pmetric(z):
        return smetric.at(z)

    def arclen(Z):
        dist = np.zeros(len(Z))
        for j in range(1, len(Z)):
            dz = Z[j] - Z[j - 1]
            P, _ = pmetric(Z[j])
            dist[j] = np.sqrt(max(float(dz @ (P @ dz)), 0.0))
        return np.cumsum(dist)

    def reparam(Z, fixed=()):
        """Equal arclength between fixed beads (ends and the climbing bead)."""
        anchors = sorted(set([0, len(Z) - 1, *fixed]))
        cum = arclen(Z)
        out = Z.copy()
        for a, b in zip(anchors[:-1], anchors[1:]):
            if b - a < 2:
                continue
            targets = np.linspace(cum[a], cum[b], b - a + 1)[1:-1]
            for j, t in zip(range(a + 1, b), targets):
                i = int(np.clip(np.searchsorted(cum, t) - 1, a, b - 1))
                w = 0.0 if cum[i + 1] == cum[i] else (t - cum[i]) / (cum[i + 1] - cum[i])
                out[j] = (1 - w) * Z[i] + w * Z[i + 1]
        return out

    def bead_length(z):
        d, m = chords(model, problem.points(z))
        return float(np.sum(model.norm(m, d)))

    Z = reparam(Z)
    trace = []
    climb = None
    eta = np.full(M, cfg.step)
    radius = cfg.climb_radius
    residual = np.inf
    invariant_ok = True
    it = 0
    frozen = np.zeros(M, dtype=bool)
    interior = np.arange(1, M - 1)
    A, G, T = _reduced_batch(problem, Z)
    A[0] = tail_action
    prev_top = np.inf
    settled = 0
    for it in range(1, cfg.max_iters + 1):
        if not (A[-1] < 0 and tail_action <= alpha / 4 + 1e-15):
            invariant_ok = False
        top = int(interior[np.argmax(A[interior])])
        if climb is None:
            # start climbing once the plain string has settled
            settled = settled + 1 if abs(A[top] - prev_top) < cfg.settle_tol else 0
            prev_top = A[top]
            if settled >= 5 or it > cfg.climb_after:
                climb = top
        else:
            climb = top
        if climb is not None:
            residual = float(np.linalg.norm(G[climb]))
            if residual <= cfg.residual_tol:
                break
        if it % 25 == 1:
            trace.append((it, float(A[top]), residual))
        Znew = Z.copy()
        for j in interior:
            if cfg.freeze and frozen[j]:
                continue
            P, solve = pmetric(Z[j])
            Gp = solve(G[j])
            tau = _upwind_tangent(Z, A, j) if j != climb else Z[j + 1] - Z[j - 1]
            tn = np.sqrt(max(float(tau @ (P @ tau)), 1e-300))
            tau = tau / tn
            comp = float(tau @ (P @ Gp))
            Tj = max(T[j], 1e-3)
            if j == climb:
                d = -(Gp - 2 * comp * tau)
                dn = np.sqrt(max(float(d @ (P @ d)), 1e-300))
                t = min(eta[j] * Tj, radius / dn)
                g_old = np.sqrt(max(float(G[j] @ Gp), 0.0))
                try:
                    A_try, G_try, _, _ = problem.evaluate(Z[j] + t * d)
                except DomainError:
                    G_try = None
                if G_try is None:
                    radius *= 0.25
                    continue
                g_new = np.sqrt(max(float(G_try @ solve(G_try)), 0.0))
                if g_new <= g_old:
                    Znew[j] = Z[j] + t * d
                    radius = min(radius * 1.5, cfg.climb_radius)
                else:
                    radius *= 0.5
                    if g_new <= 2 * g_old:
                        Znew[j] = Z[j] + t * d
                continue
            d = -(Gp - comp * tau)
            slope = float(G[j] @ d)
            t = eta[j] * Tj
            while t > 1e-10:
                try:
                    A_try, _, _, _ = problem.evaluate(Z[j] + t * d, need_grad=False)
                except DomainError:
                    t *= 0.5
                    continue
                if A_try <= A[j] + 1e-4 * t * slope:
                    break
                t *= 0.5
            Znew[j] = Z[j] + t * d
        Z = reparam(Znew, fixed=() if climb is None else (climb,))
        A, G, T = _reduced_batch(problem, Z)
        A[0] = tail_action
        if cfg.freeze:
            for j in interior:
                frozen[j] = A[j] < alpha / 2 and bead_length(Z[j]) < epsilon and j < (climb or M)
    A, G, T = _reduced_batch(problem, Z)
    A[0] = tail_action
    interior = np.arange(1, M - 1)
    climb = int(interior[np.argmax(A[interior])])
    residual = float(np.linalg.norm(G[climb]))
    verdict = CONVERGED if residual <= cfg.residual_tol else STALLED
    saddle = problem.make_path(Z[climb], T[climb])
    residuals = None
    if verdict == CONVERGED:
        try:
            residuals = verify_solution(model, saddle, k)
        except DomainError:
            residuals = None
    return MountainPassReport(
        verdict=verdict, k=float(k), minimax=float(A[climb]), alpha=alpha, alpha_variant=alpha_v,
        epsilon=epsilon, T0=T0, saddle=saddle, saddle_T=float(T[climb]), residual=residual,
        iterations=it, residuals=residuals, beads=[z.copy() for z in Z], bead_actions=A.copy(),
        head=head_path, head_action=float(head_action), tail_action=float(tail_action),
        invariant_ok=invariant_ok, trace=trace)


# ---------------------------------------------------------------------------
# Struwe-type energy scan
# ---------------------------------------------------------------------------

@dataclass
class MinimaxCurve:
    k: np.ndarray
    c_omega: np.ndarray
    converged: np.ndarray
    T_star: np.ndarray
    residual: np.ndarray
    bounded: np.ndarray
    monotone: bool
    reports: list = field(default_factory=list)

    def to_csv(self, fh=None) -> str:
        lines = ["k,c_omega,converged,T_star,residual"]
        for k, c, ok, T, r in zip(self.k, self.c_omega, self.converged, self.T_star, self.residual):
            lines.append(f"{k:.17g},{c:.17g},{int(ok)},{T:.17g},{r:.17g}")
        text = "\n".join(lines) + "\n"
        if fh is not None:
            with open(fh, "w") as f:
                f.write(text)
        return text


def struwe_scan(model: SurfaceModel, Q0, Q1, omega_point, k_grid, cfg: StringConfig | None = None,
                epsilon: float = 0.05, mono_tol: float = 1e-6) -> MinimaxCurve:
    """Mountain-pass values over an ascending energy grid with warm-started strings.

    ``bounded[i]`` records whether the saddle time at ``k_i`` obeys
    ``T* <= (c(k_{i+1}) - c(k_i)) / (k_{i+1} - k_i) + 2`` (checked between
    converged neighbours; left ``True`` when no neighbour is available).
    """
    k_grid = np.asarray(k_grid, dtype=float)
    if np.any(np.diff(k_grid) <= 0):
        raise ValueError("k_grid must be strictly ascending")
    reports = []
    prev = None
    for k in k_grid:
        rep = mountain_pass(model, Q0, Q1, omega_point, k, cfg, epsilon,
                            init_string=None if prev is None else prev.beads,
                            head=None)
        reports.append(rep)
        if rep.converged:
            prev = rep
    c = np.array([r.minimax for r in reports])
    conv = np.array([r.converged for r in reports])
    Ts = np.array([r.saddle_T for r in reports])
    resid = np.array([r.residual for r in reports])
    bounded = np.ones(len(k_grid), dtype=bool)
    monotone = True
    for i in range(len(k_grid) - 1):
        if conv[i] and conv[i + 1]:
            dq = (c[i + 1] - c[i]) / (k_grid[i + 1] - k_grid[i])
            if c[i + 1] < c[i] - mono_tol:
                monotone = False
            bounded[i] = Ts[i] <= dq + 2.0
    return MinimaxCurve(k_grid, c, conv, Ts, resid, bounded, monotone, reports)
