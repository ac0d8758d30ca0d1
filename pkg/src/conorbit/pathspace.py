"""Discrete free-time paths between two boundary submanifolds.

A path is stored as ``(s0, x_1..x_{N-1}, s1, T)``: endpoint parameters on the
boundary curves, interior chart nodes and the total time.  The action uses the
midpoint rule on chord velocities

    A_k = sum_i h T [L(m_i, d_i / (h T)) + k],   h = 1/N,

with chord ``d_i`` (minimal image on the torus) and midpoint ``m_i``.  The
gradient returned by :func:`action_gradient` is the exact gradient of this sum.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .errors import DomainError, UnsupportedOperation
from .models import SurfaceModel


def _wrap(d):
    """Minimal-image representative, deterministic at exactly one half."""
    return d - np.floor(d + 0.5)


# ---------------------------------------------------------------------------
# boundary submanifolds
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class BoundarySpec:
    """A point or a closed curve ``Q``.

    ``curve(s)`` is a lifted parametrization, continuous on the real line with
    ``curve(s + 1) = curve(s) + shift``; ``shift`` is the lattice vector the
    curve winds by (zero for contractible curves).  ``implicit(q)`` vanishes
    exactly on ``Q`` and changes sign across it.
    """

    kind: str
    point: np.ndarray | None = None
    curve: Callable | None = None
    tangent: Callable | None = None
    implicit: Callable | None = None
    generators: tuple = ()
    shift: tuple = (0, 0)
    label: str = ""
    params: dict = field(default_factory=dict)

    @property
    def is_point(self) -> bool:
        return self.kind == "point"

    def at(self, s):
        if self.is_point:
            s = np.asarray(s, dtype=float)
            return np.broadcast_to(self.point, s.shape + (2,)).copy()
        return self.curve(np.asarray(s, dtype=float))

    def tangent_at(self, s):
        s = np.asarray(s, dtype=float)
        if self.is_point:
            return np.zeros(s.shape + (2,))
        return self.tangent(s)

    def swapped_label(self):
        return self.label


def point(q, label: str = "") -> BoundarySpec:
    q = np.asarray(q, dtype=float).reshape(2)
    return BoundarySpec(kind="point", point=q, label=label or f"point({q[0]:g},{q[1]:g})",
                        params={"q": tuple(q)})


def circle(center, radius: float, label: str = "", torus: bool = True) -> BoundarySpec:
    """Counterclockwise Euclidean circle; contractible on the torus when ``radius < 1/2``."""
    c = np.asarray(center, dtype=float).reshape(2)
    r = float(radius)
    if r <= 0:
        raise ValueError("circle radius must be positive")
    tau = 2 * np.pi

    def curve(s):
        return np.stack([c[0] + r * np.cos(tau * s), c[1] + r * np.sin(tau * s)], axis=-1)

    def tangent(s):
        return np.stack([-tau * r * np.sin(tau * s), tau * r * np.cos(tau * s)], axis=-1)

    def implicit(q):
        d = np.asarray(q, dtype=float) - c
        if torus:
            d = _wrap(d)
        return np.sum(d * d, axis=-1) - r * r

    return BoundarySpec(kind="closed_curve", curve=curve, tangent=tangent, implicit=implicit,
                        label=label or f"circle(({c[0]:g},{c[1]:g}),{r:g})",
                        params={"center": tuple(c), "radius": r})


def hline(y: float, label: str = "") -> BoundarySpec:
    """Horizontal closed geodesic ``{y = const}`` of the flat torus."""
    y = float(y)

    def curve(s):
        s = np.asarray(s, dtype=float)
        return np.stack([s, np.full_like(s, y)], axis=-1)

    def tangent(s):
        s = np.asarray(s, dtype=float)
        return np.stack([np.ones_like(s), np.zeros_like(s)], axis=-1)

    return BoundarySpec(kind="closed_curve", curve=curve, tangent=tangent,
                        implicit=lambda q: _wrap(np.asarray(q, dtype=float)[..., 1] - y),
                        generators=((1, 0),), shift=(1, 0), label=label or f"hline({y:g})",
                        params={"y": y})


def vline(x: float, label: str = "") -> BoundarySpec:
    """Vertical closed geodesic ``{x = const}`` of the flat torus."""
    x = float(x)

    def curve(s):
        s = np.asarray(s, dtype=float)
        return np.stack([np.full_like(s, x), s], axis=-1)

    def tangent(s):
        s = np.asarray(s, dtype=float)
        return np.stack([np.zeros_like(s), np.ones_like(s)], axis=-1)

    return BoundarySpec(kind="closed_curve", curve=curve, tangent=tangent,
                        implicit=lambda q: _wrap(np.asarray(q, dtype=float)[..., 0] - x),
                        generators=((0, 1),), shift=(0, 1), label=label or f"vline({x:g})",
                        params={"x": x})


def check_boundary(Q: BoundarySpec, n: int = 256, torus: bool = True):
    """Sampled closedness and immersion checks for a curve."""
    if Q.is_point:
        return
    s = np.linspace(0.0, 1.0, n, endpoint=False)
    gap = Q.at(1.0) - Q.at(0.0) - np.asarray(Q.shift, dtype=float)
    if np.max(np.abs(gap)) > 1e-9:
        raise ValueError(f"{Q.label} does not close up: gap {gap}")
    speed = np.linalg.norm(Q.tangent_at(s), axis=-1)
    if np.min(speed) < 1e-8:
        raise ValueError(f"{Q.label} is not immersed")


# ---------------------------------------------------------------------------
# paths
# ---------------------------------------------------------------------------

@dataclass
class DiscretePath:
    """Free-time path with endpoints ``Q0(s0)`` and ``Q1(s1)``.

    ``end_shift`` is the lattice vector added to ``Q1(s1)`` to obtain the
    lifted final node; it only matters for reporting the lift of the path
    since chords are taken as minimal images.
    """

    Q0: BoundarySpec
    Q1: BoundarySpec
    s0: float
    nodes: np.ndarray
    s1: float
    T: float

    def __post_init__(self):
        self.nodes = np.asarray(self.nodes, dtype=float).reshape(-1, 2)
        self.s0 = 0.0 if self.Q0.is_point else float(self.s0)
        self.s1 = 0.0 if self.Q1.is_point else float(self.s1)
        self.T = float(self.T)
        if not self.T > 0:
            raise ValueError(f"path time must be positive, got {self.T}")
        if self.N < 2:
            raise ValueError("a path needs at least two segments")

    @property
    def N(self) -> int:
        return len(self.nodes) + 1

    def points(self) -> np.ndarray:
        return np.vstack([self.Q0.at(self.s0), self.nodes, self.Q1.at(self.s1)])

    def copy(self) -> "DiscretePath":
        return replace(self, nodes=self.nodes.copy())


@dataclass
class LoopPath:
    """Closed free-time path; the closing chord runs from the last node to the first."""

    nodes: np.ndarray
    T: float

    def __post_init__(self):
        self.nodes = np.asarray(self.nodes, dtype=float).reshape(-1, 2)
        self.T = float(self.T)
        if not self.T > 0:
            raise ValueError(f"loop time must be positive, got {self.T}")
        if len(self.nodes) < 2:
            raise ValueError("a loop needs at least two nodes")

    @property
    def N(self) -> int:
        return len(self.nodes)

    def points(self) -> np.ndarray:
        return np.vstack([self.nodes, self.nodes[:1]])

    def copy(self) -> "LoopPath":
        return LoopPath(self.nodes.copy(), self.T)


@dataclass
class ActionValue:
    A: float
    dA_dT: float
    length: float
    kinetic: float
    T: float
    energy_mean: float
    energy_spread: float


@dataclass
class ActionGradient:
    dA_ds0: float
    dA_dnodes: np.ndarray
    dA_ds1: float
    dA_dT: float
    has_s0: bool = True
    has_s1: bool = True

    @property
    def vector(self) -> np.ndarray:
        parts = []
        if self.has_s0:
            parts.append([self.dA_ds0])
        parts.append(self.dA_dnodes.ravel())
        if self.has_s1:
            parts.append([self.dA_ds1])
        parts.append([self.dA_dT])
        return np.concatenate(parts)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.vector))


# ---------------------------------------------------------------------------
# core quadrature
# ---------------------------------------------------------------------------

def chords(model: SurfaceModel, X):
    """Chords and midpoints of polygons ``X`` with shape ``(..., N+1, 2)``."""
    d = np.diff(X, axis=-2)
    if model.is_torus:
        d = _wrap(d)
    m = X[..., :-1, :] + 0.5 * d
    return d, m


def chain_terms(model: SurfaceModel, X, T, k, need_grad: bool = True):
    """Action pieces for polygons ``X`` of shape ``(..., N+1, 2)`` and times ``T``.

    Returns a dict with ``A``, ``dA_dT``, ``gX`` (gradient w.r.t. every node,
    endpoints included), per-segment ``E``, ``length`` and ``kinetic``.
    """
    X = np.asarray(X, dtype=float)
    T = np.asarray(T, dtype=float)
    N = X.shape[-2] - 1
    h = 1.0 / N
    d, m = chords(model, X)
    if model.chart_kind == "half_plane":
        for arr, what in ((X, "node"), (m, "midpoint")):
            bad = ~(arr[..., 1] > 0.0)
            if np.any(bad):
                idx = np.argwhere(bad)[0]
                raise DomainError(f"{what} {int(idx[-1])} leaves the half-plane (y <= 0)",
                                  index=int(idx[-1]), point=arr[tuple(idx)])
    hT = (h * T)[..., None]
    v = d / hT[..., None]
    L = model.lagrangian(m, v)
    p = model.dL_dv(m, v)
    E = np.sum(p * v, axis=-1) - L
    A = np.sum(hT * (L + k), axis=-1)
    dA_dT = np.sum(h * (k - E), axis=-1)
    g = model.metric(m)
    seg_len = np.sqrt(np.maximum(np.einsum("...i,...ij,...j->...", d, g, d), 0.0))
    out = {"A": A, "dA_dT": dA_dT, "E": E, "length": np.sum(seg_len, axis=-1),
           "kinetic": np.sum(seg_len ** 2, axis=-1) / h, "d": d, "m": m, "v": v, "p": p}
    if need_grad:
        Lq = model.dL_dq(m, v)
        half = 0.5 * hT[..., None] * Lq
        gX = np.zeros_like(X)
        gX[..., :-1, :] += half - p
        gX[..., 1:, :] += half + p
        out["gX"] = gX
    return out


def _path_action(model, path: DiscretePath, k, need_grad=True):
    X = path.points()
    model.check_domain(X, "node")
    return chain_terms(model, X, path.T, k, need_grad), X


def _loop_action(model, loop: LoopPath, k, need_grad=True):
    X = loop.points()
    model.check_domain(loop.nodes, "node")
    res = chain_terms(model, X, loop.T, k, need_grad)
    if need_grad:
        gX = res["gX"]
        gX[0] += gX[-1]
        res["gX"] = gX[:-1]
    return res, X


def _action_value(res, T) -> ActionValue:
    E = res["E"]
    return ActionValue(A=float(res["A"]), dA_dT=float(res["dA_dT"]), length=float(res["length"]),
                       kinetic=float(res["kinetic"]), T=float(T), energy_mean=float(np.mean(E)),
                       energy_spread=float(np.max(E) - np.min(E)))


def discrete_action(model: SurfaceModel, path, k: float) -> ActionValue:
    """Free-time action of a :class:`DiscretePath` or :class:`LoopPath`."""
    if isinstance(path, LoopPath):
        res, _ = _loop_action(model, path, k, need_grad=False)
    else:
        res, _ = _path_action(model, path, k, need_grad=False)
    return _action_value(res, path.T)


def action_gradient(model: SurfaceModel, path, k: float) -> ActionGradient:
    """Exact gradient of the discrete action over ``(s0, nodes, s1, T)``."""
    if isinstance(path, LoopPath):
        res, _ = _loop_action(model, path, k)
        return ActionGradient(0.0, res["gX"], 0.0, float(res["dA_dT"]), False, False)
    res, _ = _path_action(model, path, k)
    gX = res["gX"]
    ds0 = float(gX[0] @ path.Q0.tangent_at(path.s0)) if not path.Q0.is_point else 0.0
    ds1 = float(gX[-1] @ path.Q1.tangent_at(path.s1)) if not path.Q1.is_point else 0.0
    return ActionGradient(ds0, gX[1:-1].copy(), ds1, float(res["dA_dT"]),
                          not path.Q0.is_point, not path.Q1.is_point)


def action_and_gradient(model: SurfaceModel, path, k: float):
    """Both the :class:`ActionValue` and the :class:`ActionGradient` in one pass."""
    if isinstance(path, LoopPath):
        res, _ = _loop_action(model, path, k)
        return _action_value(res, path.T), ActionGradient(0.0, res["gX"], 0.0, float(res["dA_dT"]), False, False)
    res, _ = _path_action(model, path, k)
    gX = res["gX"]
    ds0 = float(gX[0] @ path.Q0.tangent_at(path.s0)) if not path.Q0.is_point else 0.0
    ds1 = float(gX[-1] @ path.Q1.tangent_at(path.s1)) if not path.Q1.is_point else 0.0
    grad = ActionGradient(ds0, gX[1:-1].copy(), ds1, float(res["dA_dT"]),
                          not path.Q0.is_point, not path.Q1.is_point)
    return _action_value(res, path.T), grad


def lower_bound_estimate(value: ActionValue, a: float, b: float, k: float) -> float:
    """``(a/T) l^2 + T (k - b)``, a lower bound for the action of the path."""
    return a / value.T * value.length ** 2 + value.T * (k - b)


# ---------------------------------------------------------------------------
# optimal time for quadratic models
# ---------------------------------------------------------------------------

def time_split(model: SurfaceModel, path, k: float):
    """Split ``A(T) = K/T + Theta + T (k - Vbar)`` for quadratic-in-velocity models."""
    if not model.quadratic_in_velocity:
        raise UnsupportedOperation("time splitting needs a quadratic-in-velocity model")
    X = path.points()
    N = X.shape[0] - 1
    h = 1.0 / N
    d, m = chords(model, X)
    g = model.metric(m)
    K = 0.5 * float(np.sum(np.einsum("...i,...ij,...j->...", d, g, d))) / h
    theta = float(np.sum(model.one_form(m) * d))
    Vbar = float(np.sum(h * model.potential(m)))
    return K, theta, k - Vbar


def optimal_time(model: SurfaceModel, path, k: float):
    """Time minimizing the action of the fixed polygon, and the resulting action.

    Returns ``(inf, -inf)`` when the action is unbounded below in ``T``.
    """
    K, theta, slope = time_split(model, path, k)
    if slope <= 0:
        if slope < 0 or K == 0:
            return np.inf, (-np.inf if slope < 0 else theta)
        return np.inf, theta
    if K <= 0:
        return 0.0, theta
    T = np.sqrt(K / slope)
    return float(T), float(2.0 * np.sqrt(K * slope) + theta)


# ---------------------------------------------------------------------------
# constructors and resampling
# ---------------------------------------------------------------------------

def polyline_nodes(waypoints, N: int) -> np.ndarray:
    """``N + 1`` points spaced uniformly by Euclidean arclength along ``waypoints``."""
    W = np.asarray(waypoints, dtype=float)
    seg = np.linalg.norm(np.diff(W, axis=0), axis=1)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    if cum[-1] == 0:
        return np.repeat(W[:1], N + 1, axis=0)
    t = np.linspace(0.0, cum[-1], N + 1)
    return np.column_stack([np.interp(t, cum, W[:, 0]), np.interp(t, cum, W[:, 1])])


def path_from_polyline(Q0: BoundarySpec, s0: float, Q1: BoundarySpec, s1: float, waypoints,
                       N: int, T: float, end_shift=(0, 0)) -> DiscretePath:
    """Path through lifted ``waypoints`` from ``Q0(s0)`` to ``Q1(s1) + end_shift``."""
    start = Q0.at(s0)
    end = Q1.at(s1) + np.asarray(end_shift, dtype=float)
    W = [start] + [np.asarray(w, dtype=float) for w in waypoints] + [end]
    X = polyline_nodes(W, N)
    return DiscretePath(Q0, Q1, s0, X[1:-1], s1, T)


def straight_path(Q0: BoundarySpec, s0: float, Q1: BoundarySpec, s1: float, N: int, T: float,
                  end_shift=(0, 0)) -> DiscretePath:
    return path_from_polyline(Q0, s0, Q1, s1, [], N, T, end_shift)


def constant_path(Q0: BoundarySpec, s0: float, Q1: BoundarySpec, s1: float, N: int, T: float) -> DiscretePath:
    """All nodes at ``Q0(s0)``; meaningful when ``Q1(s1)`` is the same point."""
    q = Q0.at(s0)
    return DiscretePath(Q0, Q1, s0, np.repeat(q[None], N - 1, axis=0), s1, T)


def loop_from_polyline(waypoints, N: int, T: float) -> LoopPath:
    """Loop through lifted ``waypoints``; the last waypoint closes onto the first modulo the lattice."""
    X = polyline_nodes(waypoints, N)
    return LoopPath(X[:-1], T)


def alpha_n_loop(n: int, k: float, per_unit: int = 8) -> LoopPath:
    """Rectangle loop running ``n`` times left along ``y = 1/2`` and ``n`` times
    right along ``y = 0`` at constant speed ``sqrt(2k)``.  Contractible on the torus."""
    speed = np.sqrt(2 * k)
    W = [(n, 0.5), (0.0, 0.5), (0.0, 0.0), (n, 0.0), (n, 0.5)]
    N = (2 * n + 1) * per_unit
    return loop_from_polyline(W, N, (2 * n + 1) / speed)


def lift(model: SurfaceModel, X) -> np.ndarray:
    """Continuous lift of a polygon: cumulative sum of minimal-image chords."""
    X = np.asarray(X, dtype=float)
    if not model.is_torus:
        return X.copy()
    d = _wrap(np.diff(X, axis=0))
    return np.vstack([X[:1], X[:1] + np.cumsum(d, axis=0)])


def resample(model: SurfaceModel, path, N: int | None = None):
    """Redistribute nodes uniformly by arclength, keeping endpoints and ``T``."""
    X = lift(model, path.points())
    N = N or (path.N)
    Y = polyline_nodes(X, N)
    if isinstance(path, LoopPath):
        return LoopPath(Y[:-1], path.T)
    return DiscretePath(path.Q0, path.Q1, path.s0, Y[1:-1], path.s1, path.T)


def refine(model: SurfaceModel, path):
    """Midpoint subdivision doubling ``N``."""
    X = lift(model, path.points())
    mid = 0.5 * (X[:-1] + X[1:])
    Y = np.empty((2 * len(X) - 1, 2))
    Y[0::2] = X
    Y[1::2] = mid
    if isinstance(path, LoopPath):
        return LoopPath(Y[:-1], path.T)
    return DiscretePath(path.Q0, path.Q1, path.s0, Y[1:-1], path.s1, path.T)


def max_chord(model: SurfaceModel, path) -> float:
    d, _ = chords(model, path.points())
    return float(np.max(np.linalg.norm(d, axis=-1)))


# ---------------------------------------------------------------------------
# path components on the torus
# ---------------------------------------------------------------------------

def lattice_basis(generators):
    """Echelon basis of the integer lattice spanned by ``generators``.

    Returns ``[]``, ``[(p, q)]`` with the first nonzero entry positive, or
    ``[(a, b), (0, c)]`` with ``a, c > 0`` and ``0 <= b < c``.
    """
    rows = [list(map(int, g)) for g in generators if any(int(x) for x in g)]
    if not rows:
        return []
    # Euclid on the first column
    while sum(1 for r in rows if r[0] != 0) > 1:
        rows.sort(key=lambda r: (r[0] == 0, abs(r[0])))
        piv = rows[0]
        for r in rows[1:]:
            if r[0] != 0:
                f = r[0] // piv[0]
                r[0] -= f * piv[0]
                r[1] -= f * piv[1]
    top = [r for r in rows if r[0] != 0]
    rest = [r[1] for r in rows if r[0] == 0]
    c = int(np.gcd.reduce(np.abs(rest))) if rest else 0
    if not top:
        return [(0, c)]
    a, b = top[0]
    if a < 0:
        a, b = -a, -b
    if c == 0:
        return [(a, b)]
    return [(a, b % c), (0, c)]


def reduce_class(w, basis) -> tuple:
    """Canonical representative of ``w`` modulo the lattice with echelon ``basis``."""
    x, y = int(w[0]), int(w[1])
    if not basis:
        return (x, y)
    if len(basis) == 1:
        p, q = basis[0]
        if p != 0:
            f = x // p
            return (x - f * p, y - f * q)
        return (x, y % abs(q))
    (a, b), (_, c) = basis
    f = x // a
    x, y = x - f * a, y - f * b
    return (x, y % c)


def winding_vector(model: SurfaceModel, path: DiscretePath) -> np.ndarray:
    """Integer class of the path closed up by a fixed reference return path.

    The return runs along ``Q1`` back to ``Q1(0)``, takes the minimal-image
    segment to ``Q0(0)`` and runs along ``Q0`` to the starting point.
    """
    if not model.is_torus:
        raise UnsupportedOperation("path components are only classified on the flat torus")
    Q0, Q1 = path.Q0, path.Q1
    d, _ = chords(model, path.points())
    D = np.sum(d, axis=0)
    ret = (Q1.at(0.0) - Q1.at(path.s1)) + _wrap(Q0.at(0.0) - Q1.at(0.0)) + (Q0.at(path.s0) - Q0.at(0.0))
    W = D + ret
    Wi = np.round(W)
    if np.max(np.abs(W - Wi)) > 1e-6:
        raise ValueError(f"winding computation did not close up: {W}")
    return Wi.astype(int)


def classify_component(model: SurfaceModel, path: DiscretePath, Q0: BoundarySpec | None = None,
                       Q1: BoundarySpec | None = None) -> tuple:
    """Coset label of the path in Z^2 modulo the generators of ``Q0`` and ``Q1``."""
    if Q0 is not None or Q1 is not None:
        path = replace(path, Q0=Q0 or path.Q0, Q1=Q1 or path.Q1)
    W = winding_vector(model, path)
    basis = lattice_basis(list(path.Q0.generators) + list(path.Q1.generators))
    return reduce_class(W, basis)


def loop_winding(model: SurfaceModel, loop: LoopPath) -> tuple:
    d, _ = chords(model, loop.points())
    W = np.round(np.sum(d, axis=0)).astype(int)
    return (int(W[0]), int(W[1]))


# ---------------------------------------------------------------------------
# CSV round trip
# ---------------------------------------------------------------------------

def path_to_csv(path, fh=None) -> str:
    """Serialize with 17 significant digits; header comments carry s0, s1, T, N."""
    buf = io.StringIO()
    s0 = getattr(path, "s0", 0.0)
    s1 = getattr(path, "s1", 0.0)
    buf.write(f"# s0={s0:.17g}\n# s1={s1:.17g}\n# T={path.T:.17g}\n# N={path.N}\n")
    buf.write(f"# kind={'loop' if isinstance(path, LoopPath) else 'path'}\n")
    buf.write("i,x,y\n")
    for i, (x, y) in enumerate(path.points()):
        buf.write(f"{i},{x:.17g},{y:.17g}\n")
    text = buf.getvalue()
    if fh is not None:
        if hasattr(fh, "write"):
            fh.write(text)
        else:
            with open(fh, "w") as f:
                f.write(text)
    return text


def path_from_csv(source, Q0: BoundarySpec | None = None, Q1: BoundarySpec | None = None):
    """Inverse of :func:`path_to_csv`.  Missing boundaries become point boundaries."""
    if hasattr(source, "read"):
        text = source.read()
    elif "\n" in str(source):
        text = str(source)
    else:
        with open(source) as f:
            text = f.read()
    header = {}
    rows = []
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            key, _, val = line[1:].strip().partition("=")
            header[key.strip()] = val.strip()
        elif line.startswith("i,"):
            continue
        else:
            _, x, y = line.split(",")
            rows.append((float(x), float(y)))
    X = np.array(rows)
    T = float(header["T"])
    if header.get("kind") == "loop":
        return LoopPath(X[:-1], T)
    Q0 = Q0 or point(X[0])
    Q1 = Q1 or point(X[-1])
    return DiscretePath(Q0, Q1, float(header["s0"]), X[1:-1], float(header["s1"]), T)
