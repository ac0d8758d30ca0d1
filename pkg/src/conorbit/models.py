"""Tonelli Lagrangians on two-dimensional chart surfaces.

Every built-in model has the electromagnetic form

    L(q, v) = 1/2 v^T g(q) v + theta_q(v) - V(q)

with analytic first derivatives of ``g``, ``theta`` and ``V``.  A model may
instead be built from a bare callable ``L(q, v)`` (see :func:`from_lagrangian`);
all derivatives are then taken by central differences.

All evaluation methods are vectorised over leading axes: ``q`` and ``v`` have
shape ``(..., 2)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .errors import DomainError, NumericalFailure, UnsupportedOperation

CHART_KINDS = ("flat_torus", "half_plane", "plane_patch")

FD_STEP = 1e-5
HALF_PLANE_FLOOR = 1e-6


@dataclass(frozen=True)
class PsiProfile:
    """Smooth bump ``psi`` with compact support ``[lo, hi]`` inside (0, 1).

    ``psi(y) = exp(1 - 1/(1 - tau^2))`` where ``tau`` maps ``[lo, hi]``
    affinely onto ``[-1, 1]``; the peak value 1 sits at the midpoint.
    """

    lo: float = 0.1
    hi: float = 0.9

    def __post_init__(self):
        if not (0.0 < self.lo < self.hi < 1.0):
            raise ValueError(f"psi support must satisfy 0 < lo < hi < 1, got [{self.lo}, {self.hi}]")

    @property
    def peak(self) -> float:
        return 0.5 * (self.lo + self.hi)

    @property
    def half_width(self) -> float:
        return 0.5 * (self.hi - self.lo)

    def _tau(self, y):
        y = np.mod(np.asarray(y, dtype=float), 1.0)
        return (y - self.peak) / self.half_width

    def __call__(self, y):
        tau = self._tau(y)
        inside = np.abs(tau) < 1.0
        d = np.where(inside, 1.0 - tau * tau, 1.0)
        return np.where(inside, np.exp(1.0 - 1.0 / d), 0.0)

    def derivative(self, y):
        tau = self._tau(y)
        inside = np.abs(tau) < 1.0
        d = np.where(inside, 1.0 - tau * tau, 1.0)
        val = np.where(inside, np.exp(1.0 - 1.0 / d), 0.0)
        return val * (-2.0 * tau / (d * d)) / self.half_width


class LagrangianSample(NamedTuple):
    q: np.ndarray
    v: np.ndarray
    L: np.ndarray
    dL_dv: np.ndarray
    dL_dq: np.ndarray
    E: np.ndarray


def _eye(q):
    shape = np.shape(q)[:-1]
    return np.broadcast_to(np.eye(2), shape + (2, 2)).copy()


def _inv2(m):
    det = m[..., 0, 0] * m[..., 1, 1] - m[..., 0, 1] * m[..., 1, 0]
    inv = np.empty_like(m)
    inv[..., 0, 0] = m[..., 1, 1] / det
    inv[..., 1, 1] = m[..., 0, 0] / det
    inv[..., 0, 1] = -m[..., 0, 1] / det
    inv[..., 1, 0] = -m[..., 1, 0] / det
    return inv


def _solve2(m, b):
    return np.einsum("...ij,...j->...i", _inv2(m), b)


def _quad(m, a, b=None):
    b = a if b is None else b
    return np.einsum("...i,...ij,...j->...", a, m, b)


@dataclass(frozen=True, eq=False)
class SurfaceModel:
    """Chart, metric, magnetic one-form and potential of a Tonelli Lagrangian.

    ``quadratic_bounds = (a, b)`` certifies ``L(q, v) >= a |v|^2 - b``.
    ``convexity`` is the constant ``a`` with ``d_vv L >= 2a |.|^2``; it is the
    one entering the parabola bounds for the critical values.
    """

    name: str
    chart_kind: str
    metric: Callable
    one_form: Callable
    potential: Callable
    metric_grad: Callable | None = None
    one_form_grad: Callable | None = None
    potential_grad: Callable | None = None
    quadratic_bounds: tuple = (0.25, 0.0)
    convexity: float = 0.5
    region: tuple = (0.0, 1.0, 0.0, 1.0)
    params: dict = field(default_factory=dict)
    psi: PsiProfile | None = None
    lagrangian_fn: Callable | None = None
    magnetic: bool = False
    accel: Callable | None = None

    def __post_init__(self):
        if self.chart_kind not in CHART_KINDS:
            raise ValueError(f"unknown chart kind {self.chart_kind!r}")

    # ------------------------------------------------------------------ chart
    @property
    def is_torus(self) -> bool:
        return self.chart_kind == "flat_torus"

    @property
    def is_generic(self) -> bool:
        return self.lagrangian_fn is not None

    @property
    def quadratic_in_velocity(self) -> bool:
        return self.lagrangian_fn is None

    def check_domain(self, q, what: str = "point"):
        q = np.asarray(q, dtype=float)
        if self.chart_kind == "half_plane":
            bad = ~(q[..., 1] > 0.0)
        elif self.chart_kind == "plane_patch" and self.params.get("strict_region", False):
            x0, x1, y0, y1 = self.region
            bad = (q[..., 0] < x0) | (q[..., 0] > x1) | (q[..., 1] < y0) | (q[..., 1] > y1)
        else:
            bad = ~np.isfinite(q).all(axis=-1)
        if np.any(bad):
            flat = np.flatnonzero(np.atleast_1d(bad))
            idx = int(flat[0])
            pt = np.atleast_2d(q.reshape(-1, 2))[idx] if q.ndim > 1 else q
            raise DomainError(f"{what} {idx} at {tuple(np.round(pt, 12))} lies outside the "
                              f"{self.chart_kind} chart", index=idx, point=pt)
        return q

    def displacement(self, a, b):
        """Chart displacement from ``a`` to ``b`` (minimal image on the torus)."""
        d = np.asarray(b, dtype=float) - np.asarray(a, dtype=float)
        if self.is_torus:
            d = d - np.round(d)
        return d

    # ------------------------------------------------------------- geometry
    def metric_inv(self, q):
        return _inv2(self.metric(q))

    def norm(self, q, v):
        return np.sqrt(np.maximum(_quad(self.metric(q), v), 0.0))

    def dual_norm(self, q, p):
        return np.sqrt(np.maximum(_quad(self.metric_inv(q), p), 0.0))

    def _fd_q(self, fn, q):
        q = np.asarray(q, dtype=float)
        out = []
        for k in range(2):
            e = np.zeros(2)
            e[k] = FD_STEP
            out.append((fn(q + e) - fn(q - e)) / (2 * FD_STEP))
        return np.stack(out, axis=-1)

    def _metric_grad(self, q):
        if self.metric_grad is not None:
            return self.metric_grad(q)
        return self._fd_q(self.metric, q)

    def _one_form_grad(self, q):
        if self.one_form_grad is not None:
            return self.one_form_grad(q)
        return self._fd_q(self.one_form, q)

    def _potential_grad(self, q):
        if self.potential_grad is not None:
            return self.potential_grad(q)
        return self._fd_q(self.potential, q)

    # ----------------------------------------------------------- lagrangian
    def lagrangian(self, q, v):
        q = np.asarray(q, dtype=float)
        v = np.asarray(v, dtype=float)
        if self.lagrangian_fn is not None:
            return np.asarray(self.lagrangian_fn(q, v), dtype=float)
        return 0.5 * _quad(self.metric(q), v) + np.sum(self.one_form(q) * v, axis=-1) - self.potential(q)

    def dL_dv(self, q, v):
        q = np.asarray(q, dtype=float)
        v = np.asarray(v, dtype=float)
        if self.lagrangian_fn is not None:
            return self._fd_v(q, v)
        return np.einsum("...ij,...j->...i", self.metric(q), v) + self.one_form(q)

    def dL_dq(self, q, v):
        q = np.asarray(q, dtype=float)
        v = np.asarray(v, dtype=float)
        if self.lagrangian_fn is not None:
            return self._fd_q(lambda qq: self.lagrangian(qq, v), q)
        dg = self._metric_grad(q)
        dth = self._one_form_grad(q)
        return (0.5 * np.einsum("...a,...abk,...b->...k", v, dg, v)
                + np.einsum("...a,...ak->...k", v, dth)
                - self._potential_grad(q))

    def d_vvL(self, q, v):
        q = np.asarray(q, dtype=float)
        v = np.asarray(v, dtype=float)
        if self.lagrangian_fn is not None:
            cols = []
            for k in range(2):
                e = np.zeros(2)
                e[k] = FD_STEP
                cols.append((self._fd_v(q, v + e) - self._fd_v(q, v - e)) / (2 * FD_STEP))
            h = np.stack(cols, axis=-1)
            return 0.5 * (h + np.swapaxes(h, -1, -2))
        return np.broadcast_to(self.metric(q), np.broadcast_shapes(q.shape, v.shape)[:-1] + (2, 2))

    def _fd_v(self, q, v):
        out = []
        for k in range(2):
            e = np.zeros(2)
            e[k] = FD_STEP
            out.append((self.lagrangian(q, v + e) - self.lagrangian(q, v - e)) / (2 * FD_STEP))
        return np.stack(out, axis=-1)

    def energy(self, q, v):
        v = np.asarray(v, dtype=float)
        if self.lagrangian_fn is not None:
            return np.sum(self.dL_dv(q, v) * v, axis=-1) - self.lagrangian(q, v)
        return 0.5 * _quad(self.metric(q), v) + self.potential(q)

    def zero_section_energy(self, q):
        q = np.asarray(q, dtype=float)
        if self.lagrangian_fn is not None:
            return -self.lagrangian(q, np.zeros_like(q))
        return np.asarray(self.potential(q), dtype=float) * np.ones(q.shape[:-1])

    def hamiltonian(self, q, p):
        """Vectorised analytic Hamiltonian (quadratic models only)."""
        if self.lagrangian_fn is not None:
            raise UnsupportedOperation("analytic Hamiltonian needs a quadratic-in-velocity model")
        w = np.asarray(p, dtype=float) - self.one_form(q)
        return 0.5 * _quad(self.metric_inv(q), w) + self.potential(q)

    def velocity_from_momentum(self, q, p):
        """Inverse Legendre map ``p -> v`` with ``d_vL(q, v) = p``."""
        if self.lagrangian_fn is not None:
            return _newton_legendre(self, np.asarray(q, float), np.asarray(p, float))[0]
        return _solve2(self.metric(q), np.asarray(p, dtype=float) - self.one_form(q))

    def el_acceleration(self, q, v):
        """Solve the Euler-Lagrange equation for the acceleration."""
        q = np.asarray(q, dtype=float)
        v = np.asarray(v, dtype=float)
        if self.accel is not None:
            return self.accel(q, v)
        return self._generic_acceleration(q, v)

    def _generic_acceleration(self, q, v):
        if self.lagrangian_fn is not None:
            cols = []
            for k in range(2):
                e = np.zeros(2)
                e[k] = FD_STEP
                cols.append((self._fd_v(q + e, v) - self._fd_v(q - e, v)) / (2 * FD_STEP))
            mixed = np.stack(cols, axis=-1)  # d^2L / dv_i dq_k
            rhs = self.dL_dq(q, v) - np.einsum("...ik,...k->...i", mixed, v)
            return _solve2(self.d_vvL(q, v), rhs)
        g = self.metric(q)
        dg = self._metric_grad(q)
        dth = self._one_form_grad(q)
        rhs = (0.5 * np.einsum("...a,...abi,...b->...i", v, dg, v)
               + np.einsum("...a,...ai->...i", v, dth)
               - self._potential_grad(q)
               - np.einsum("...k,...ijk,...j->...i", v, dg, v)
               - np.einsum("...k,...ik->...i", v, dth))
        return _solve2(g, rhs)

    def sample_points(self, n: int, rng: np.random.Generator):
        x0, x1, y0, y1 = self.region
        return np.column_stack([rng.uniform(x0, x1, n), rng.uniform(y0, y1, n)])


# ---------------------------------------------------------------------------
# module-level operations
# ---------------------------------------------------------------------------

def eval_lagrangian(model: SurfaceModel, q, v) -> LagrangianSample:
    """Evaluate ``L`` with its first derivatives and the energy at ``(q, v)``."""
    q = model.check_domain(np.asarray(q, dtype=float))
    v = np.asarray(v, dtype=float)
    L = model.lagrangian(q, v)
    p = model.dL_dv(q, v)
    E = np.sum(p * v, axis=-1) - L
    return LagrangianSample(q, v, L, p, model.dL_dq(q, v), E)


def theta_at(model: SurfaceModel, q):
    """Return ``(theta_q, |theta_q|)`` where ``theta_q = d_vL(q, 0)``."""
    q = model.check_domain(np.asarray(q, dtype=float))
    theta = model.dL_dv(q, np.zeros_like(q))
    return theta, model.dual_norm(q, theta)


def _newton_legendre(model, q, p, tol=1e-10, max_iter=100):
    v = np.zeros(2)
    obj = lambda vv: float(np.dot(p, vv) - model.lagrangian(q, vv))
    for it in range(max_iter):
        r = p - model.dL_dv(q, v)
        if np.linalg.norm(r) <= tol:
            return v, it
        step = np.linalg.solve(model.d_vvL(q, v), r)
        f0 = obj(v)
        t = 1.0
        while obj(v + t * step) < f0 - 1e-14 * (1 + abs(f0)) and t > 1e-8:
            t *= 0.5
        v = v + t * step
    raise NumericalFailure(f"Legendre inversion did not converge at q={q} after {max_iter} iterations")


def fenchel_hamiltonian(model: SurfaceModel, q, p, method: str = "auto") -> float:
    """``H(q, p) = max_v <p, v> - L(q, v)``.

    ``method="analytic"`` uses the closed form for quadratic models,
    ``"newton"`` solves the concave inner problem by damped Newton iteration.
    """
    q = model.check_domain(np.asarray(q, dtype=float))
    p = np.asarray(p, dtype=float)
    if method == "auto":
        method = "newton" if model.is_generic else "analytic"
    if method == "analytic":
        return float(model.hamiltonian(q, p))
    if method != "newton":
        raise ValueError(f"unknown method {method!r}")
    v, _ = _newton_legendre(model, q, p)
    return float(np.dot(p, v) - model.lagrangian(q, v))


def certify_quadratic_bounds(model: SurfaceModel, n: int = 10_000, v_max: float = 10.0,
                             seed: int = 0, bounds: tuple | None = None) -> tuple:
    """Check ``L >= a|v|^2 - b`` on random samples of the working region.

    Raises :class:`NumericalFailure` with the worst sample when violated.
    """
    a, b = bounds if bounds is not None else model.quadratic_bounds
    rng = np.random.default_rng(seed)
    q = model.sample_points(n, rng)
    ang = rng.uniform(0, 2 * np.pi, n)
    speed = v_max * np.sqrt(rng.uniform(0, 1, n))
    u = np.column_stack([np.cos(ang), np.sin(ang)])
    # scale to metric speed
    u = u / model.norm(q, u)[:, None]
    v = u * speed[:, None]
    slack = model.lagrangian(q, v) - (a * _quad(model.metric(q), v) - b)
    worst = int(np.argmin(slack))
    if slack[worst] < -1e-12:
        raise NumericalFailure(
            f"quadratic bound (a={a}, b={b}) violated for {model.name} at q={q[worst]}, "
            f"v={v[worst]} by {-slack[worst]:.3e}")
    return a, b


def _fd4(fn, q, step=1e-4):
    """Fourth-order central differences, robust for narrow bump profiles."""
    out = []
    for k in range(2):
        e = np.zeros(2)
        e[k] = step
        out.append((-fn(q + 2 * e) + 8 * fn(q + e) - 8 * fn(q - e) + fn(q - 2 * e)) / (12 * step))
    return np.stack(out, axis=-1)


def crosscheck_derivatives(model: SurfaceModel, n: int = 8, seed: int = 1, rtol: float = 1e-6):
    """Compare analytic derivatives against finite differences at construction time."""
    if model.is_generic:
        return
    rng = np.random.default_rng(seed)
    q = model.sample_points(n, rng)
    pairs = [(model.metric, model.metric_grad), (model.one_form, model.one_form_grad),
             (model.potential, model.potential_grad)]
    for fn, grad in pairs:
        if grad is None:
            continue
        exact = grad(q)
        approx = _fd4(fn, q)
        scale = 1.0 + np.max(np.abs(exact))
        err = np.max(np.abs(exact - approx)) / scale
        if err > rtol:
            raise NumericalFailure(f"{model.name}: analytic derivative mismatch {err:.2e}")
    if model.accel is not None:
        v = rng.normal(size=q.shape)
        exact = model.accel(q, v)
        ref = model._generic_acceleration(q, v)
        err = np.max(np.abs(exact - ref)) / (1.0 + np.max(np.abs(ref)))
        if err > 1e-12:
            raise NumericalFailure(f"{model.name}: closed-form acceleration mismatch {err:.2e}")


# ---------------------------------------------------------------------------
# built-in models
# ---------------------------------------------------------------------------

def torus_magnetic(psi_lo: float = 0.1, psi_hi: float = 0.9, strength: float = 1.0) -> SurfaceModel:
    """Flat torus with ``L = |v|^2/2 + strength * psi(y) v_x``."""
    psi = PsiProfile(psi_lo, psi_hi)

    def one_form(q):
        q = np.asarray(q, dtype=float)
        out = np.zeros_like(q)
        out[..., 0] = strength * psi(q[..., 1])
        return out

    def one_form_grad(q):
        q = np.asarray(q, dtype=float)
        out = np.zeros(q.shape + (2,))
        out[..., 0, 1] = strength * psi.derivative(q[..., 1])
        return out

    def accel(q, v):
        b = strength * psi.derivative(q[..., 1])
        return np.stack([-b * v[..., 1], b * v[..., 0]], axis=-1)

    model = SurfaceModel(
        name="torus_magnetic", accel=accel, chart_kind="flat_torus",
        metric=_eye, metric_grad=lambda q: np.zeros(np.shape(q)[:-1] + (2, 2, 2)),
        one_form=one_form, one_form_grad=one_form_grad,
        potential=lambda q: np.zeros(np.shape(q)[:-1]),
        potential_grad=lambda q: np.zeros(np.shape(q)),
        quadratic_bounds=(0.25, strength ** 2), convexity=0.5,
        params={"psi_lo": psi_lo, "psi_hi": psi_hi, "strength": strength},
        psi=psi, magnetic=True)
    crosscheck_derivatives(model)
    return model


def torus_mechanical(amplitude: float = 0.7) -> SurfaceModel:
    """Flat torus with ``L = |v|^2/2 - amplitude sin^2(pi x) sin^2(pi y)``.

    ``amplitude=0`` gives the plain geodesic flow.
    """
    A = float(amplitude)

    def potential(q):
        q = np.asarray(q, dtype=float)
        return A * np.sin(np.pi * q[..., 0]) ** 2 * np.sin(np.pi * q[..., 1]) ** 2

    def potential_grad(q):
        q = np.asarray(q, dtype=float)
        sx2 = np.sin(np.pi * q[..., 0]) ** 2
        sy2 = np.sin(np.pi * q[..., 1]) ** 2
        return np.stack([A * np.pi * np.sin(2 * np.pi * q[..., 0]) * sy2,
                         A * np.pi * np.sin(2 * np.pi * q[..., 1]) * sx2], axis=-1)

    model = SurfaceModel(
        name="torus_mechanical", accel=lambda q, v: -potential_grad(q), chart_kind="flat_torus",
        metric=_eye, metric_grad=lambda q: np.zeros(np.shape(q)[:-1] + (2, 2, 2)),
        one_form=lambda q: np.zeros(np.shape(q)),
        one_form_grad=lambda q: np.zeros(np.shape(q) + (2,)),
        potential=potential, potential_grad=potential_grad,
        quadratic_bounds=(0.5, max(A, 0.0)), convexity=0.5,
        params={"amplitude": A}, magnetic=(A == 0.0))
    crosscheck_derivatives(model)
    return model


def half_plane_horocycle(strength: float = 1.0, region: tuple = (-4.0, 4.0, 0.05, 8.0)) -> SurfaceModel:
    """Hyperbolic half-plane, ``g = (dx^2 + dy^2)/y^2``, ``theta = strength dx/y``."""
    s = float(strength)

    def metric(q):
        q = np.asarray(q, dtype=float)
        return _eye(q) / (q[..., 1] ** 2)[..., None, None]

    def metric_grad(q):
        q = np.asarray(q, dtype=float)
        out = np.zeros(q.shape[:-1] + (2, 2, 2))
        d = -2.0 / q[..., 1] ** 3
        out[..., 0, 0, 1] = d
        out[..., 1, 1, 1] = d
        return out

    def one_form(q):
        q = np.asarray(q, dtype=float)
        out = np.zeros_like(q)
        out[..., 0] = s / q[..., 1]
        return out

    def one_form_grad(q):
        q = np.asarray(q, dtype=float)
        out = np.zeros(q.shape + (2,))
        out[..., 0, 1] = -s / q[..., 1] ** 2
        return out

    def accel(q, v):
        y = q[..., 1]
        vx, vy = v[..., 0], v[..., 1]
        return np.stack([2 * vx * vy / y + s * vy, (vy * vy - vx * vx) / y - s * vx], axis=-1)

    model = SurfaceModel(
        name="half_plane_horocycle", accel=accel, chart_kind="half_plane",
        metric=metric, metric_grad=metric_grad, one_form=one_form, one_form_grad=one_form_grad,
        potential=lambda q: np.zeros(np.shape(q)[:-1]),
        potential_grad=lambda q: np.zeros(np.shape(q)),
        quadratic_bounds=(0.25, s ** 2), convexity=0.5, region=tuple(region),
        params={"strength": s}, magnetic=True)
    crosscheck_derivatives(model)
    return model


def plane_patch_custom(B: float = 1.0, omega: float = 0.0, center=(0.5, 0.5),
                       region: tuple = (0.0, 1.0, 0.0, 1.0)) -> SurfaceModel:
    """Euclidean rectangle with constant field ``B`` (symmetric gauge) and a
    harmonic potential ``V = omega^2 |q - center|^2 / 2``."""
    cx, cy = map(float, center)
    B = float(B)
    w2 = float(omega) ** 2

    def one_form(q):
        q = np.asarray(q, dtype=float)
        return 0.5 * B * np.stack([-(q[..., 1] - cy), q[..., 0] - cx], axis=-1)

    def one_form_grad(q):
        q = np.asarray(q, dtype=float)
        out = np.zeros(q.shape + (2,))
        out[..., 0, 1] = -0.5 * B
        out[..., 1, 0] = 0.5 * B
        return out

    def potential(q):
        q = np.asarray(q, dtype=float)
        return 0.5 * w2 * ((q[..., 0] - cx) ** 2 + (q[..., 1] - cy) ** 2)

    def potential_grad(q):
        q = np.asarray(q, dtype=float)
        return w2 * np.stack([q[..., 0] - cx, q[..., 1] - cy], axis=-1)

    x0, x1, y0, y1 = region
    corners = np.array([[x0, y0], [x0, y1], [x1, y0], [x1, y1]])
    theta_max2 = float(np.max(np.sum(one_form(corners) ** 2, axis=-1)))
    v_max = float(np.max(potential(corners)))
    def accel(q, v):
        return np.stack([B * v[..., 1], -B * v[..., 0]], axis=-1) - potential_grad(q)

    model = SurfaceModel(
        name="plane_patch_custom", accel=accel, chart_kind="plane_patch",
        metric=_eye, metric_grad=lambda q: np.zeros(np.shape(q)[:-1] + (2, 2, 2)),
        one_form=one_form, one_form_grad=one_form_grad,
        potential=potential, potential_grad=potential_grad,
        quadratic_bounds=(0.25, theta_max2 + v_max), convexity=0.5, region=tuple(region),
        params={"B": B, "omega": float(omega), "center": (cx, cy)}, magnetic=(w2 == 0.0))
    crosscheck_derivatives(model)
    return model


def from_lagrangian(fn: Callable, name: str = "custom", chart_kind: str = "plane_patch",
                    region: tuple = (0.0, 1.0, 0.0, 1.0), a: float = 0.25, b: float | None = None,
                    convexity: float = 0.5, v_max: float = 10.0, seed: int = 0) -> SurfaceModel:
    """Wrap a bare ``L(q, v)``; derivatives come from central differences.

    When ``b`` is omitted it is estimated from 10^4 samples with a 10% margin.
    The geometric fields use the Euclidean metric; ``theta`` and ``V`` are read
    off ``L`` at zero velocity.
    """
    def one_form(q):
        q = np.asarray(q, dtype=float)
        out = []
        for k in range(2):
            e = np.zeros(2)
            e[k] = FD_STEP
            out.append((fn(q, np.zeros_like(q) + e) - fn(q, np.zeros_like(q) - e)) / (2 * FD_STEP))
        return np.stack(out, axis=-1)

    model = SurfaceModel(name=name, chart_kind=chart_kind, metric=_eye, one_form=one_form,
                         potential=lambda q: -np.asarray(fn(np.asarray(q, float), np.zeros_like(np.asarray(q, float)))),
                         region=tuple(region), lagrangian_fn=fn, convexity=convexity,
                         quadratic_bounds=(a, 0.0 if b is None else b))
    if b is None:
        rng = np.random.default_rng(seed)
        q = model.sample_points(10_000, rng)
        ang = rng.uniform(0, 2 * np.pi, len(q))
        v = np.column_stack([np.cos(ang), np.sin(ang)]) * (v_max * rng.uniform(0, 1, len(q)))[:, None]
        need = float(np.max(a * np.sum(v * v, axis=-1) - model.lagrangian(q, v)))
        b = max(need, 0.0) * 1.1 + 1e-9
        object.__setattr__(model, "quadratic_bounds", (a, b))
    return model


MODEL_CATALOG = {
    "torus_magnetic": (torus_magnetic, "flat torus, theta = strength*psi(y) dx (params psi_lo, psi_hi, strength)"),
    "torus_mechanical": (torus_mechanical, "flat torus, V = amplitude sin^2(pi x) sin^2(pi y) (param amplitude)"),
    "half_plane_horocycle": (half_plane_horocycle, "hyperbolic half-plane, theta = strength dx/y (param strength)"),
    "plane_patch_custom": (plane_patch_custom, "Euclidean patch, constant field B and harmonic potential omega"),
}


def build_model(model_id: str, **params) -> SurfaceModel:
    try:
        builder = MODEL_CATALOG[model_id][0]
    except KeyError:
        raise KeyError(f"unknown model id {model_id!r}; known: {sorted(MODEL_CATALOG)}") from None
    return builder(**params)


def list_models():
    return [(k, v[1]) for k, v in MODEL_CATALOG.items()]
