"""Critical energy values: obstruction level, e0, Mane-type brackets, k_N, k_Omega.

Lower ends of brackets are certified by concrete loops or paths with negative
action; upper ends by grid functions ``u`` with a small ``sup H(q, du)`` or,
for ``k_N`` and ``k0``, by the parabola bound ``e0 + |theta|^2 / (4a)``.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize, minimize_scalar

from .errors import BracketError, ChainViolation, DomainError, UnsupportedOperation
from .models import SurfaceModel
from .pathspace import (BoundarySpec, DiscretePath, LoopPath, _wrap, classify_component, discrete_action,
                        lattice_basis, loop_from_polyline, loop_winding, optimal_time, path_to_csv)

WITNESS_SHIFT = 1e-9


# ---------------------------------------------------------------------------
# value types
# ---------------------------------------------------------------------------

@dataclass
class CriticalBracket:
    name: str
    lower: float
    upper: float
    lower_witness: object = None
    upper_witness: object = None
    method: str = ""
    soft_upper: float | None = None
    lower_certified: bool = True
    stalled: bool = False
    message: str = ""

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def contains(self, value: float, tol: float = 1e-9) -> bool:
        return self.lower - tol <= value <= self.upper + tol

    def to_row(self, lower_file: str = "", upper_file: str = "") -> dict:
        return {"name": self.name, "lower": f"{self.lower:.17g}", "upper": f"{self.upper:.17g}",
                "lower_witness_file": lower_file, "upper_witness_file": upper_file, "method": self.method}


def brackets_to_csv(brackets, fh=None, witness_dir=None) -> str:
    """Bracket table; witnesses are written next to it when ``witness_dir`` is given."""
    import os
    lines = ["name,lower,upper,lower_witness_file,upper_witness_file,method"]
    for b in brackets:
        lf = uf = ""
        if witness_dir is not None:
            if isinstance(b.lower_witness, (LoopPath, DiscretePath)):
                lf = f"{b.name}_lower.csv"
                path_to_csv(b.lower_witness, os.path.join(witness_dir, lf))
            if isinstance(b.upper_witness, HamiltonianBound):
                uf = f"{b.name}_upper.csv"
                b.upper_witness.to_csv(os.path.join(witness_dir, uf))
        row = b.to_row(lf, uf)
        lines.append(",".join(row.values()))
    text = "\n".join(lines) + "\n"
    if fh is not None:
        with open(fh, "w") as f:
            f.write(text)
    return text


@dataclass
class LatticeClass:
    """Sublattice of Z^2 (the image of the boundary fundamental groups) and the
    loop classes probed inside it."""

    generators: tuple = ()
    probe_classes: list = field(default_factory=list)

    def __post_init__(self):
        self.generators = tuple(tuple(int(x) for x in g) for g in lattice_basis(self.generators))
        if not self.probe_classes:
            self.probe_classes = self.default_probes()

    @classmethod
    def full(cls):
        return cls(((1, 0), (0, 1)))

    @classmethod
    def trivial(cls):
        return cls(())

    @classmethod
    def from_boundaries(cls, Q0: BoundarySpec, Q1: BoundarySpec):
        return cls(tuple(Q0.generators) + tuple(Q1.generators))

    @property
    def rank(self) -> int:
        return len(self.generators)

    def default_probes(self):
        out = [(0, 0)]
        if self.rank == 1:
            g = np.array(self.generators[0])
            for m in (1, -1, 2, -2):
                out.append(tuple(int(x) for x in m * g))
        elif self.rank == 2:
            a, b = (np.array(g) for g in self.generators)
            for i in (-1, 0, 1):
                for j in (-1, 0, 1):
                    if i or j:
                        out.append(tuple(int(x) for x in i * a + j * b))
        return out

    def annihilator(self) -> np.ndarray:
        """Directions ``l`` with ``l . g = 0`` for every generator (linear parts on the cover)."""
        if self.rank == 0:
            return np.eye(2)
        if self.rank == 2:
            return np.zeros((0, 2))
        p, q = self.generators[0]
        d = np.array([-q, p], dtype=float)
        return (d / np.linalg.norm(d))[None]


def _as_lattice(which, Q0=None, Q1=None) -> LatticeClass:
    if isinstance(which, LatticeClass):
        return which
    if which == "c":
        return LatticeClass.full()
    if which in ("cu_c0", "cu", "c0"):
        return LatticeClass.trivial()
    if which == "c_pair":
        if Q0 is None or Q1 is None:
            raise ValueError("c_pair needs Q0 and Q1")
        return LatticeClass.from_boundaries(Q0, Q1)
    raise ValueError(f"unknown critical value {which!r}")


# ---------------------------------------------------------------------------
# obstruction level and zero-section energy
# ---------------------------------------------------------------------------

def _conormal_min_H(model: SurfaceModel, q, tau):
    """``min H`` over covectors at ``q`` annihilating ``tau``."""
    if model.quadratic_in_velocity:
        theta = model.one_form(q)
        ttau = np.sum(theta * tau, axis=-1)
        nt2 = np.einsum("...i,...ij,...j->...", tau, model.metric(q), tau)
        return 0.5 * ttau ** 2 / nt2 + model.potential(q)
    from .models import fenchel_hamiltonian
    out = []
    for qi, ti in zip(np.atleast_2d(q), np.atleast_2d(tau)):
        n = np.array([-ti[1], ti[0]])
        res = minimize_scalar(lambda lam: fenchel_hamiltonian(model, qi, lam * n), bracket=(-1.0, 1.0))
        out.append(res.fun)
    return np.array(out)


def _boundary_min(model, Q: BoundarySpec, samples: int):
    if Q.is_point:
        q = Q.point
        if model.quadratic_in_velocity:
            return float(model.potential(q))
        from .models import fenchel_hamiltonian
        res = minimize(lambda p: fenchel_hamiltonian(model, q, p), np.zeros(2), method="Nelder-Mead",
                       options={"xatol": 1e-10, "fatol": 1e-14})
        return float(res.fun)
    s = np.linspace(0.0, 1.0, samples, endpoint=False)
    f = lambda ss: _conormal_min_H(model, Q.at(ss), Q.tangent_at(ss))
    vals = np.asarray(f(s), dtype=float)
    i = int(np.argmin(vals))
    res = minimize_scalar(lambda t: float(f(np.array([t]))[0]), bounds=(s[i] - 1.0 / samples, s[i] + 1.0 / samples),
                          method="bounded", options={"xatol": 1e-12})
    return float(min(vals[i], res.fun))


def k_obstruction(model: SurfaceModel, Q0: BoundarySpec, Q1: BoundarySpec, samples: int = 2048) -> float:
    """Least energy whose level set meets both conormal bundles.

    For quadratic models the minimum of ``H`` on the conormal line at ``q`` is
    ``(theta(tau))^2 / (2 |tau|^2) + V(q)``; a point boundary contributes ``E(q, 0)``.
    """
    return max(_boundary_min(model, Q0, samples), _boundary_min(model, Q1, samples))


def _grid(model: SurfaceModel, n: int):
    x0, x1, y0, y1 = (0.0, 1.0, 0.0, 1.0) if model.is_torus else model.region
    xs = x0 + (x1 - x0) * np.arange(n) / n if model.is_torus else np.linspace(x0, x1, n)
    ys = y0 + (y1 - y0) * np.arange(n) / n if model.is_torus else np.linspace(y0, y1, n)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    return np.stack([X, Y], axis=-1)


def _grid_max(model, fn, n, refine=True):
    Q = _grid(model, n)
    vals = np.asarray(fn(Q), dtype=float)
    i = np.unravel_index(int(np.argmax(vals)), vals.shape)
    best = float(vals[i])
    if refine:
        x0 = Q[i]
        res = minimize(lambda q: -float(fn(np.asarray(q))), x0, method="Nelder-Mead",
                       options={"xatol": 1e-12, "fatol": 1e-15, "maxiter": 400})
        if model.chart_kind != "half_plane" or res.x[1] > 0:
            best = max(best, -float(res.fun))
    return best


def e0(model: SurfaceModel, n: int = 512) -> float:
    """Maximum of ``E(q, 0)`` over the torus or the model's working region."""
    if model.magnetic and model.quadratic_in_velocity:
        return float(np.max(model.zero_section_energy(_grid(model, 16))))
    return _grid_max(model, model.zero_section_energy, n)


def theta_sup(model: SurfaceModel, n: int = 512) -> float:
    """``sup_q |theta_q|`` (dual norm)."""
    return _grid_max(model, lambda q: model.dual_norm(q, model.one_form(q)), n)


def k0_cap(model: SurfaceModel, n: int = 512) -> float:
    """Parabola bound ``e0 + |theta|_inf^2 / (4a)`` above which every path has nonnegative action."""
    return e0(model, n) + theta_sup(model, n) ** 2 / (4.0 * model.convexity)


# ---------------------------------------------------------------------------
# loop probes (lower certificates)
# ---------------------------------------------------------------------------

@dataclass
class LoopProbeResult:
    cls: object
    k: float
    action: float
    loop: LoopPath | None
    T: float
    evaluated: int
    source: str = ""

    @property
    def negative(self) -> bool:
        return self.loop is not None and self.action < 0


def _reduced(model, loop, k):
    T, A = optimal_time(model, loop, k)
    return T, A


def _row_integrals(model, n=256, axis=0):
    """``R(c) = int theta_axis`` along the closed line through ``c`` in direction ``axis``."""
    t = np.arange(n) / n
    C, S = np.meshgrid(t, t, indexing="ij")
    if axis == 0:
        Q = np.stack([S, C], axis=-1)
    else:
        Q = np.stack([C, S], axis=-1)
    th = model.one_form(Q)[..., axis]
    return t, th.mean(axis=1)


def _rectangle_loop(axis, c_hi, c_lo, n, per_unit=8, x0=0.0):
    """Runs ``n`` times against ``axis`` on line ``c_hi`` and ``n`` times along it on ``c_lo``."""
    d = float(_wrap(c_lo - c_hi))
    if axis == 0:
        W = [(x0 + n, c_hi), (x0, c_hi), (x0, c_hi + d), (x0 + n, c_hi + d), (x0 + n, c_hi)]
    else:
        W = [(c_hi, x0 + n), (c_hi, x0), (c_hi + d, x0), (c_hi + d, x0 + n), (c_hi, x0 + n)]
    length = 2 * n + 2 * abs(d)
    N = max(int(round(length * per_unit)), 8)
    return loop_from_polyline(W, N, 1.0)


def _straight_loops(w, offsets, N=32):
    w = np.asarray(w, dtype=float)
    perp = np.array([-w[1], w[0]]) / np.linalg.norm(w)
    out = []
    for o in offsets:
        start = o * perp
        out.append(loop_from_polyline([start, start + w], max(N, int(N * np.linalg.norm(w))), 1.0))
    return out


def _random_loops(w, count, rng, N=64):
    t = np.arange(N) / N
    out = []
    w = np.asarray(w, dtype=float)
    for _ in range(count):
        c = rng.uniform(0, 1, 2)
        X = c + np.outer(t, w)
        for m in range(1, 4):
            a = rng.normal(scale=0.15 / m, size=2)
            b = rng.normal(scale=0.15 / m, size=2)
            X = X + np.outer(np.cos(2 * np.pi * m * t), a) + np.outer(np.sin(2 * np.pi * m * t), b) \
                - a[None] * (m == 0)
        out.append(LoopPath(X, 1.0))
    return out


def loop_seeds(model: SurfaceModel, cls, k: float, multistart: int = 32, seed: int = 0,
               max_n: int = 64):
    """Candidate loops in the class ``cls`` (``"contractible"`` or a winding vector)."""
    w = (0, 0) if cls in ("contractible", None) else tuple(int(x) for x in cls)
    rng = np.random.default_rng(seed)
    seeds = []
    if w == (0, 0):
        for axis in (0, 1):
            c, R = _row_integrals(model, axis=axis)
            if np.ptp(R) <= 1e-14:
                continue
            hi, lo = c[int(np.argmax(R))], c[int(np.argmin(R))]
            n = 1
            while n <= max_n:
                seeds.append(("rectangle", _rectangle_loop(axis, hi, lo, n)))
                n *= 2
        q_star = _grid(model, 64).reshape(-1, 2)[int(np.argmax(model.zero_section_energy(_grid(model, 64)).ravel()))]
        seeds.append(("constant", LoopPath(np.repeat(q_star[None], 8, axis=0), 1.0)))
    else:
        seeds += [("straight", lp) for lp in _straight_loops(w, np.arange(64) / 64)]
    seeds += [("random", lp) for lp in _random_loops(w, multistart, rng)]
    return seeds


def loop_probe(model: SurfaceModel, cls, k: float, multistart: int = 32, seed: int = 0, descents: int = 0,
               max_n: int = 64) -> LoopProbeResult:
    """Lowest reduced loop action found in ``cls`` at energy ``k``.

    A negative value certifies ``k`` below the matching critical value.  With
    ``descents > 0`` the best seeds are polished by :func:`minimize_action`.
    """
    if not model.is_torus:
        raise UnsupportedOperation("loop probes need the flat torus")
    if isinstance(cls, LatticeClass):
        best = None
        total = 0
        for c in cls.probe_classes:
            r = loop_probe(model, c, k, multistart, seed, descents, max_n)
            total += r.evaluated
            if best is None or r.action < best.action:
                best = r
        best.evaluated = total
        best.cls = cls
        return best
    seeds = loop_seeds(model, cls, k, multistart, seed, max_n)
    scored = []
    for src, lp in seeds:
        T, A = _reduced(model, lp, k)
        if src == "constant":
            T, A = 1.0, float(discrete_action(model, lp, k).A)
        scored.append((A, T, src, lp))
    scored.sort(key=lambda r: r[0])
    A, T, src, lp = scored[0]
    if descents:
        from .solvers import MinimizeConfig, minimize_action
        w = loop_winding(model, lp)
        cfg = MinimizeConfig(N=max(lp.N, 16), max_iters=300, verify=False, check_lower_bound=False)
        for A0, T0, src0, lp0 in scored[:descents]:
            if not np.isfinite(T0) or src0 == "constant":
                continue
            rep = minimize_action(model, None, None, k, LoopPath(lp0.nodes.copy(), T0), cfg, verify=False)
            if rep.path is None or not np.isfinite(rep.action):
                continue
            if loop_winding(model, rep.path) != loop_winding(model, lp0):
                continue
            if rep.action < A:
                A, T, src, lp = rep.action, rep.T, "descent", rep.path
        _ = w
    if np.isfinite(T) and T > 0 and lp is not None:
        lp = LoopPath(lp.nodes.copy(), float(T))
    return LoopProbeResult(cls, float(k), float(A), lp, float(T), len(seeds), src)


# ---------------------------------------------------------------------------
# Hamiltonian upper bounds
# ---------------------------------------------------------------------------

@dataclass
class HamiltonianBound:
    value: float
    grid_max: float
    fine_max: float
    n: int
    u: np.ndarray
    linear: np.ndarray
    stalled: bool = False

    @property
    def fine_ok(self) -> bool:
        return self.fine_max <= 1.05 * self.grid_max + 1e-12

    def to_csv(self, fh=None) -> str:
        buf = io.StringIO()
        buf.write(f"# linear={self.linear[0]:.17g},{self.linear[1]:.17g}\n# n={self.n}\n")
        buf.write(f"# grid_max={self.grid_max:.17g}\n# fine_max={self.fine_max:.17g}\n")
        buf.write("i,j,u\n")
        for i in range(self.n):
            for j in range(self.n):
                buf.write(f"{i},{j},{self.u[i, j]:.17g}\n")
        text = buf.getvalue()
        if fh is not None:
            with open(fh, "w") as f:
                f.write(text)
        return text


def _spectral_ops(n):
    k = 2 * np.pi * np.fft.fftfreq(n, d=1.0 / n)
    if n % 2 == 0:
        k[n // 2] = 0.0
    kx = k[:, None]
    ky = k[None, :]

    def grad(u):
        U = np.fft.fft2(u)
        return np.real(np.fft.ifft2(1j * kx * U)), np.real(np.fft.ifft2(1j * ky * U))

    def div_adj(a, b):
        # adjoint of grad: -(d_x a + d_y b)
        A = np.fft.fft2(a)
        B = np.fft.fft2(b)
        return -np.real(np.fft.ifft2(1j * kx * A + 1j * ky * B))

    return grad, div_adj


def _fourier_upsample(u, factor):
    n = u.shape[0]
    m = n * factor
    U = np.fft.fftshift(np.fft.fft2(u))
    P = np.zeros((m, m), dtype=complex)
    o = (m - n) // 2
    P[o:o + n, o:o + n] = U
    if n % 2 == 0:
        # split the Nyquist rows so the interpolant stays real
        P[o, :] *= 0.5
        P[o + n, :] = P[o, :]
        P[:, o] *= 0.5
        P[:, o + n] = P[:, o]
    return np.real(np.fft.ifft2(np.fft.ifftshift(P))) * factor * factor


def hamiltonian_sup_upper(model: SurfaceModel, cover="base", n: int = 64, betas=None,
                          max_iter: int = 300, check_factor: int = 4) -> HamiltonianBound:
    """Minimize ``sup_q H(q, du + l)`` over periodic ``u`` and admissible linear parts ``l``.

    ``cover`` is ``"base"`` (no linear part), ``"abelian"`` (free linear part)
    or a :class:`LatticeClass` (linear parts vanishing on the sublattice).  The
    sup is smoothed by log-sum-exp with sharpness doubling from 8 to 1024; the
    returned value is the hard maximum, re-evaluated on a finer grid through
    the Fourier interpolant of ``u``.
    """
    if not model.is_torus:
        raise UnsupportedOperation("grid Hamiltonian bounds need the flat torus")
    if not model.quadratic_in_velocity:
        raise UnsupportedOperation("grid Hamiltonian bounds need a quadratic-in-velocity model")
    if isinstance(cover, LatticeClass):
        L = cover.annihilator()
    elif cover == "base":
        L = np.zeros((0, 2))
    elif cover == "abelian":
        L = np.eye(2)
    else:
        raise ValueError(f"unknown cover {cover!r}")
    betas = betas or [8.0 * 2 ** i for i in range(8)]
    Q = _grid(model, n)
    theta = model.one_form(Q)
    ginv = model.metric_inv(Q)
    V = np.asarray(model.potential(Q), dtype=float) * np.ones((n, n))
    grad, div_adj = _spectral_ops(n)
    m = len(L)

    def unpack(x):
        return x[:n * n].reshape(n, n), x[n * n:]

    def H_of(u, c):
        ux, uy = grad(u)
        lin = c @ L if m else np.zeros(2)
        w = np.stack([ux + lin[0], uy + lin[1]], axis=-1) - theta
        gw = np.einsum("...ij,...j->...i", ginv, w)
        return 0.5 * np.sum(w * gw, axis=-1) + V, gw

    def objective(x, beta):
        u, c = unpack(x)
        H, gw = H_of(u, c)
        top = H.max()
        e = np.exp(beta * (H - top))
        Z = e.sum()
        F = top + np.log(Z) / beta
        pi = e / Z
        gu = div_adj(pi * gw[..., 0], pi * gw[..., 1])
        gc = L @ np.array([np.sum(pi * gw[..., 0]), np.sum(pi * gw[..., 1])]) if m else np.zeros(0)
        return F, np.concatenate([gu.ravel(), gc])

    x = np.zeros(n * n + m)
    stalled = False
    best_x, best_val = x.copy(), float(H_of(*unpack(x))[0].max())
    for beta in betas:
        res = minimize(objective, x, args=(beta,), jac=True, method="L-BFGS-B",
                       options={"maxiter": max_iter, "gtol": 1e-12, "ftol": 1e-15})
        x = res.x
        val = float(H_of(*unpack(x))[0].max())
        if val < best_val:
            best_x, best_val = x.copy(), val
        if not res.success and res.status not in (0, 1, 2):
            stalled = True
    u, c = unpack(best_x)
    grid_max = float(H_of(u, c)[0].max())
    lin = c @ L if m else np.zeros(2)

    fine_max = grid_max
    if check_factor and check_factor > 1:
        f = check_factor
        uf = _fourier_upsample(u, f)
        gradf, _ = _spectral_ops(n * f)
        Qf = _grid(model, n * f)
        ux, uy = gradf(uf)
        w = np.stack([ux + lin[0], uy + lin[1]], axis=-1) - model.one_form(Qf)
        Hf = 0.5 * np.einsum("...i,...ij,...j->...", w, model.metric_inv(Qf), w) + model.potential(Qf)
        fine_max = float(np.max(Hf))
    value = max(grid_max, fine_max)
    return HamiltonianBound(value, grid_max, fine_max, n, u, np.asarray(lin, dtype=float), stalled)


# ---------------------------------------------------------------------------
# brackets
# ---------------------------------------------------------------------------

_BRACKET_CACHE: dict = {}


def clear_cache():
    _BRACKET_CACHE.clear()


def _cache_key(model, *parts):
    return (id(model),) + tuple(parts)


def bracket_critical(model: SurfaceModel, which="c", interval=(0.0, None), tol: float = 0.01,
                     Q0: BoundarySpec | None = None, Q1: BoundarySpec | None = None, grid: int = 64,
                     multistart: int = 32, seed: int = 0, max_bisect: int = 40, cache: bool = True) -> CriticalBracket:
    """Bracket ``c`` (all loops), ``c_u = c_0`` (contractible loops) or the pair value.

    Bisection pushes the lower end up while a negative loop in the probed
    classes exists; the upper end comes from :func:`hamiltonian_sup_upper` on
    the matching cover.
    """
    lattice = _as_lattice(which, Q0, Q1)
    name = which if isinstance(which, str) else "lattice"
    key = _cache_key(model, name, lattice.generators, tuple(lattice.probe_classes), interval, tol, grid,
                     multistart, seed)
    if cache and key in _BRACKET_CACHE and _BRACKET_CACHE[key][0] is model:
        return _BRACKET_CACHE[key][1]
    cover = LatticeClass(lattice.generators) if lattice.rank else "abelian"
    if lattice.rank == 2 and set(map(tuple, lattice.generators)) == {(1, 0), (0, 1)}:
        cover = "base"
    hb = hamiltonian_sup_upper(model, cover, n=grid)
    upper = hb.value

    lo = float(interval[0])
    hi = float(interval[1]) if interval[1] is not None else upper
    hi = min(hi, upper)
    witness = None
    probe_lo = loop_probe(model, lattice, lo, multistart, seed)
    if probe_lo.negative:
        witness = probe_lo
    certified = witness is not None
    if lo > upper + 1e-6:
        raise BracketError(f"{name}: interval starts above the Hamiltonian bound {upper:.6g}",
                           lower=lo, upper=upper)
    steps = 0
    while hi - lo > tol / 4 and steps < max_bisect:
        mid = 0.5 * (lo + hi)
        r = loop_probe(model, lattice, mid, multistart, seed)
        if r.negative:
            lo, witness = mid, r
            certified = True
        else:
            hi = mid
        steps += 1
    lower = lo
    if witness is not None:
        val = discrete_action(model, witness.loop, lower + WITNESS_SHIFT).A
        if not val < 0:
            certified = False
    if lower > upper + 1e-6:
        raise BracketError(f"{name}: witness level {lower:.6g} exceeds Hamiltonian bound {upper:.6g}",
                           lower=lower, upper=upper)
    br = CriticalBracket(name, lower, upper, None if witness is None else witness.loop, hb,
                         method=f"loop_probe+hamiltonian_{cover if isinstance(cover, str) else 'lattice'}",
                         soft_upper=hi, lower_certified=certified, stalled=hb.stalled,
                         message="" if certified else "no negative loop at the interval start")
    if cache:
        # the model is kept alive so its id cannot be recycled
        _BRACKET_CACHE[key] = (model, br)
    return br


# ---------------------------------------------------------------------------
# intersections, k_Omega, k_N
# ---------------------------------------------------------------------------

def intersections(model: SurfaceModel, Q0: BoundarySpec, Q1: BoundarySpec, samples: int = 2048,
                  tol: float = 1e-8) -> list:
    """Transverse intersection points of ``Q0`` and ``Q1``."""
    disp = (lambda d: _wrap(d)) if model.is_torus else (lambda d: d)
    if Q0.is_point and Q1.is_point:
        return [Q0.point.copy()] if np.linalg.norm(disp(Q0.point - Q1.point)) <= tol else []
    if Q0.is_point or Q1.is_point:
        P, C = (Q0, Q1) if Q0.is_point else (Q1, Q0)
        return [P.point.copy()] if abs(float(C.implicit(P.point))) <= tol else []
    f = lambda s: float(Q1.implicit(Q0.at(s)))
    s = np.linspace(0.0, 1.0, samples + 1)
    vals = np.asarray(Q1.implicit(Q0.at(s)), dtype=float)
    pts = []
    for i in range(samples):
        a, b = vals[i], vals[i + 1]
        if a == 0.0:
            root = s[i]
        elif a * b < 0:
            root = brentq(f, s[i], s[i + 1], xtol=1e-15)
        else:
            continue
        if abs(f(root)) > tol:
            continue  # jump of the implicit function across the far side
        q = Q0.at(root)
        if model.is_torus:
            q = np.mod(q, 1.0)
        if all(np.linalg.norm(disp(q - p)) > 1e-9 for p in pts):
            pts.append(q)
    return pts


def k_omega(model: SurfaceModel, Q0: BoundarySpec, Q1: BoundarySpec, families=None, a: float | None = None,
            c_pair=None, samples: int = 2048) -> float:
    """``min{c(L; Q0, Q1), max_nu E(q, 0) + max_nu |theta_q|^2 / (4a)}`` minimized over families.

    ``families`` is a list of point lists (isolating families of intersection
    points); by default all intersection points form one family.  ``c_pair``
    is a number or a bracket (its upper end is used); it is computed when omitted.
    """
    pts = intersections(model, Q0, Q1, samples)
    if not pts:
        raise DomainError("Q0 and Q1 do not intersect; k_Omega is undefined")
    a = model.convexity if a is None else a
    if families is None:
        families = [pts]
    if c_pair is None:
        c_pair = bracket_critical(model, "c_pair", Q0=Q0, Q1=Q1).upper
    elif isinstance(c_pair, CriticalBracket):
        c_pair = c_pair.upper
    best = np.inf
    for fam in families:
        P = np.atleast_2d(np.asarray(fam, dtype=float))
        if len(P) == 0:
            raise ValueError("empty family")
        E = float(np.max(model.zero_section_energy(P)))
        th = float(np.max(model.dual_norm(P, model.one_form(P))))
        best = min(best, E + th * th / (4.0 * a))
    return float(min(c_pair, best))


def _component_of_constants(model, Q0, Q1, pts):
    from .pathspace import constant_path
    from .solvers import _nearest_param
    q = np.asarray(pts[0])
    s0 = _nearest_param(Q0, q)
    s1 = _nearest_param(Q1, q)
    path = constant_path(Q0, s0, Q1, s1, 8, 1.0)
    return classify_component(model, path) if model.is_torus else None, path


def k_N_estimate(model: SurfaceModel, Q0: BoundarySpec, Q1: BoundarySpec, component=None,
                 interval=(None, None), tol: float = 0.01, samples: int = 64, N: int = 48,
                 max_bisect: int = 40) -> CriticalBracket:
    """Bracket for ``inf{k : A_k >= 0 on the component of constant paths}``.

    The lower end is certified by a negative path (straight chords between
    boundary samples, or a constant path at an intersection point below its
    zero-section energy); the upper end is the parabola bound ``e0 +
    |theta|^2/(4a)``.  The bisection ceiling is reported as ``soft_upper``.
    """
    from .solvers import chord_heads
    pts = intersections(model, Q0, Q1)
    if not pts:
        raise DomainError("the constant-path component needs Q0 and Q1 to intersect")
    label, const = _component_of_constants(model, Q0, Q1, pts)
    if component is not None:
        label = tuple(component)
    cap = k0_cap(model)
    lo = float(interval[0]) if interval[0] is not None else 0.0
    hi = float(interval[1]) if interval[1] is not None else cap
    hi = min(hi, cap)
    E_pts = np.asarray(model.zero_section_energy(np.asarray(pts)), dtype=float)

    def witness_at(k):
        i = int(np.argmax(E_pts))
        if k < E_pts[i]:
            from .pathspace import constant_path
            from .solvers import _nearest_param
            q = np.asarray(pts[i])
            return constant_path(Q0, _nearest_param(Q0, q), Q1, _nearest_param(Q1, q), N, 1.0)
        heads = chord_heads(model, Q0, Q1, k, label, samples, N)
        return heads[0][1] if heads else None

    witness = witness_at(lo)
    certified = witness is not None
    steps = 0
    while hi - lo > tol / 4 and steps < max_bisect:
        mid = 0.5 * (lo + hi)
        w = witness_at(mid)
        if w is not None:
            lo, witness, certified = mid, w, True
        else:
            hi = mid
        steps += 1
    if witness is not None:
        if not discrete_action(model, witness, lo + WITNESS_SHIFT).A < 0:
            certified = False
    return CriticalBracket("k_N", lo, cap, witness, None, method="chord_witness+parabola_cap",
                           soft_upper=hi, lower_certified=certified,
                           message="" if certified else "no negative path at the interval start")


# ---------------------------------------------------------------------------
# chain audit
# ---------------------------------------------------------------------------

@dataclass
class ChainReport:
    entries: list
    checks: list
    ok: bool

    def to_csv(self, fh=None) -> str:
        lines = ["name,lower,upper"] + [f"{n},{lo:.17g},{up:.17g}" for n, lo, up in self.entries]
        text = "\n".join(lines) + "\n"
        if fh is not None:
            with open(fh, "w") as f:
                f.write(text)
        return text


def chain_audit(model: SurfaceModel, Q0: BoundarySpec | None = None, Q1: BoundarySpec | None = None,
                brackets: dict | None = None, tol: float = 0.01, slack: float = 1e-6,
                strict: bool = True) -> ChainReport:
    """Check ``e0 <= c_u <= c(L;Q0,Q1) <= c <= k0 <= e0 + |theta|^2/(4a)`` on enclosures.

    ``brackets`` may supply any of ``e0, cu, c_pair, c, cap`` as ``(lower, upper)``
    pairs (required off the torus).  Each link checks lower(left) <= upper(right).
    """
    given = dict(brackets or {})

    def get(name, compute):
        if name in given:
            lo, up = given[name]
            return float(lo), float(up)
        if not model.is_torus:
            raise UnsupportedOperation(f"{name} must be supplied for non-torus models")
        return compute()

    e = get("e0", lambda: (e0(model),) * 2)
    cap_val = get("cap", lambda: (k0_cap(model),) * 2)

    def br(which):
        b = bracket_critical(model, which, tol=tol, Q0=Q0, Q1=Q1)
        return b.lower, b.upper

    cu = get("cu", lambda: br("cu_c0"))
    cp = get("c_pair", lambda: br("c_pair") if Q0 is not None else br("cu_c0"))
    c = get("c", lambda: br("c"))
    k0 = (c[0], cap_val[1])
    entries = [("e0", *e), ("c_u", *cu), ("c_pair", *cp), ("c", *c), ("k0", *k0), ("cap", *cap_val)]
    checks = []
    ok = True
    for (n1, lo1, _), (n2, _, up2) in zip(entries[:-1], entries[1:]):
        good = lo1 <= up2 + slack
        checks.append((n1, n2, lo1, up2, good))
        ok &= good
    rep = ChainReport(entries, checks, bool(ok))
    if strict and not ok:
        bad = [c for c in checks if not c[-1]]
        raise ChainViolation(f"chain of critical values violated: {bad}")
    return rep
