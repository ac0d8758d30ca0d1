"""Built-in scenarios: model, boundary pair, anchor point and energy settings."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .models import SurfaceModel, build_model
from .pathspace import BoundarySpec, circle, hline, point, vline


@dataclass
class Scenario:
    name: str
    model: SurfaceModel
    Q0: BoundarySpec
    Q1: BoundarySpec
    description: str = ""
    k: float | None = None
    k_grid: tuple = ()
    omega: tuple | None = None
    epsilon: float | None = None
    # analytic values used where the grid estimators do not apply
    metadata: dict = field(default_factory=dict)

    @property
    def analytic_chain(self) -> dict | None:
        return self.metadata.get("chain")


def _torus_point_line():
    return Scenario(
        "torus_point_line", build_model("torus_magnetic"), point((0.5, 0.0), "Q0"), hline(0.5, "Q1"),
        "magnetic torus, Q0 = (1/2, 0), Q1 = {y = 1/2}; supercritical minimizers above 1/2",
        k=0.75, metadata={"k_obstruction": 0.5, "c": 0.5, "c_u": 0.125, "c_pair": 0.5})


def _torus_two_points():
    return Scenario(
        "torus_two_points", build_model("torus_magnetic"), point((0.5, 0.0), "Q0"), point((0.5, 0.5), "Q1"),
        "magnetic torus, two points; the conserved quantity separates them below 1/8", k=0.08)


def _torus_lens():
    # thin field band around y = 1/2 so that theta vanishes near the upper intersection point
    model = build_model("torus_magnetic", psi_lo=0.35, psi_hi=0.65)
    return Scenario(
        "torus_lens", model, circle((0.35, 0.5), 0.3, "Q0"), circle((0.65, 0.5), 0.3, "Q1"),
        "magnetic torus, two contractible circles crossing at two points; k_N = 1/2",
        k=0.25, k_grid=tuple(np.round(np.arange(0.15, 0.451, 0.05), 10)),
        omega=(0.5, 0.5 + np.sqrt(0.3 ** 2 - 0.15 ** 2)), epsilon=0.05,
        metadata={"k_N": 0.5, "c": 0.5, "c_u": 0.125, "c_pair": 0.125})


def _torus_four_points():
    return Scenario(
        "torus_four_points", build_model("torus_magnetic"), circle((0.5, 0.5), 0.3, "Q0"),
        circle((0.0, 0.5), 0.32, "Q1"),
        "two contractible circles meeting in four points; constant paths at the two sides lie in different components",
        k=0.75)


def _flat_orthogonal():
    return Scenario(
        "flat_orthogonal", build_model("torus_mechanical", amplitude=0.0), hline(0.5, "Q0"), vline(0.5, "Q1"),
        "flat kinetic torus, orthogonal closed geodesics through one point; no minimax class", k=0.5,
        omega=(0.5, 0.5), epsilon=0.05)


def _flat_points():
    return Scenario(
        "flat_points", build_model("torus_mechanical", amplitude=0.0), point((0.0, 0.0), "Q0"),
        point((0.3, 0.4), "Q1"), "flat kinetic torus, two points at distance 1/2", k=0.5)


def _mechanical():
    return Scenario(
        "mechanical_bump", build_model("torus_mechanical", amplitude=0.7), hline(0.25, "Q0"), vline(0.25, "Q1"),
        "mechanical torus V = 0.7 sin^2(pi x) sin^2(pi y); every critical value equals max V", k=1.0,
        metadata={"e0": 0.7, "c": 0.7, "c_u": 0.7, "c_pair": 0.7})


def _torus_band_crossing():
    return Scenario(
        "torus_band_crossing", build_model("torus_magnetic"), circle((0.5, 0.3), 0.25, "Q0"),
        circle((0.5, 0.7), 0.25, "Q1"),
        "circles crossing on y = 1/2 where psi = 1; k_Omega clamps to the pair value", k=0.25,
        metadata={"k_omega": 0.125})


def _half_plane():
    model = build_model("half_plane_horocycle", strength=1.0)
    return Scenario(
        "half_plane_horocycle", model, point((0.0, 1.0), "Q0"), point((0.0, 2.0), "Q1"),
        "hyperbolic half-plane with theta = dx/y; circles below energy 1/2, horocycles at 1/2", k=0.125,
        metadata={"chain": {"e0": (0.0, 0.0), "cu": (0.5, 0.5), "c_pair": (0.5, 0.5), "c": (0.5, 0.5),
                            "cap": (0.5, 0.5)}})


def _half_plane_counterexample():
    # only the numeric targets of this construction are shipped
    model = build_model("half_plane_horocycle", strength=2.0)
    return Scenario(
        "half_plane_counterexample", model, point((0.0, 1.0), "Q0"), point((0.0, 1.0), "Q1"),
        "targets of the rounded-rectangle construction: k_{Q0 cap Q1} = 1/2 while c_u lies in [3/2, 2]",
        metadata={"k_intersection": 0.5, "c_u_range": (1.5, 2.0),
                  "chain": {"e0": (0.0, 0.0), "cu": (1.5, 2.0), "c_pair": (1.5, 2.0), "c": (1.5, 2.0),
                            "cap": (2.0, 2.0)}})


SCENARIOS = {
    "torus_point_line": _torus_point_line,
    "torus_two_points": _torus_two_points,
    "torus_lens": _torus_lens,
    "torus_four_points": _torus_four_points,
    "flat_orthogonal": _flat_orthogonal,
    "flat_points": _flat_points,
    "mechanical_bump": _mechanical,
    "torus_band_crossing": _torus_band_crossing,
    "half_plane_horocycle": _half_plane,
    "half_plane_counterexample": _half_plane_counterexample,
}


def get_scenario(name: str) -> Scenario:
    try:
        return SCENARIOS[name]()
    except KeyError:
        raise KeyError(f"unknown scenario {name!r}; known: {sorted(SCENARIOS)}") from None


def list_scenarios():
    return [(n, f().description) for n, f in SCENARIOS.items()]
