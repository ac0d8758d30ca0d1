"""Scenario configuration files: flat ``key = value`` text with dotted keys.

Example::

    task = minimize
    scenario = torus_point_line
    k = 0.75
    solver.N = 256

Keys set explicitly override the built-in scenario.  Every key and its type
is listed in ``schema.txt`` shipped with the package.
"""

from __future__ import annotations

import configparser
import inspect
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .models import MODEL_CATALOG, build_model
from .pathspace import BoundarySpec, circle, hline, point, vline
from .scenarios import SCENARIOS, Scenario, get_scenario

TASKS = ("minimize", "mountain_pass", "struwe_scan", "brackets", "chain_audit", "no_connection", "reproduce")
BOUNDARY_KINDS = ("point", "circle", "hline", "vline")
CRITICAL_NAMES = ("c", "cu_c0", "c_pair", "k_N", "k_obstruction", "e0")


def _float(s):
    return float(s)


def _int(s):
    return int(s)


def _bool(s):
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _vec2(s):
    parts = [float(p) for p in s.replace(";", ",").split(",") if p.strip()]
    if len(parts) != 2:
        raise ValueError("expected two comma-separated numbers")
    return tuple(parts)


def _floats(s):
    """``a, b, c`` or ``start:stop:step`` (stop inclusive)."""
    if ":" in s:
        a, b, h = (float(p) for p in s.split(":"))
        if h <= 0:
            raise ValueError("step must be positive")
        n = int(np.floor((b - a) / h + 1e-9))
        return tuple(float(np.round(a + i * h, 12)) for i in range(n + 1))
    return tuple(float(p) for p in s.split(",") if p.strip())


def _points(s):
    return tuple(_vec2(p) for p in s.split(";") if p.strip())


def _words(s):
    return tuple(p.strip() for p in s.split(",") if p.strip())


# key -> (parser, default, help)
SCHEMA = {
    "task": (str, None, f"one of {', '.join(TASKS)}"),
    "name": (str, None, "reproduce: target name (default all)"),
    "scenario": (str, None, f"built-in scenario supplying defaults: {', '.join(SCENARIOS)}"),
    "seed": (_int, 0, "random seed"),
    "out_dir": (str, "out", "output directory"),
    "plots": (_bool, True, "render PNG plots next to the CSV files"),
    "k": (_float, None, "energy"),
    "k_grid": (_floats, None, "ascending energies, 'a, b, c' or 'start:stop:step'"),
    "omega": (_vec2, None, "mountain pass: intersection point 'x, y'"),
    "epsilon": (_float, None, "mountain pass: radius of the sphere around the constant path"),
    "model.id": (str, None, f"model id: {', '.join(MODEL_CATALOG)}"),
    "model.*": (_float, None, "numeric model parameter passed to the builder (e.g. model.psi_lo)"),
    "q0.kind": (str, None, f"boundary kind: {', '.join(BOUNDARY_KINDS)}"),
    "q0.point": (_vec2, None, "point boundary 'x, y'"),
    "q0.center": (_vec2, None, "circle center 'x, y'"),
    "q0.radius": (_float, None, "circle radius"),
    "q0.y": (_float, None, "hline height"),
    "q0.x": (_float, None, "vline abscissa"),
    "q1.kind": (str, None, "as q0.kind"),
    "q1.point": (_vec2, None, "as q0.point"),
    "q1.center": (_vec2, None, "as q0.center"),
    "q1.radius": (_float, None, "as q0.radius"),
    "q1.y": (_float, None, "as q0.y"),
    "q1.x": (_float, None, "as q0.x"),
    "init.waypoints": (_points, None, "minimize: initial polyline 'x, y; x, y; ...' (chart lift)"),
    "init.T": (_float, 1.0, "minimize: initial total time"),
    "init.paths": (_int, 1, "minimize: number of initial paths shifted by whole turns along (0, 1)"),
    "solver.N": (_int, 128, "minimize: segments"),
    "solver.max_iters": (_int, 50_000, "minimize: iteration cap"),
    "solver.grad_tol": (_float, None, "minimize: gradient tolerance (default 1e-7 * sqrt(N))"),
    "solver.multistart": (_int, 1, "minimize: jittered restarts per initial path"),
    "string.beads": (_int, 17, "mountain pass: beads"),
    "string.N": (_int, 48, "mountain pass: segments per bead"),
    "string.max_iters": (_int, 4000, "mountain pass: iteration cap"),
    "string.residual_tol": (_float, 1e-4, "mountain pass: saddle gradient tolerance"),
    "critical.which": (_words, ("c", "cu_c0", "c_pair"), f"brackets: subset of {', '.join(CRITICAL_NAMES)}"),
    "critical.tol": (_float, 0.01, "brackets: bisection tolerance"),
    "critical.grid": (_int, 64, "brackets: Hamiltonian grid size"),
}

TASK_REQUIRES = {
    "minimize": ("model", "q0", "q1", "k"),
    "mountain_pass": ("model", "q0", "q1", "k", "omega", "epsilon"),
    "struwe_scan": ("model", "q0", "q1", "k_grid", "omega", "epsilon"),
    "brackets": ("model",),
    "chain_audit": ("model",),
    "no_connection": ("model", "q0", "q1", "k"),
    "reproduce": (),
}

BOUNDARY_FIELDS = {"point": ("point",), "circle": ("center", "radius"), "hline": ("y",), "vline": ("x",)}


@dataclass
class RunConfig:
    task: str
    values: dict
    scenario: Scenario | None = None
    model_params: dict = field(default_factory=dict)

    def get(self, key, default=None):
        if key in self.values:
            return self.values[key]
        d = SCHEMA.get(key, (None, None, None))[1]
        return default if d is None else d


def read_pairs(text: str) -> dict:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    cp.optionxform = str
    try:
        cp.read_string("[top]\n" + text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config: {exc}") from None
    return dict(cp["top"])


def _schema_entry(key):
    if key in SCHEMA:
        return SCHEMA[key]
    if key.startswith("model.") and key != "model.id":
        return SCHEMA["model.*"]
    return None


def parse_config(text: str, overrides: dict | None = None) -> RunConfig:
    """Parse and validate; raises :class:`ConfigError` naming the offending key."""
    raw = read_pairs(text)
    raw.update(overrides or {})
    values = {}
    for key, s in raw.items():
        entry = _schema_entry(key)
        if entry is None:
            raise ConfigError("unknown key", key)
        parser = entry[0]
        if not isinstance(s, str):
            values[key] = s
            continue
        try:
            values[key] = parser(s.strip())
        except ValueError as exc:
            raise ConfigError(f"bad value {s!r}: {exc}", key) from None

    task = values.get("task")
    if task is None:
        raise ConfigError("missing", "task")
    if task not in TASKS:
        raise ConfigError(f"unknown task {task!r}", "task")

    scen = None
    if "scenario" in values:
        if values["scenario"] not in SCENARIOS:
            raise ConfigError(f"unknown scenario {values['scenario']!r}", "scenario")
        scen = get_scenario(values["scenario"])

    model_params = {k.split(".", 1)[1]: v for k, v in values.items() if k.startswith("model.") and k != "model.id"}
    if "model.id" in values:
        mid = values["model.id"]
        if mid not in MODEL_CATALOG:
            raise ConfigError(f"unknown model id {mid!r}", "model.id")
        allowed = inspect.signature(MODEL_CATALOG[mid][0]).parameters
        for p in model_params:
            if p not in allowed:
                raise ConfigError(f"model {mid} has no parameter {p!r}", f"model.{p}")
    elif model_params:
        raise ConfigError("model parameters need model.id", "model.id")

    cfg = RunConfig(task, values, scen, model_params)
    have = {
        "model": scen is not None or "model.id" in values,
        "q0": scen is not None or "q0.kind" in values,
        "q1": scen is not None or "q1.kind" in values,
        "k": "k" in values or (scen is not None and scen.k is not None),
        "k_grid": "k_grid" in values or (scen is not None and bool(scen.k_grid)),
        "omega": "omega" in values or (scen is not None and scen.omega is not None),
        "epsilon": "epsilon" in values or (scen is not None and scen.epsilon is not None),
    }
    for req in TASK_REQUIRES[task]:
        if not have[req]:
            raise ConfigError(f"required by task {task}", "model.id" if req == "model" else
                              f"{req}.kind" if req in ("q0", "q1") else req)
    for side in ("q0", "q1"):
        kind = values.get(f"{side}.kind")
        if kind is None:
            continue
        if kind not in BOUNDARY_KINDS:
            raise ConfigError(f"unknown boundary kind {kind!r}", f"{side}.kind")
        for fld in BOUNDARY_FIELDS[kind]:
            if f"{side}.{fld}" not in values:
                raise ConfigError(f"required for a {kind} boundary", f"{side}.{fld}")
    if "critical.which" in values:
        for w in values["critical.which"]:
            if w not in CRITICAL_NAMES:
                raise ConfigError(f"unknown critical value {w!r}", "critical.which")
    if "k_grid" in values and np.any(np.diff(values["k_grid"]) <= 0):
        raise ConfigError("must be strictly ascending", "k_grid")
    if "solver.N" in values and values["solver.N"] < 16:
        raise ConfigError("must be at least 16", "solver.N")
    return cfg


def load_config(path: str, overrides: dict | None = None) -> RunConfig:
    try:
        with open(path) as f:
            text = f.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from None
    return parse_config(text, overrides)


def _boundary(cfg: RunConfig, side: str, torus: bool) -> BoundarySpec:
    v = cfg.values
    kind = v[f"{side}.kind"]
    label = side.upper()
    if kind == "point":
        return point(v[f"{side}.point"], label)
    if kind == "circle":
        return circle(v[f"{side}.center"], v[f"{side}.radius"], label, torus=torus)
    if kind == "hline":
        return hline(v[f"{side}.y"], label)
    return vline(v[f"{side}.x"], label)


def build_scenario(cfg: RunConfig) -> Scenario:
    """Scenario object with config values applied over the built-in defaults."""
    v = cfg.values
    base = cfg.scenario
    if "model.id" in v:
        try:
            model = build_model(v["model.id"], **cfg.model_params)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"cannot build model: {exc}", "model.id") from None
    elif base is not None:
        model = base.model
    else:
        model = None
    torus = model is not None and model.is_torus
    Q0 = _boundary(cfg, "q0", torus) if "q0.kind" in v else (base.Q0 if base else None)
    Q1 = _boundary(cfg, "q1", torus) if "q1.kind" in v else (base.Q1 if base else None)
    return Scenario(
        base.name if base else "custom", model, Q0, Q1,
        base.description if base else "",
        k=v.get("k", base.k if base else None),
        k_grid=tuple(v.get("k_grid", base.k_grid if base else ())),
        omega=v.get("omega", base.omega if base else None),
        epsilon=v.get("epsilon", base.epsilon if base else None),
        metadata=dict(base.metadata) if base and "model.id" not in v else {})


def schema_text() -> str:
    """Body of ``schema.txt`` (kept in sync by a test)."""
    lines = ["# conorbit scenario config keys", "# key | default | meaning", ""]
    for key, (_, default, help_) in SCHEMA.items():
        d = "" if default is None else (", ".join(map(str, default)) if isinstance(default, tuple) else str(default))
        lines.append(f"{key} | {d} | {help_}")
    lines += ["", "# required keys per task (a scenario supplies model, q0, q1 and its energies)"]
    for task, req in TASK_REQUIRES.items():
        lines.append(f"{task}: {', '.join(req) if req else '-'}")
    lines += ["", "# output files and CSV columns per task"] + [f"{t}: {c}" for t, c in OUTPUT_COLUMNS.items()]
    return "\n".join(lines) + "\n"


OUTPUT_COLUMNS = {
    "minimize": "summary.csv (verdict, k, action, T, grad_norm, iterations, component, lower_bound_violations, "
                "el_residual, energy_mismatch, conormal_0, conormal_1, shooting_gap, energy_drift); "
                "path_<i>.csv (i, x, y; header s0, s1, T, N)",
    "mountain_pass": "summary.csv (verdict, k, minimax, alpha, alpha_variant, epsilon, T0, saddle_T, residual, "
                     "iterations); string.csv (bead, action); saddle.csv (i, x, y)",
    "struwe_scan": "minimax.csv (k, c_omega, converged, T_star, residual)",
    "brackets": "brackets.csv (name, lower, upper, lower_witness_file, upper_witness_file, method); "
                "<name>_lower.csv loop or path; <name>_upper.csv (i, j, u; header linear part)",
    "chain_audit": "chain.csv (name, lower, upper)",
    "no_connection": "no_connection.csv (k, I0_lo, I0_hi, I1_lo, I1_hi, gap, verdict, contact)",
    "reproduce": "reproduce.csv (name, quantity, expected, computed, tolerance, source, anchor, status)",
    "all": "verdict.json (task, scenario, status, verdict, exit_code)",
}
