import numpy as np
import pytest

from conorbit.critical import (LatticeClass, bracket_critical, brackets_to_csv, chain_audit, e0,
                               hamiltonian_sup_upper, intersections, k0_cap, k_N_estimate, k_obstruction, k_omega,
                               loop_probe)
from conorbit.errors import ChainViolation, DomainError, UnsupportedOperation
from conorbit.models import build_model
from conorbit.pathspace import LoopPath, circle, discrete_action, hline, point, vline
from conorbit.scenarios import get_scenario, list_scenarios


def test_lattice_class():
    assert LatticeClass.full().rank == 2
    assert LatticeClass.trivial().rank == 0
    lc = LatticeClass.from_boundaries(point((0.5, 0)), hline(0.5))
    assert lc.rank == 1
    assert np.allclose(lc.annihilator() @ np.array([1, 0]), 0)
    assert (0, 0) in [tuple(c) for c in lc.default_probes()]


def test_e0_values(mag, mech):
    assert e0(mag) == 0.0
    assert e0(mech) == pytest.approx(0.7, abs=1e-9)
    const = build_model("torus_mechanical", amplitude=0.0)
    assert e0(const) == 0.0
    assert k0_cap(mag) == pytest.approx(0.5)


def test_loop_probe_examples(mag):
    r = loop_probe(mag, (-1, 0), 0.45)
    assert r.action <= -0.05 + 1e-9
    r = loop_probe(mag, "contractible", 0.1)
    assert r.negative and r.action <= 5 * (2 * np.sqrt(0.2) - 1) + np.sqrt(0.2) + 1e-9
    r = loop_probe(mag, "contractible", 0.2, multistart=32)
    assert not r.negative and r.action >= 0
    with pytest.raises(UnsupportedOperation):
        loop_probe(build_model("half_plane_horocycle"), "contractible", 0.1)


def test_loop_witness_is_sound(mag):
    r = loop_probe(mag, (-1, 0), 0.45)
    assert isinstance(r.loop, LoopPath)
    assert discrete_action(mag, r.loop, 0.45).A == pytest.approx(r.action, abs=1e-12)


def test_hamiltonian_upper_examples(mag, mech):
    hb = hamiltonian_sup_upper(mag, "base")
    assert hb.value <= 0.52 and hb.fine_ok
    ha = hamiltonian_sup_upper(mag, "abelian")
    assert ha.value <= 0.13 and ha.fine_ok
    hm = hamiltonian_sup_upper(mech, "base")
    assert hm.value == pytest.approx(0.7, abs=5e-3)


@pytest.fixture(scope="module")
def point_line():
    return get_scenario("torus_point_line")


@pytest.fixture(scope="module")
def lens():
    return get_scenario("torus_lens")


def test_bracket_c_and_cu(mag):
    c = bracket_critical(mag, "c")
    cu = bracket_critical(mag, "cu_c0")
    assert c.contains(0.5) and c.width <= 0.05
    assert cu.contains(0.125) and cu.width <= 0.05
    assert c.lower <= c.upper + 1e-6
    # lower witness is negative just above the lower end
    w = c.lower_witness
    assert discrete_action(mag, w, c.lower + 1e-9).A < 0


def test_bracket_pair(point_line, lens):
    b = bracket_critical(point_line.model, "c_pair", Q0=point_line.Q0, Q1=point_line.Q1)
    assert b.contains(0.5) and b.width <= 0.05
    b = bracket_critical(lens.model, "c_pair", Q0=lens.Q0, Q1=lens.Q1)
    assert b.contains(0.125) and b.width <= 0.05


def test_bracket_pair_symmetric(point_line):
    sc = point_line
    a = bracket_critical(sc.model, "c_pair", Q0=sc.Q0, Q1=sc.Q1, cache=False)
    b = bracket_critical(sc.model, "c_pair", Q0=sc.Q1, Q1=sc.Q0, cache=False)
    assert (a.lower, a.upper) == (b.lower, b.upper)


def test_mechanical_brackets_collapse():
    sc = get_scenario("mechanical_bump")
    for which in ("c", "cu_c0"):
        b = bracket_critical(sc.model, which, tol=0.01)
        assert b.contains(0.7, tol=1e-6) and b.width <= 0.01 + 1e-9
    b = bracket_critical(sc.model, "c_pair", Q0=sc.Q0, Q1=sc.Q1, tol=0.01)
    assert b.contains(0.7, tol=1e-6)


def test_bracket_csv(mag, tmp_path):
    text = brackets_to_csv([bracket_critical(mag, "c")], witness_dir=tmp_path)
    assert text.splitlines()[0] == "name,lower,upper,lower_witness_file,upper_witness_file,method"
    assert (tmp_path / "c_lower.csv").exists() and (tmp_path / "c_upper.csv").exists()


def test_obstruction_examples(point_line, mag, mech):
    sc = point_line
    assert k_obstruction(sc.model, sc.Q0, sc.Q1) == pytest.approx(0.5, abs=1e-4)
    assert k_obstruction(mag, point((0.5, 0.0)), vline(0.3)) == pytest.approx(0.0, abs=1e-12)
    flat = build_model("torus_mechanical", amplitude=0.0)
    assert k_obstruction(flat, hline(0.5), circle((0.5, 0.5), 0.2)) == 0.0


@pytest.mark.parametrize("name", ["torus_point_line", "torus_lens", "torus_band_crossing"])
def test_obstruction_below_pair_value(name):
    sc = get_scenario(name)
    b = bracket_critical(sc.model, "c_pair", Q0=sc.Q0, Q1=sc.Q1)
    assert k_obstruction(sc.model, sc.Q0, sc.Q1) <= b.upper + 0.01


def test_intersections(mag, lens):
    pts = intersections(mag, lens.Q0, lens.Q1)
    assert len(pts) == 2
    for q in pts:
        assert np.linalg.norm(q - np.array([0.35, 0.5])) == pytest.approx(0.3, abs=1e-8)
        assert np.linalg.norm(q - np.array([0.65, 0.5])) == pytest.approx(0.3, abs=1e-8)
    assert intersections(mag, point((0.1, 0.1)), point((0.2, 0.2))) == []


def test_k_omega_examples(mag):
    sc = get_scenario("torus_band_crossing")
    assert k_omega(sc.model, sc.Q0, sc.Q1) == pytest.approx(0.125, abs=0.01)
    # circles crossing where psi vanishes
    Q0, Q1 = circle((0.3, 0.05), 0.02, "a"), circle((0.32, 0.05), 0.02, "b")
    assert k_omega(mag, Q0, Q1, c_pair=0.125) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(DomainError):
        k_omega(mag, point((0.1, 0.1)), point((0.2, 0.2)), c_pair=0.5)


def test_k_omega_family_monotone(lens):
    pts = intersections(lens.model, lens.Q0, lens.Q1)
    small = k_omega(lens.model, lens.Q0, lens.Q1, families=[pts[:1]], c_pair=1.0)
    big = k_omega(lens.model, lens.Q0, lens.Q1, families=[pts], c_pair=1.0)
    assert small <= big


def test_counterexample_metadata():
    sc = get_scenario("half_plane_counterexample")
    assert sc.metadata["k_intersection"] == 0.5
    assert sc.metadata["c_u_range"] == (1.5, 2.0)


def test_k_N_lens(lens):
    b = k_N_estimate(lens.model, lens.Q0, lens.Q1)
    assert b.contains(0.5) and b.width <= 0.05
    cp = bracket_critical(lens.model, "c_pair", Q0=lens.Q0, Q1=lens.Q1)
    assert cp.lower <= b.upper
    flat = build_model("torus_mechanical", amplitude=0.0)
    b = k_N_estimate(flat, lens.Q0, lens.Q1)
    assert b.lower == 0.0 and b.upper == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("name", [n for n, _ in list_scenarios()])
def test_chain_audit_all_scenarios(name):
    sc = get_scenario(name)
    rep = chain_audit(sc.model, sc.Q0, sc.Q1, brackets=sc.analytic_chain)
    assert rep.ok
    assert rep.to_csv().startswith("name,lower,upper")


def test_chain_violation_is_hard_failure(mag):
    with pytest.raises(ChainViolation):
        chain_audit(mag, brackets={"cu": (0.9, 0.9)})
    rep = chain_audit(mag, brackets={"cu": (0.9, 0.9)}, strict=False)
    assert not rep.ok
