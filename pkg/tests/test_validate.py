import numpy as np
import pytest
from hypothesis import given, strategies as st

from mbcross import (CoeffTable, Truncation, joint_coeffs, make_law, marginal_coeffs, mc_z_report,
                     total_variation, uniformization_dist)
from mbcross.engine import OdeSettings
from mbcross.sim import EmpiricalTable

SUB = make_law({0: 1.5, 2: 0.5})
BD = make_law({0: 1.0, 2: 1.0})
TIGHT = OdeSettings(abs_tol=1e-13, rel_tol=1e-12)


def test_uniformization_at_zero():
    table, leak = uniformization_dist(SUB, [0], 2, 0.0, 10, 5)
    assert {k: v for k, v in table.items() if v} == {(2, 0): 1.0} and leak == 0.0


def test_uniformization_vs_engine():
    table, leak = uniformization_dist(SUB, [0], 1, 1.0, 40, 20)
    eng = joint_coeffs(SUB, [0], 1.0, 40, 20)
    assert max(abs(table[k] - eng[k]) for k in eng) < 1e-6 + leak


def test_leak_decreases_with_lattice():
    _, leak40 = uniformization_dist(SUB, [0], 1, 1.0, 40, 20)
    _, leak60 = uniformization_dist(SUB, [0], 1, 1.0, 60, 20)
    # both leaks are ~4e-20 here; allow for Poisson truncation at different rates
    assert leak60 <= leak40 + 1e-15
    leaks = [uniformization_dist(BD, [0], 1, 1.0, J, 25)[1] for J in (10, 20, 40)]
    assert leaks[0] > leaks[1] > leaks[2] > 0


def test_retained_entries_are_lower_bounds():
    small, _ = uniformization_dist(BD, [0, 2], 1, 1.0, 8, 4)
    exact = joint_coeffs(BD, [0, 2], 1.0, 8, 4, TIGHT)
    assert all(small[k] <= exact[k] + 1e-10 for k in exact)


def test_tight_lattice_matches_engine():
    table, leak = uniformization_dist(SUB, [0, 2], 1, 0.5, 40, 20)
    assert leak < 1e-10
    eng = joint_coeffs(SUB, [0, 2], 0.5, 40, 20, TIGHT)
    assert max(abs(table[k] - eng[k]) for k in eng) < 1e-8


def test_uniformization_from_several_particles():
    table, leak = uniformization_dist(SUB, [0], 3, 0.7, 40, 25)
    assert leak < 1e-9
    assert table.total() == pytest.approx(1.0, abs=1e-9)
    assert table[(0, 3)] > 0 and table[(0, 2)] == 0.0


def test_total_variation_examples():
    a = {"x": 0.5, "y": 0.5}
    assert total_variation(a, a) == 0.0
    assert total_variation({"x": 1.0}, {"y": 1.0}) == 1.0
    assert total_variation(a, {"x": 1.0}) == 0.5
    assert total_variation({"x": 0.5}, {"x": 0.5, "y": 0.5}) == 0.5
    with pytest.raises(ValueError):
        total_variation({"x": -0.1}, a)


dists = st.dictionaries(st.integers(0, 5), st.floats(0.0, 1.0), min_size=1).map(
    lambda d: {k: v / max(1.0, sum(d.values())) for k, v in d.items()})


@given(dists, dists, dists)
def test_total_variation_metric(a, b, c):
    assert abs(total_variation(a, b) - total_variation(b, a)) < 1e-12
    assert total_variation(a, c) <= total_variation(a, b) + total_variation(b, c) + 1e-12


def _empirical(counts, reps=None):
    reps = reps or sum(counts.values())
    return EmpiricalTable({(1,) + k: c for k, c in counts.items()}, reps, 0, 1, 1.0, (0,))


def test_exactly_proportional_sample():
    analytic = CoeffTable({(0,): 0.5, (1,): 0.25, (2,): 0.25}, 1, Truncation(4))
    report = mc_z_report(_empirical({(0,): 500, (1,): 250, (2,): 250}), analytic)
    assert all(c.z == 0.0 for c in report.cells) and report.passed and report.tv == 0.0


def test_shifted_mass_is_flagged():
    n = 100000
    analytic = marginal_coeffs(BD, [0], 1.0, 20)
    counts = {k: round(n * p) for k, p in analytic.items() if round(n * p) > 0}
    counts[(0,)] -= n // 100
    counts[(1,)] += n // 100
    report = mc_z_report(_empirical(counts), analytic)
    assert not report.passed
    flagged = {c.key for c in report.cells if abs(c.z) > 4}
    assert {(0,), (1,)} <= flagged


def test_tiny_sample_pools_everything():
    analytic = marginal_coeffs(BD, [0], 1.0, 10)
    report = mc_z_report(_empirical({(0,): 3, (1,): 6, (2,): 1}), analytic)
    assert [c.key for c in report.cells] == ["pooled"] and report.passed


def test_empty_sample_rejected():
    with pytest.raises(ValueError):
        mc_z_report(_empirical({}, reps=5), marginal_coeffs(BD, [0], 1.0, 3))


def test_null_pass_rate():
    analytic = marginal_coeffs(BD, [0], 1.0, 30)
    keys = sorted(analytic)
    p = np.array([max(analytic[k], 0.0) for k in keys])
    p = np.append(p, max(0.0, 1 - p.sum()))
    p /= p.sum()
    rng = np.random.default_rng(2026)
    passed = 0
    for _ in range(100):
        draw = rng.multinomial(10000, p)
        counts = {k: int(c) for k, c in zip(keys, draw[:-1]) if c}
        if draw[-1]:
            counts[(31,)] = int(draw[-1])
        passed += mc_z_report(_empirical(counts), analytic).passed
    assert passed >= 99


def test_report_renders():
    analytic = marginal_coeffs(BD, [0], 1.0, 5)
    report = mc_z_report(_empirical({(0,): 60, (1,): 30, (2,): 10}), analytic)
    text = report.render()
    assert "max|z|" in text and ("PASS" in text or "FAIL" in text)
    doc = report.to_dict()
    assert doc["replicates"] == 100 and doc["cells"][-1]["key"] == "pooled"
