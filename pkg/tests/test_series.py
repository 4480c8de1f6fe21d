import numpy as np
import pytest
from hypothesis import given, strategies as st

from mbcross import CoeffTable, MultiIndex, Truncation, convolve, convolve_power
from mbcross.series import convolve_powers, delta_table


def marg(entries, K=6, n=1):
    return CoeffTable(entries, n, Truncation(K))


def test_multi_index_arithmetic():
    k = MultiIndex((1, 0))
    assert k.plus(1) == (1, 1) and k.order == 1
    assert k.minus(0) == (0, 0)
    with pytest.raises(ValueError):
        k.minus(1)
    with pytest.raises(ValueError):
        MultiIndex((-1,))
    assert MultiIndex.unit(3, 2) == (0, 0, 1) and MultiIndex.zero(2) == (0, 0)


def test_table_contract():
    t = marg({(0,): 0.5, (2,): 0.25}, K=3)
    assert t[(1,)] == 0.0 and t[(2,)] == 0.25
    with pytest.raises(KeyError):
        t[(4,)]
    with pytest.raises(ValueError):
        marg({(7,): 0.1})
    with pytest.raises(ValueError):
        marg({(0,): -1e-6})
    marg({(0,): -1e-13})
    with pytest.raises(TypeError):
        t._entries[(0,)] = 1.0


def test_delta_is_identity():
    b = marg({(0,): 0.2, (3,): 0.7, (6,): 0.1})
    out = convolve(delta_table(1, Truncation(6)), b)
    assert out[(3,)] == pytest.approx(0.7) and out.total() == pytest.approx(1.0)


def test_binomial_square():
    a = marg({(0,): 0.5, (1,): 0.5})
    out = convolve(a, a)
    assert {k: v for k, v in out.items() if v} == {(0,): 0.25, (1,): 0.5, (2,): 0.25}


def test_joint_population_adds():
    trunc = Truncation(3, 4)
    a = CoeffTable({(1, 0): 1.0}, 1, trunc)
    out = convolve(a, a)
    assert out[(2, 0)] == pytest.approx(1.0) and out.total() == pytest.approx(1.0)


def test_mixed_forms_rejected():
    with pytest.raises(ValueError):
        convolve(marg({(0,): 1.0}), CoeffTable({(1, 0): 1.0}, 1, Truncation(3, 2)))


def test_powers():
    a = marg({(0,): 0.5, (1,): 0.5})
    zero = convolve_power(a, 0)
    assert {k: v for k, v in zero.items() if v} == {(0,): 1.0}
    assert convolve_power(a, 1)[(1,)] == 0.5
    cube = convolve_power(a, 3)
    np.testing.assert_allclose([cube[(i,)] for i in range(4)], [0.125, 0.375, 0.375, 0.125])
    with pytest.raises(ValueError):
        convolve_power(a, -1)


def test_truncation_crops_by_order():
    a = CoeffTable({(0, 0): 0.5, (1, 0): 0.25, (0, 1): 0.25}, 2, Truncation(2))
    sq = convolve(a, a)
    assert all(sum(k) <= 2 for k in sq)
    assert sq[(1, 1)] == pytest.approx(2 * 0.25 * 0.25)


def test_marginalize_and_evaluate():
    j = CoeffTable({(0, 1): 0.3, (2, 1): 0.2, (1, 0): 0.5}, 1, Truncation(2, 3))
    m = j.marginalize_population()
    assert m[(1,)] == pytest.approx(0.5) and m[(0,)] == pytest.approx(0.5)
    assert j.evaluate([0.5], u=0.5) == pytest.approx(0.3 * 0.5 + 0.2 * 0.125 + 0.5 * 0.5)


@st.composite
def tables(draw, n=2, K=4):
    keys = [(a, b) for a in range(K + 1) for b in range(K + 1) if a + b <= K]
    vals = draw(st.lists(st.floats(0.0, 1.0), min_size=len(keys), max_size=len(keys)))
    return CoeffTable(dict(zip(keys, vals)), n, Truncation(K))


def _close(x, y, tol=1e-12):
    return all(abs(x[k] - y[k]) < tol for k in set(x) | set(y))


@given(tables(), tables())
def test_commutative(a, b):
    assert _close(convolve(a, b), convolve(b, a))


@given(tables(), tables(), tables())
def test_associative(a, b, c):
    assert _close(convolve(convolve(a, b), c), convolve(a, convolve(b, c)), 1e-11)


@given(st.lists(st.floats(0.0, 1.0), min_size=3, max_size=3), st.integers(0, 5))
def test_power_mass(vals, i):
    a = marg({(0,): vals[0], (1,): vals[1], (2,): vals[2]}, K=10)
    assert convolve_power(a, i).total() == pytest.approx(a.total() ** i, rel=1e-12, abs=1e-14)


def test_powers_in_one_pass_match_repeated_products():
    a = marg({(0,): 0.2, (1,): 0.3, (4,): 0.5})
    powers = convolve_powers(a, 4)
    acc = delta_table(1, Truncation(6))
    for p in powers:
        assert _close(p, acc)
        acc = convolve(acc, a)
