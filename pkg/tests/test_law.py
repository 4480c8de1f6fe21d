import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from mbcross import B_eval, LawError, make_crossing_set, make_law, phi_eval
from mbcross.law import CrossingSet, as_crossing_set, phi_coefficients

from strategies import law_and_set, laws, unit_vector


def test_single_death_rate():
    law = make_law({0: 1.0})
    assert law.b1 == -1.0
    assert law.max_offspring == 0


def test_birth_death_generator():
    law = make_law({0: 1.0, 2: 1.0})
    assert law.b1 == -2.0
    assert law.max_offspring == 2
    np.testing.assert_array_equal(law.coefficients(), [1.0, -2.0, 1.0])


def test_string_keys_from_json():
    assert make_law({"0": 1.0, "3": 2.0}).as_dict() == {0: 1.0, 3: 2.0}


def test_zero_rates_dropped():
    law = make_law({0: 1.0, 2: 0.0, 4: 0.5})
    assert law.as_dict() == {0: 1.0, 4: 0.5}
    assert law.max_offspring == 4


@pytest.mark.parametrize("rates", [{1: 5.0}, {}, {0: 0.0}, {0: -1.0, 2: 2.0}, {-2: 1.0},
                                   {0.5: 1.0}, {0: float("nan")}, {0: float("inf")}])
def test_bad_laws_rejected(rates):
    with pytest.raises(LawError):
        make_law(rates)


def test_support_cap():
    make_law({0: 1.0, 64: 1.0})
    with pytest.raises(LawError):
        make_law({0: 1.0, 65: 1.0})
    make_law({0: 1.0, 65: 1.0}, max_support=100)


def test_crossing_set_validation():
    assert make_crossing_set([2, 0]).members == (0, 2)
    for bad in ([1], [0, 0], [-1]):
        with pytest.raises(LawError):
            make_crossing_set(bad)
    with pytest.raises(LawError):
        make_crossing_set([3], make_law({0: 1.0, 2: 1.0}))
    N = as_crossing_set([0, 2])
    assert isinstance(N, CrossingSet) and N.index(2) == 1 and len(N) == 2


def test_B_eval_examples():
    assert B_eval(make_law({0: 1, 2: 1}), 0.0) == 1.0
    assert B_eval(make_law({0: 1, 3: 1}), 0.5) == pytest.approx(2 * (0.5 - 0.5 + 0.5 * 0.125))
    assert B_eval(make_law({0: 1, 3: 1}), 0.5) == pytest.approx(0.125)
    with pytest.raises(ValueError):
        B_eval(make_law({0: 1}), 1.5)


def test_phi_examples():
    bd = make_law({0: 1, 2: 1})
    assert phi_eval(bd, [0], 0.5, [0.0]) == pytest.approx(-0.75)
    assert phi_eval(bd, [2], 1.0, [0.0]) == pytest.approx(-1.0)
    # b(pv - y + qy^2) with b = 2, p = q = 1/2
    for v in (0.1, 0.6):
        assert phi_eval(bd, [0], 0.3, [v]) == pytest.approx(2 * (0.5 * v - 0.3 + 0.5 * 0.09))
    with pytest.raises(ValueError):
        phi_eval(bd, [0], 0.5, [0.1, 0.2])
    with pytest.raises(ValueError):
        phi_eval(bd, [0], 0.5, [1.2])


@given(laws())
def test_B_vanishes_at_one(law):
    assert abs(B_eval(law, 1.0)) < 1e-14 * max(1.0, law.total_rate)


@given(law_and_set(), st.floats(0.0, 1.0))
def test_phi_at_unit_v_is_B(pair, u):
    law, N = pair
    assert abs(phi_eval(law, N, u, [1.0] * len(N)) - B_eval(law, u)) < 1e-14 * max(1.0, law.total_rate)


@given(law_and_set(), st.floats(0.0, 1.0), st.data())
def test_phi_monotone_in_v(pair, u, data):
    law, N = pair
    v = data.draw(unit_vector(len(N)))
    i = data.draw(st.integers(0, len(N) - 1))
    w = list(v)
    w[i] = min(1.0, w[i] + data.draw(st.floats(0.0, 1.0)))
    assert phi_eval(law, N, u, w) >= phi_eval(law, N, u, v) - 1e-14


def test_phi_coefficients_layout():
    law = make_law({0: 1.0, 2: 3.0})
    np.testing.assert_allclose(phi_coefficients(law, make_crossing_set([2]), [0.25]),
                               [1.0, -4.0, 0.75])
    assert math.isclose(law.total_rate, 4.0)
