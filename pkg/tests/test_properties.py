"""Extra randomized checks outside the acceptance set."""

import math
from fractions import Fraction

from hypothesis import given, settings

from bowsched.cost import resource_cost

from conftest import private
from laws import atus, costs, loads, speeds


@settings(max_examples=300)
@given(speed=speeds, cost=costs, atu=atus, load=loads)
def test_private_cost_is_linear(speed, cost, atu, load):
    got = resource_cost(load, private("f", speed, cost, 1), atu)
    want = Fraction(cost) * (Fraction(load) / Fraction(speed)) / Fraction(atu)
    assert math.isclose(got, float(want), rel_tol=1e-12, abs_tol=1e-300)
