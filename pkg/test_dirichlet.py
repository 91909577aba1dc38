from fractions import Fraction
from math import pi

import numpy as np
import pytest

from mertens_lib.dirichlet import (
    BVMismatch,
    Interpretation,
    benito_varona_M,
    benito_varona_sweep,
    convolve_with_f,
    dirichlet_inverse_f,
    f_value,
    f_values,
    h,
)
from mertens_lib.errors import ParameterError
from mertens_lib.sieve import mertens_table


def test_f_is_periodic_mod_six():
    assert list(f_values(12)[1:]) == [2, 0, -1, 0, 2, -3] * 2
    assert [f_value(n) for n in range(1, 7)] == [2, 0, -1, 0, 2, -3]
    assert h(np.arange(4)).tolist() == [h(t) for t in range(4)]


def test_inverse_small_values():
    table = dirichlet_inverse_f(64)
    assert table[1] == Fraction(1, 2)
    assert table[2] == 0
    assert table[4] == 0
    assert table[3] == Fraction(1, 4)
    # denominators are powers of two
    for n in range(1, 65):
        d = table[n].denominator
        assert d & (d - 1) == 0


def test_inverse_convolves_to_identity():
    table = dirichlet_inverse_f(600)
    for n in range(1, 601):
        assert convolve_with_f(table, n) == (1 if n == 1 else 0), n


def test_inverse_zero_density():
    table = dirichlet_inverse_f(10**5)
    assert abs(table.zero_density() - (1 - 6 / pi ** 2)) < 0.01


def test_inverse_limit_validation():
    with pytest.raises(ParameterError):
        dirichlet_inverse_f(0)
    table = dirichlet_inverse_f(10)
    with pytest.raises(ParameterError):
        table.value(11)


def test_alternative_identity_reproduces_M():
    M = mertens_table(3000)
    for x in (4, 5, 6, 10, 97, 100, 1000, 2999):
        assert benito_varona_M(x) == M[x], x


def test_sweep_with_derived_reading_passes():
    report = benito_varona_sweep(range(4, 1500))
    assert report.checked == 1496
    assert report.passed
    assert report.to_dict()["interpretation"] == "derived"


def test_sweep_reports_mismatches_as_data():
    report = benito_varona_sweep(range(4, 200), interpretation=Interpretation.LITERAL_UNIT_K)
    assert report.checked == 196
    for mismatch in report.mismatches:
        assert isinstance(mismatch, BVMismatch)
        assert mismatch.got != mismatch.expected


def test_desk_limit():
    with pytest.raises(ParameterError):
        benito_varona_M(10**5 + 1)
