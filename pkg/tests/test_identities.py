import json

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from matschro import DomainError, ResolutionError, make_grid, run_suite
from matschro.identities import (closed_form_laplace_check, derivative_table_check, f1_f2_factorized_check,
                                 g31_closed_form, laplace_closed_form, laplace_fourier_consistency,
                                 laplace_transform, laplace_zero_check, null_structure_check,
                                 quadratic_coefficient_check, reports_to_json, sech_fourier_closed_forms,
                                 sech_fourier_suite)


def _laplace_mp(s):
    mpmath.mp.dps = 30
    f = lambda y: mpmath.exp(-s * y) * (2 * mpmath.sech(y) ** 2 - 6 * mpmath.sech(y) ** 4)
    return float(mpmath.quad(f, [-mpmath.inf, 0, mpmath.inf]))


@pytest.mark.parametrize("s", [0.0, 0.7, -1.3, 1.9])
def test_laplace_against_mpmath(s):
    assert laplace_transform(s) == pytest.approx(_laplace_mp(s), abs=1e-9)


def test_laplace_examples():
    assert laplace_transform(1.0) == pytest.approx(-np.pi, abs=1e-10)
    assert laplace_closed_form(0.0) == -4.0
    assert laplace_transform(0.0) == pytest.approx(-4.0, abs=1e-10)
    assert laplace_zero_check().passed


def test_laplace_domain():
    for s in (2.0, -2.5):
        with pytest.raises(DomainError):
            laplace_transform(s)


@settings(max_examples=25, deadline=None)
@given(s=st.floats(-1.8, 1.8))
def test_laplace_closed_form_property(s):
    assert abs(laplace_transform(s) - laplace_closed_form(s)) < 1e-6


def test_laplace_suites():
    r = closed_form_laplace_check()
    assert r.passed and r.details["n_points"] == 37
    assert r.details["symmetry"] < 1e-9
    assert laplace_fourier_consistency().passed


def test_sech_fourier_examples():
    cf = sech_fourier_closed_forms(np.array([0.0]))
    assert cf[1][0] == pytest.approx(1.25331, abs=1e-5)
    assert cf[2][0] == pytest.approx(0.79788, abs=1e-5)
    reps = sech_fourier_suite()
    assert all(r.passed for r in reps), [(r.name, r.residual) for r in reps]
    # truncation at |x| = 20 costs about 3e-9
    assert reps[0].details["at_0"] == pytest.approx(np.sqrt(np.pi / 2), abs=1e-8)


def test_sech_fourier_against_mpmath():
    mpmath.mp.dps = 25
    xi = 1.7
    num = mpmath.quad(lambda x: mpmath.cos(xi * x) * mpmath.sech(x) ** 4, [-mpmath.inf, 0, mpmath.inf])
    assert sech_fourier_closed_forms(np.array([xi]))[4][0] == pytest.approx(float(num) / np.sqrt(2 * np.pi),
                                                                           abs=1e-14)


def test_derivative_table():
    assert derivative_table_check().passed


def test_quadratic_coefficients():
    r = quadratic_coefficient_check()
    assert r.passed, r.details


def test_g31_closed_form_examples():
    # 25 sqrt(pi) sech(pi) = 3.822595...
    assert g31_closed_form(np.array([2.0]))[0] == pytest.approx(-3.822595j, abs=1e-6)
    np.testing.assert_array_equal(g31_closed_form(np.array([-1.0, 0.0, 1.0])), 0)


def test_null_structure():
    reps = null_structure_check() + f1_f2_factorized_check()
    assert all(r.passed for r in reps), [(r.name, r.residual) for r in reps]
    at2 = next(r for r in reps if r.name == "G31_closed_form").details["at_2"]
    assert at2 == pytest.approx(-3.822595j, abs=1e-6)


@pytest.mark.parametrize("hw, n", [(40, 512), (24, 4096)])
def test_null_structure_resolution_guard(hw, n):
    with pytest.raises(ResolutionError):
        null_structure_check(make_grid(hw, n))


def test_run_suite_and_json(tmp_path):
    reps = run_suite()
    assert len(reps) == 17
    assert all(r.passed for r in reps), [r.name for r in reps if not r.passed]
    assert len(run_suite(cubic=False)) < 17
    p = tmp_path / "v.json"
    reports_to_json(reps, p, {"config_hash": "h"})
    data = json.loads(p.read_text())
    assert data["provenance"]["config_hash"] == "h"
    names = [r["name"] for r in data["reports"]]
    assert "null_structure_G31_hat_pm1" in names
    assert all(r["pass"] for r in data["reports"])
