import json

import numpy as np
import pytest

from matschro import (DegenerateProjectionError, build_H, build_power_nls_potential, factorize, make_grid,
                      psi_on_grid, zero_potential)
from matschro.grid import sech
from matschro.identities import exact_resonance
from matschro.threshold import (build_P, build_Q, build_T, leading_coefficient, rank_one_identities,
                                verify_resonance, write_report)


def test_P_projects_onto_ab(cubic_threshold):
    _, fp = cubic_threshold
    P = build_P(fp)
    ab = fp.ab.astype(complex)
    np.testing.assert_allclose(P.apply(ab), ab, atol=1e-12)
    assert np.trace(P.matrix).real == pytest.approx(1.0, abs=1e-12)
    Q = build_Q(fp)
    assert np.max(np.abs(Q.apply(ab))) < 1e-12
    np.testing.assert_allclose((P @ P).matrix, P.matrix, atol=1e-12)


def test_T_is_self_adjoint(cubic_threshold):
    result, _ = cubic_threshold
    T = result.T.matrix
    assert np.max(np.abs(T - T.conj().T)) < 1e-12 * np.max(np.abs(T))


def test_zero_potential_T_and_P():
    g = make_grid(20, 128)
    fp = factorize(zero_potential(g))
    np.testing.assert_array_equal(build_T(fp).matrix, np.eye(2 * g.n))
    with pytest.raises(DegenerateProjectionError):
        build_P(fp)


def test_cubic_is_irregular_rank_one(cubic_threshold):
    result, _ = cubic_threshold
    assert result.cls.kind == "Irregular"
    assert result.cls.rank == 1
    assert result.cls.singular_gap > 1e3


def test_phi_aligns_with_exact(cubic_threshold, cubic_grid):
    result, fp = cubic_threshold
    phi = result.resonance.phi.values
    exact = fp.apply_v2(exact_resonance(cubic_grid.x).astype(complex))
    cos = abs(np.vdot(exact, phi)) / (np.linalg.norm(exact) * np.linalg.norm(phi))
    assert cos > 0.999


def test_cubic_constants(cubic_threshold, cubic_grid):
    rd = cubic_threshold[0].resonance
    assert rd.normalized
    assert abs(rd.c0 - 1) < 1e-6
    assert abs(rd.c1) < 1e-6
    assert max(abs(rd.c2_plus), abs(rd.c2_minus)) < 1e-6
    # eta = 1/||v2 Psi||^2 with Psi = (tanh^2, -sech^2): the integral of
    # (a tanh^2 - b sech^2)^2 + (b tanh^2 - a sech^2)^2 equals 24/5
    assert rd.eta == pytest.approx(5 / 24, abs=1e-5)
    assert rd.d == pytest.approx(-2j * rd.eta, rel=1e-12)
    assert abs(abs(rd.c0) ** 2 + abs(rd.c1) ** 2 - 1) < 1e-12


def test_eta_oracle_by_quadrature():
    from scipy.integrate import quad
    s = lambda x: sech(x) ** 2
    a2_plus_b2 = lambda x: 4 * s(x)          # a^2 + b^2 = V1
    two_ab = lambda x: 2 * s(x)             # 2ab = V2
    t2 = lambda x: 1 - s(x)
    f = lambda x: a2_plus_b2(x) * (t2(x) ** 2 + s(x) ** 2) - 2 * two_ab(x) * t2(x) * s(x)
    val, _ = quad(f, -40, 40, limit=200)
    assert val == pytest.approx(24 / 5, rel=1e-10)


def test_resonance_equation(cubic_threshold, cubic_grid):
    rd = cubic_threshold[0].resonance
    H = build_H(build_power_nls_potential(cubic_grid, 1.0))
    exact = exact_resonance(cubic_grid.x)
    assert verify_resonance(exact, H) < 1e-6
    assert verify_resonance(exact[::-1], H, energy=-1.0) < 1e-6
    assert verify_resonance(rd.psi, H) < 1e-4
    assert rd.residuals["resonance_eq"] < 1e-4


def test_psi_matches_exact(cubic_threshold, cubic_grid):
    rd = cubic_threshold[0].resonance
    exact = exact_resonance(cubic_grid.x)
    assert np.max(np.abs(rd.psi.values - exact)) < 1e-3


def test_rank_one_identities(cubic_threshold):
    result, fp = cubic_threshold
    r = rank_one_identities(fp, result.resonance, T=result.T)
    assert max(r.values()) < 1e-6


def test_leading_coefficient(cubic_threshold):
    result, fp = cubic_threshold
    _, rel = leading_coefficient(fp, result.resonance)
    assert rel < 1e-3


def test_quintic_is_regular(quintic_threshold):
    result, _ = quintic_threshold
    assert result.cls.kind == "Regular"
    assert result.resonance is None
    assert result.cls.singular_gap > 1e3


def test_psi_on_grid(cubic_threshold):
    result, fp = cubic_threshold
    target = make_grid(64, 4096)
    psi = psi_on_grid(result.resonance, fp, target).values
    exact = exact_resonance(target.x)
    assert np.max(np.abs(psi - exact)) < 1e-3


def test_scaled_resonance(cubic_threshold):
    rd = cubic_threshold[0].resonance
    s = rd.scaled(2.0)
    assert s.c0 == 2 * rd.c0
    assert s.eta == pytest.approx(rd.eta / 4)


def test_write_report(tmp_path, cubic_threshold, quintic_threshold):
    p = tmp_path / "res.json"
    rep = write_report(cubic_threshold[0], p, provenance={"config_hash": "abc"})
    loaded = json.loads(p.read_text())
    assert loaded["kind"] == "Irregular" and loaded["rank"] == 1
    assert loaded["c0"][0] == pytest.approx(1.0, abs=1e-6)
    assert loaded["provenance"]["config_hash"] == "abc"
    assert rep["eta"] == loaded["eta"]
    rep = write_report(quintic_threshold[0], tmp_path / "q.json")
    assert rep["kind"] == "Regular" and "c0" not in rep
