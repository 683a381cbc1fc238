import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from matschro import (ConfigurationError, FactorizationError, MatrixPotential, build_H, build_H0,
                      build_power_nls_potential, factorize, load_tabulated_potential, make_grid, zero_potential)
from matschro.operators import (band_limited_probe, decay_margin_check, l_minus_min_eigenvalue, sigma1,
                                symmetry_residuals)


@pytest.fixture(scope="module")
def g512():
    return make_grid(20, 512)


def test_power_nls_values_at_origin():
    g = make_grid(20, 64)
    i0 = g.n // 2
    assert g.x[i0] == 0
    V = build_power_nls_potential(g, 1.0)
    assert (V.V1[i0], V.V2[i0]) == (4.0, 2.0)
    V = build_power_nls_potential(g, 2.0)
    assert (V.V1[i0], V.V2[i0]) == (9.0, 6.0)
    assert V.beta == pytest.approx(4 - np.sqrt(2))


@pytest.mark.parametrize("sigma", [0.5, 1.0, 2.0, 3.0])
def test_power_nls_positivity(sigma, g512):
    V = build_power_nls_potential(g512, sigma)
    np.testing.assert_allclose(V.V1 - V.V2, (sigma + 1) / np.cosh(sigma * g512.x) ** 2, atol=1e-14)
    assert np.all(V.V1 >= np.abs(V.V2))


def test_power_nls_rejects_bad_sigma(g512):
    with pytest.raises(ConfigurationError):
        build_power_nls_potential(g512, 0.0)


def test_factorize_cubic_origin(g512):
    fp = factorize(build_power_nls_potential(g512, 1.0))
    i0 = g512.n // 2
    assert fp.a[i0] == pytest.approx((np.sqrt(6) + np.sqrt(2)) / 2, abs=1e-14)
    assert fp.b[i0] == pytest.approx((np.sqrt(6) - np.sqrt(2)) / 2, abs=1e-14)
    assert max(fp.residuals()) < 1e-12


def test_factorize_pauli_structure(g512):
    fp = factorize(build_power_nls_potential(g512, 1.0))
    v = np.array([[fp.a, fp.b], [fp.b, fp.a]])
    np.testing.assert_array_equal(fp.v2, v)
    np.testing.assert_array_equal(fp.v1, -np.einsum("ij,jkn->ikn", np.diag([1.0, -1.0]), v))


def test_factorize_without_V2(g512):
    V1 = 3 * np.exp(-g512.x ** 2)
    fp = factorize(MatrixPotential(g512, V1, np.zeros(g512.n)))
    np.testing.assert_allclose(fp.a, np.sqrt(V1), atol=1e-15)
    assert np.max(np.abs(fp.b)) < 1e-15


def test_factorize_reports_violating_node(g512):
    V1 = np.exp(-g512.x ** 2)
    V2 = V1.copy()
    V2[300] = 2 * V1[300] + 0.1
    with pytest.raises(FactorizationError) as err:
        factorize(MatrixPotential(g512, V1, V2))
    assert err.value.node == 300


def test_H0_symbols(g512):
    H0 = build_H0(g512)
    xi0 = 5 * 2 * np.pi / g512.length
    e = np.exp(1j * xi0 * g512.x)
    z = np.zeros_like(e)
    np.testing.assert_allclose(H0(np.array([e, z])), np.array([(xi0 ** 2 + 1) * e, z]), atol=1e-10)
    np.testing.assert_allclose(H0(np.array([z, e])), np.array([z, -(xi0 ** 2 + 1) * e]), atol=1e-10)
    one = np.array([np.ones(g512.n), np.zeros(g512.n)])
    np.testing.assert_allclose(H0(one), one, atol=1e-12)


def test_build_H0_rejects_nonpositive_mu(g512):
    with pytest.raises(ConfigurationError):
        build_H0(g512, 0.0)


def test_symmetry_residuals(g512):
    r3, r1 = symmetry_residuals(build_H(build_power_nls_potential(g512, 1.0)))
    assert r3 < 1e-10 and r1 < 1e-10
    r3, r1 = symmetry_residuals(build_H0(g512))
    assert r3 < 1e-12 and r1 < 1e-12
    V = build_power_nls_potential(g512, 1.0)
    flipped = MatrixPotential(g512, V.V1, -V.V2)
    assert symmetry_residuals(build_H(flipped))[1] < 1e-10


def test_dense_matches_apply(g512):
    H = build_H(build_power_nls_potential(g512, 1.0))
    assert H.dense_matches_apply() < 1e-8


def test_l_minus_kernel_is_ground_state():
    # L- = -d^2 + 1 - 2 sech^2 annihilates sech, so its bottom eigenvalue is 0
    V = build_power_nls_potential(make_grid(20, 256), 1.0)
    assert abs(l_minus_min_eigenvalue(V)) < 1e-10


def test_decay_margin(g512):
    V = build_power_nls_potential(make_grid(10, 512), 1.0)
    rate, required, ok = decay_margin_check(V)
    assert rate == pytest.approx(2.0, abs=0.05)
    assert required == pytest.approx(np.sqrt(2) + V.beta)
    assert ok


def test_zero_potential(g512):
    Z = zero_potential(g512)
    assert Z.is_zero
    V1, V2 = Z.at(np.array([0.3, 100.0]))
    assert np.all(V1 == 0) and np.all(V2 == 0)


def test_tabulated_roundtrip(tmp_path, g512):
    x = np.linspace(-15, 15, 3001)
    path = tmp_path / "pot.txt"
    np.savetxt(path, np.column_stack([x, 4 / np.cosh(x) ** 2, 2 / np.cosh(x) ** 2]), header="x V1 V2")
    V = load_tabulated_potential(str(path), g512)
    ref = build_power_nls_potential(g512, 1.0)
    assert np.max(np.abs(V.V1 - ref.V1)) < 1e-4
    assert np.max(np.abs(V.V2 - ref.V2)) < 1e-4


def test_tabulated_rejects_garbage(tmp_path, g512):
    p = tmp_path / "bad.txt"
    p.write_text("1 2\n")
    with pytest.raises(ConfigurationError):
        load_tabulated_potential(str(p), g512)
    with pytest.raises(ConfigurationError):
        load_tabulated_potential(str(tmp_path / "missing.txt"), g512)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 10 ** 6), sigma=st.sampled_from([1.0, 1.5, 2.0]))
def test_sigma1_anticommutes_with_H(seed, sigma):
    g = make_grid(15, 256)
    H = build_H(build_power_nls_potential(g, sigma))
    f = band_limited_probe(g, np.random.default_rng(seed))
    assert np.max(np.abs(sigma1(H(sigma1(f))) + H(f))) < 1e-9 * max(1, np.max(np.abs(H(f))))


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 10 ** 6))
def test_H_sigma3_adjoint(seed):
    # <sigma3 H f, g> = <f, sigma3 H g> because H^* = sigma3 H sigma3
    g = make_grid(15, 256)
    H = build_H(build_power_nls_potential(g, 1.0))
    r = np.random.default_rng(seed)
    f = band_limited_probe(g, r)
    h = band_limited_probe(g, r)
    s3 = np.array([[1], [-1]])
    lhs = g.quad(np.sum(np.conj(s3 * H(f)) * h, axis=0))
    rhs = g.quad(np.sum(np.conj(f) * (s3 * H(h)), axis=0))
    assert abs(lhs - rhs) < 1e-8 * max(1, abs(lhs))
