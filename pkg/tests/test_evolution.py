import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from matschro import (ConfigurationError, DomainError, PropagatorConfig, build_H, build_power_nls_potential,
                      ft0_free, ft_operator, gt_integral, make_grid, propagate, zero_potential)
from matschro.evolution import (fresnel_constant, free_gaussian, gt_asymptote, gt_asymptotic_error,
                                gt_two_sided_error, read_series_csv, write_series_csv)
from matschro.grid import sech
from matschro.identities import exact_resonance


@pytest.mark.parametrize("kwargs", [
    {"method": "leapfrog"}, {"dt": 0.0}, {"dt": 0.02}, {"t_samples": (0.5,)}, {"t_samples": (3.0, 2.0)},
    {"t_samples": (250.0,)}, {"direction": 0}, {"sponge": 0.6},
])
def test_config_validation(kwargs):
    with pytest.raises(ConfigurationError):
        PropagatorConfig(**kwargs)


def test_free_gaussian_propagation():
    g = make_grid(100, 2048)
    H0 = build_H(zero_potential(g))
    f = np.array([np.exp(-g.x ** 2), np.zeros(g.n)])
    ev = propagate(H0, f, PropagatorConfig(t_samples=(10.0,)))
    exact = free_gaussian(g.x, 10.0)
    err = np.max(np.abs(ev[10.0][0] - exact)) / np.max(np.abs(exact))
    assert err < 1e-2


@pytest.fixture(scope="module")
def small_cubic():
    g = make_grid(15, 256)
    H = build_H(build_power_nls_potential(g, 1.0))
    f = np.array([np.exp(-(g.x - 1) ** 2), 0.5 * np.exp(-g.x ** 2)], dtype=complex)
    ref = propagate(H, f, PropagatorConfig(method="dense-exponential", t_samples=(2.0,)))[2.0]
    return H, f, ref


def _err(H, f, ref, dt, method="split-step"):
    U = propagate(H, f, PropagatorConfig(method=method, dt=dt, t_samples=(2.0,)))[2.0]
    return np.max(np.abs(U - ref)) / np.max(np.abs(ref))


def test_split_step_matches_expm(small_cubic):
    assert _err(*small_cubic, dt=0.0025) < 1e-4


def test_split_step_second_order(small_cubic):
    ratio = _err(*small_cubic, dt=0.01) / _err(*small_cubic, dt=0.005)
    assert 3.2 < ratio < 4.8


def test_crank_nicolson_matches_expm(small_cubic):
    assert _err(*small_cubic, dt=0.005, method="crank-nicolson") < 1e-2


def test_backward_direction_inverts(small_cubic):
    H, f, ref = small_cubic
    back = propagate(H, ref, PropagatorConfig(method="dense-exponential", t_samples=(2.0,), direction=-1))[2.0]
    np.testing.assert_allclose(back, f, atol=1e-8)


def test_boundary_guard():
    g = make_grid(40, 1024)
    H0 = build_H(zero_potential(g))
    f = np.array([np.exp(-g.x ** 2), np.zeros(g.n)])
    ev = propagate(H0, f, PropagatorConfig(t_samples=(1.0, 60.0)))
    assert not ev.flags[1.0]
    assert ev.flags[60.0]
    assert ev.first_flagged() == 60.0
    assert ev.times == [1.0, 60.0]


# -- F_t and F_t^0 --------------------------------------------------------------

@pytest.fixture(scope="module")
def exact_psi(cubic_grid):
    return exact_resonance(cubic_grid.x).astype(complex)


def test_ft_scaling(cubic_grid, exact_psi):
    # g is orthogonal to Psi2 = -sech^2, so only the e11-type term survives
    # and |F_t f| scales exactly as t^{-1/2}
    x = cubic_grid.x
    f = np.array([sech(x) ** 2 - 1.25 * sech(x) ** 4, np.zeros_like(x)])
    F4 = ft_operator(exact_psi, 4.0, cubic_grid)
    F16 = ft_operator(exact_psi, 16.0, cubic_grid)
    assert abs(F4.pairings(f)[1]) < 1e-12
    ratio = np.max(np.abs(F4(f))) / np.max(np.abs(F16(f)))
    assert ratio == pytest.approx(2.0, abs=1e-6)


def test_ft_null_space(cubic_grid, exact_psi, rng):
    F = ft_operator(exact_psi, 3.0, cubic_grid)
    f = rng.normal(size=(2, cubic_grid.n)) * np.exp(-cubic_grid.x ** 2 / 20)
    s3p = np.array([exact_psi[0], -exact_psi[1]])
    s3s1p = np.array([exact_psi[1], -exact_psi[0]])
    # Gram-Schmidt f against both pairing vectors
    A = np.stack([s3p.reshape(-1), s3s1p.reshape(-1)], axis=1)
    coef = np.linalg.lstsq(A, f.reshape(-1), rcond=None)[0]
    f0 = (f.reshape(-1) - A @ coef).reshape(2, -1)
    assert np.max(np.abs(F(f0))) < 1e-12
    with pytest.raises(DomainError):
        ft_operator(exact_psi, 0.5, cubic_grid)


def test_ft_pairings_against_quad(cubic_grid, exact_psi):
    from scipy.integrate import quad
    x = cubic_grid.x
    f = np.array([np.exp(-x ** 2), x * np.exp(-x ** 2)])
    a, b = ft_operator(exact_psi, 2.0, cubic_grid).pairings(f)
    a_ref = quad(lambda s: np.tanh(s) ** 2 * np.exp(-s * s) + sech(s) ** 2 * s * np.exp(-s * s), -20, 20)[0]
    b_ref = quad(lambda s: -sech(s) ** 2 * np.exp(-s * s) - np.tanh(s) ** 2 * s * np.exp(-s * s), -20, 20)[0]
    assert a == pytest.approx(a_ref, abs=1e-12)
    assert b == pytest.approx(b_ref, abs=1e-12)


def test_ft0_kernel_modulus_and_blocks():
    F = ft0_free(1.0, 7.0)
    K = F.kernel(np.linspace(-5, 5, 11), 2.0)
    np.testing.assert_allclose(np.abs(K[:, 0, 0]), 1 / np.sqrt(4 * np.pi * 7), rtol=1e-14)
    assert np.all(K[:, 1, :] == 0) and np.all(K[:, 0, 1] == 0)
    Km = ft0_free(1.0, 7.0, "minus").kernel(1.5, -0.5)
    Kp = ft0_free(1.0, -7.0).kernel(1.5, -0.5)
    s1 = np.array([[0, 1], [1, 0]])
    np.testing.assert_allclose(Km, s1 @ Kp @ s1, atol=1e-15)
    with pytest.raises(DomainError):
        ft0_free(1.0, 0.2)


def test_ft0_apply_matches_kernel():
    g = make_grid(20, 512)
    f = np.array([np.exp(-g.x ** 2), np.exp(-(g.x - 1) ** 2)])
    F = ft0_free(1.0, 5.0)
    out = F.apply(g, f)
    K = F.kernel(g.x[:, None], g.x[None, :])
    ref = np.einsum("xyij,jy->ix", K, f) * g.dx
    np.testing.assert_allclose(out, ref, atol=1e-13)


# -- the Fresnel integral G_t -----------------------------------------------------

def _chi_mp(s):
    a = abs(s)
    step = lambda u: mpmath.exp(-1 / u) if u > 0 else mpmath.mpf(0)
    up, down = step(2 - a), step(a - 1)
    return up / (up + down)


def _gt_mpmath(t, r):
    mpmath.mp.dps = 30
    f = lambda z: mpmath.exp(1j * (t * z * z + r * z)) * _chi_mp(z * z)
    pts = [-mpmath.sqrt(2), -1, 0, 1, mpmath.sqrt(2)]
    return complex(mpmath.quad(f, pts, maxdegree=10))


@pytest.mark.parametrize("t, r", [(3.0, 1.0), (10.0, 0.0)])
def test_gt_against_mpmath(t, r):
    assert abs(gt_integral(t, r) - _gt_mpmath(t, r)) < 1e-10


@settings(max_examples=15, deadline=None)
@given(t=st.floats(1, 60), r=st.floats(0, 40))
def test_gt_even_in_r(t, r):
    assert abs(gt_integral(t, r) - gt_integral(t, -r)) < 1e-12


def test_gt_domain():
    with pytest.raises(DomainError):
        gt_integral(0.5, 0.0)


def test_fresnel_constant_stable():
    ts = np.geomspace(1, 100, 12)
    rs = np.linspace(0, 50, 11)
    C1 = fresnel_constant(ts, rs)
    C2 = fresnel_constant(ts, rs, refine=2)
    assert C1 == pytest.approx(1.26535, abs=1e-4)
    assert abs(C1 - C2) < 1e-8


def test_fresnel_error_bounded_and_decreasing():
    # with chi = 1 near the origin the t^{-3/2} term cancels, so the scaled
    # error decreases rather than levelling off
    e = [gt_asymptotic_error(t, 0.0) for t in (10.0, 20.0, 40.0)]
    assert e[0] > e[1] > e[2]
    assert e[0] < 1.3
    assert gt_two_sided_error(20.0, 3.0, -2.0) < 1.3
    raw = abs(gt_integral(40.0, 5.0) - gt_asymptote(40.0, 5.0))
    assert raw < 1.3 * 40 ** -1.5 * np.sqrt(26)


def test_series_csv_roundtrip(tmp_path):
    rows = [(5.0, 0.3, 0.1, 0.01, False), (6.5, 0.25, 0.07, 0.008, True)]
    p = tmp_path / "s.csv"
    write_series_csv(p, rows, provenance="hash=1")
    back = read_series_csv(p)
    assert back[1]["t"] == 6.5 and back[1]["boundary_flag"] == 1
    assert back[0]["weighted_sup_after_Ft"] == 0.01
    assert p.read_text().startswith("# matschro-norm-series v1 hash=1")
