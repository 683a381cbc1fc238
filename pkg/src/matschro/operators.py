"""Matrix Schrodinger operators H = H0 + V on a periodic grid.

    H0 = [[-d^2 + mu, 0], [0, d^2 - mu]],     V = [[-V1, -V2], [V2, V1]].

Potentials are stored by their two real profiles V1, V2.  The factorization
V = v1 v2 with v2 = [[a, b], [b, a]] and v1 = -sigma3 v2 is what the
threshold analysis works with.
"""
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Optional

import numpy as np
import scipy.fft as sfft
import scipy.linalg as sla

from .errors import ConfigurationError, FactorizationError
from .grid import Grid, sech

PAULI = {
    0: np.eye(2, dtype=complex),
    1: np.array([[0, 1], [1, 0]], dtype=complex),
    2: np.array([[0, -1j], [1j, 0]], dtype=complex),
    3: np.array([[1, 0], [0, -1]], dtype=complex),
}
SIGMA1 = PAULI[1]
SIGMA3 = PAULI[3]


def sigma1(values):
    """Swap components of a (2, n) array."""
    return np.asarray(values)[::-1].copy()


def sigma3(values):
    v = np.array(values, copy=True)
    v[1] = -v[1]
    return v


@dataclass(frozen=True)
class MatrixPotential:
    """Sampled potential profiles; ``profile(x) -> (V1, V2)`` allows off-grid evaluation."""

    grid: Grid
    V1: np.ndarray
    V2: np.ndarray
    mu: float = 1.0
    beta: float = 0.0
    profile: Optional[Callable] = None
    label: str = "tabulated"

    def __post_init__(self):
        if not self.mu > 0:
            raise ConfigurationError(f"mu must be positive, got {self.mu}")
        for name in ("V1", "V2"):
            v = np.asarray(getattr(self, name), dtype=float)
            if v.shape != (self.grid.n,) or not np.all(np.isfinite(v)):
                raise ConfigurationError(f"{name} must be a finite array of length {self.grid.n}")
            object.__setattr__(self, name, v)

    @property
    def is_zero(self):
        return not (np.any(self.V1) or np.any(self.V2))

    def matrix(self):
        """V(x) as an array of shape (2, 2, n)."""
        return np.array([[-self.V1, -self.V2], [self.V2, self.V1]])

    def at(self, x):
        """Evaluate (V1, V2) at arbitrary points (needs ``profile``)."""
        if self.profile is None:
            raise ConfigurationError("tabulated potential has no off-grid profile")
        return self.profile(np.asarray(x))


def zero_potential(grid, mu=1.0):
    z = np.zeros(grid.n)
    return MatrixPotential(grid, z, z, mu=mu, beta=np.inf,
                           profile=lambda x: (np.zeros_like(x, dtype=float),) * 2, label="zero")


def power_nls_profile(sigma):
    def profile(x):
        s2 = sech(sigma * x) ** 2
        return (sigma + 1) ** 2 * s2, sigma * (sigma + 1) * s2
    return profile


def build_power_nls_potential(grid, sigma, mu=1.0):
    """Linearization of |u|^(2 sigma) u around its ground state.

    V1 = (sigma+1)^2 sech^2(sigma x), V2 = sigma (sigma+1) sech^2(sigma x).
    The declared margin is beta = 2 sigma - sqrt(2 mu), the excess of the
    sech^2 decay rate over the threshold rate.
    """
    if not sigma > 0:
        raise ConfigurationError(f"sigma must be positive, got {sigma}")
    prof = power_nls_profile(float(sigma))
    V1, V2 = prof(grid.x)
    beta = 2 * sigma - np.sqrt(2 * mu)
    return MatrixPotential(grid, V1, V2, mu=mu, beta=beta, profile=prof, label=f"power_nls(sigma={sigma})")


def load_tabulated_potential(path, grid, mu=1.0, beta=0.0):
    """Read columns x, V1, V2 (whitespace or comma separated, '#' comments) and interpolate onto ``grid``.

    Outside the tabulated range the potential is taken to be zero.
    """
    try:
        data = np.loadtxt(path, comments="#", delimiter="," if str(path).endswith(".csv") else None, ndmin=2)
    except (OSError, ValueError) as exc:
        raise ConfigurationError(f"cannot read tabulated potential {path}: {exc}") from exc
    if data.shape[1] < 3 or data.shape[0] < 2:
        raise ConfigurationError(f"{path}: need at least two rows of x, V1, V2")
    xt, v1, v2 = data[:, 0], data[:, 1], data[:, 2]
    if np.any(np.diff(xt) <= 0):
        raise ConfigurationError(f"{path}: x column must be strictly increasing")

    def profile(x):
        return np.interp(x, xt, v1, left=0.0, right=0.0), np.interp(x, xt, v2, left=0.0, right=0.0)

    V1, V2 = profile(grid.x)
    return MatrixPotential(grid, V1, V2, mu=mu, beta=beta, profile=profile, label=f"tabulated({path})")


def decay_margin_check(V, beta=None, fraction=0.1, floor=1e-280):
    """Fit the exponential decay rate of |V1|+|V2| on the outer nodes.

    Returns ``(rate, required, ok)`` where ``required = sqrt(2 mu) + beta``.
    Nodes where the potential has underflowed below ``floor`` are skipped;
    an identically vanishing tail counts as infinitely fast decay.
    """
    beta = V.beta if beta is None else beta
    required = np.sqrt(2 * V.mu) + beta
    x = V.grid.x
    mag = np.abs(V.V1) + np.abs(V.V2)
    cut = (1 - fraction) * V.grid.half_width
    sel = (np.abs(x) >= cut) & (mag > floor)
    if sel.sum() < 4:
        return np.inf, required, True
    slope = np.polyfit(np.abs(x[sel]), np.log(mag[sel]), 1)[0]
    rate = -slope
    return rate, required, bool(rate >= required * (1 - 1e-3))


@dataclass(frozen=True)
class FactoredPotential:
    potential: MatrixPotential
    a: np.ndarray
    b: np.ndarray

    @property
    def grid(self):
        return self.potential.grid

    @property
    def v2(self):
        return np.array([[self.a, self.b], [self.b, self.a]])

    @property
    def v1(self):
        return np.array([[-self.a, -self.b], [self.b, self.a]])

    @property
    def ab(self):
        """The vector (a, b) as a (2, n) array."""
        return np.array([self.a, self.b])

    def apply_v1(self, f):
        f = np.asarray(f)
        return np.array([-self.a * f[0] - self.b * f[1], self.b * f[0] + self.a * f[1]])

    def apply_v2(self, f):
        f = np.asarray(f)
        return np.array([self.a * f[0] + self.b * f[1], self.b * f[0] + self.a * f[1]])

    def residuals(self):
        """max |a^2+b^2-V1|, |2ab-V2|, |v1 v2 - V| over nodes."""
        V = self.potential
        r1 = np.max(np.abs(self.a ** 2 + self.b ** 2 - V.V1))
        r2 = np.max(np.abs(2 * self.a * self.b - V.V2))
        prod = np.einsum("ijn,jkn->ikn", self.v1, self.v2)
        r3 = np.max(np.abs(prod - V.matrix()))
        return r1, r2, r3


def ab_from_profiles(V1, V2):
    sp = np.sqrt(V1 + V2)
    sm = np.sqrt(np.maximum(V1 - V2, 0.0))
    return 0.5 * (sp + sm), 0.5 * (sp - sm)


def factorize(V):
    """Square-root factorization V = v1 v2; requires V1 >= |V2| at every node."""
    tol = 1e-14 * max(1.0, np.max(np.abs(V.V1)))
    bad = np.nonzero(V.V1 < np.abs(V.V2) - tol)[0]
    if bad.size:
        j = int(bad[0])
        raise FactorizationError(
            f"V1 < |V2| at node {j} (x={V.grid.x[j]:.6g}: V1={V.V1[j]:.6g}, V2={V.V2[j]:.6g})", node=j)
    V1 = V.V1
    V2 = np.clip(V.V2, -V1, V1)
    a, b = ab_from_profiles(V1, V2)
    return FactoredPotential(V, a, b)


def second_derivative_matrix(grid):
    """Dense spectral d^2/dx^2 as an exactly symmetric circulant matrix."""
    xi = grid.wavenumbers()
    col = sfft.ifft(-(xi ** 2)).real
    col = 0.5 * (col + np.roll(col[::-1], 1))
    return sla.circulant(col)


class OperatorHandle:
    """H0 + V with a matrix-free action and a lazily built dense matrix.

    Dense ordering of unknowns is ``[f1(x_0..x_{n-1}), f2(x_0..x_{n-1})]``.
    """

    def __init__(self, grid, mu=1.0, potential=None):
        self.grid = grid
        self.mu = float(mu)
        self.potential = potential if potential is not None else zero_potential(grid, mu)
        if potential is not None and abs(potential.mu - self.mu) > 0:
            raise ConfigurationError("operator and potential disagree on mu")

    def _lap(self, f):
        return self.grid.derivative(f, 2, denoise=False)

    def apply(self, f):
        """(H f) for a (2, n) array or Field2 values."""
        f = np.asarray(f)
        d2 = self._lap(f)
        V = self.potential
        top = -d2[0] + self.mu * f[0] - V.V1 * f[0] - V.V2 * f[1]
        bot = d2[1] - self.mu * f[1] + V.V2 * f[0] + V.V1 * f[1]
        return np.array([top, bot])

    __call__ = apply

    def apply_H0(self, f):
        f = np.asarray(f)
        d2 = self._lap(f)
        return np.array([-d2[0] + self.mu * f[0], d2[1] - self.mu * f[1]])

    @cached_property
    def dense(self):
        n = self.grid.n
        D2 = second_derivative_matrix(self.grid)
        I = np.eye(n)
        V = self.potential
        H = np.empty((2 * n, 2 * n))
        H[:n, :n] = -D2 + self.mu * I - np.diag(V.V1)
        H[:n, n:] = -np.diag(V.V2)
        H[n:, :n] = np.diag(V.V2)
        H[n:, n:] = D2 - self.mu * I + np.diag(V.V1)
        return H

    def dense_matches_apply(self, n_probes=16, seed=0, band=0.25):
        """Max relative sup discrepancy between dense and matrix-free action."""
        rng = np.random.default_rng(seed)
        worst = 0.0
        for _ in range(n_probes):
            f = band_limited_probe(self.grid, rng, band=band)
            lhs = (self.dense @ f.reshape(-1)).reshape(2, -1)
            rhs = self.apply(f)
            worst = max(worst, np.max(np.abs(lhs - rhs)) / max(1.0, np.max(np.abs(rhs))))
        return worst


def band_limited_probe(grid, rng, band=0.25, decay=None):
    """Random complex (2, n) field with Fourier support in the lowest ``band`` fraction.

    With ``decay`` the probe is additionally multiplied by a Gaussian
    envelope exp(-(x/decay)^2), which makes it decayed but only
    approximately band-limited.
    """
    n = grid.n
    kmax = max(2, int(band * n / 2))
    F = np.zeros((2, n), dtype=complex)
    F[:, :kmax] = rng.normal(size=(2, kmax)) + 1j * rng.normal(size=(2, kmax))
    F[:, n - kmax + 1:] = rng.normal(size=(2, kmax - 1)) + 1j * rng.normal(size=(2, kmax - 1))
    f = sfft.ifft(F, axis=-1)
    f /= np.max(np.abs(f))
    if decay is not None:
        f = f * np.exp(-(grid.x / decay) ** 2)
    return f


def build_H0(grid, mu=1.0):
    if not mu > 0:
        raise ConfigurationError(f"mu must be positive, got {mu}")
    return OperatorHandle(grid, mu)


def build_H(V):
    return OperatorHandle(V.grid, V.mu, V)


def symmetry_residuals(H):
    """(||sigma3 H sigma3 - H^*||, ||sigma1 H sigma1 + H||) as induced sup norms."""
    Hd = H.dense
    n = H.grid.n
    s3 = np.concatenate([np.ones(n), -np.ones(n)])
    perm = np.concatenate([np.arange(n, 2 * n), np.arange(n)])
    r3 = s3[:, None] * Hd * s3[None, :] - Hd.conj().T
    r1 = Hd[np.ix_(perm, perm)] + Hd
    return float(np.linalg.norm(r3, np.inf)), float(np.linalg.norm(r1, np.inf))


def l_minus_min_eigenvalue(V):
    """Smallest eigenvalue of the discrete L- = -d^2 + mu - (V1 - V2).

    This is a spot check of nonnegativity of L-, not a certificate.
    """
    D2 = second_derivative_matrix(V.grid)
    Lm = -D2 + np.diag(V.mu - (V.V1 - V.V2))
    return float(sla.eigvalsh(Lm, subset_by_index=[0, 0])[0])
