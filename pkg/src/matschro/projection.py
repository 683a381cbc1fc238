"""Discrete-spectrum projection and the conjugation operator for cubic NLS.

For H1 (the cubic linearization) the discrete spectrum is the
four-dimensional generalized kernel at 0.  Since H^* = sigma3 H sigma3, the
adjoint generalized kernel is sigma3 applied to it, and the Riesz projection
is the biorthogonal projection

    P_d f = sum_jk eta_j (G^-1)_jk <sigma3 eta_k, f>,   G_jk = <sigma3 eta_j, eta_k>.

The conjugation operator Dt intertwines H1 with the free operator,
Dt H1 = H0 Dt, and annihilates the generalized kernel.
"""
from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft
import scipy.linalg as sla

from .errors import ResolutionError
from .grid import Field2, sech
from .operators import second_derivative_matrix, sigma1, sigma3
from .resolvent import KernelOp

SQRT2 = np.sqrt(2.0)
TAIL_MAX = 1e-10


def ground_state(x):
    """Q(x) = sqrt(2) sech(x)."""
    return SQRT2 * sech(x)


@dataclass
class GeneralizedKernelBasis:
    vectors: list
    adjoint_vectors: list
    gram: np.ndarray

    @property
    def grid(self):
        return self.vectors[0].grid

    @property
    def cond(self):
        return float(np.linalg.cond(self.gram))


def make_basis(vectors):
    """Basis object from user-supplied generalized-kernel vectors (Field2 list)."""
    grid = vectors[0].grid
    adj = [Field2(grid, sigma3(v.values)) for v in vectors]
    k = len(vectors)
    G = np.empty((k, k), dtype=complex)
    for j in range(k):
        for m in range(k):
            G[j, m] = grid.quad(np.sum(np.conj(adj[j].values) * vectors[m].values, axis=0))
    basis = GeneralizedKernelBasis(list(vectors), adj, G)
    if not np.isfinite(basis.cond) or basis.cond > 1e8:
        raise ResolutionError(f"Gram matrix of the generalized kernel is singular (cond={basis.cond:.3g})")
    return basis


def generalized_kernel_cubic(grid):
    """(Q,-Q), ((1+x d)Q, (1+x d)Q), (Q', Q'), (xQ, -xQ) with Q = sqrt(2) sech."""
    x = grid.x
    tail = np.sqrt(2) * grid.half_width * sech(grid.half_width)
    if grid.length < 40 or tail > TAIL_MAX:
        raise ResolutionError(
            f"generalized kernel not decayed at the domain ends (|xQ| = {tail:.2g}); use half_width >= 30")
    Q = ground_state(x)
    dQ = -Q * np.tanh(x)
    scal = Q + x * dQ
    vecs = [np.array([Q, -Q]), np.array([scal, scal]), np.array([dQ, dQ]), np.array([x * Q, -x * Q])]
    return make_basis([Field2(grid, v) for v in vecs])


def build_Pd_Ps(basis):
    """Riesz projections (P_d, P_s = I - P_d) as KernelOps."""
    grid = basis.grid
    Ginv = np.linalg.inv(basis.gram)
    E = np.stack([v.values.reshape(-1) for v in basis.vectors], axis=1)
    A = np.stack([v.values.reshape(-1) for v in basis.adjoint_vectors], axis=1)
    Pd = E @ Ginv @ A.conj().T * grid.dx
    Pd = KernelOp(grid, Pd)
    return Pd, KernelOp.identity(grid) - Pd


def apply_Pd(basis, f):
    """Matrix-free P_d f."""
    grid = basis.grid
    f = np.asarray(f)
    coeffs = np.array([grid.quad(np.sum(np.conj(a.values) * f, axis=0)) for a in basis.adjoint_vectors])
    c = np.linalg.solve(basis.gram, coeffs)
    return sum(cj * v.values for cj, v in zip(c, basis.vectors))


def first_derivative_matrix(grid):
    xi = grid.wavenumbers()
    mult = 1j * xi
    mult[grid.n // 2] = 0
    col = sfft.ifft(mult).real
    col = 0.5 * (col - np.roll(col[::-1], 1))
    return sla.circulant(col)


class Conjugation:
    """Dt = (i/2) [[-D1-D2, D1-D2], [-D1+D2, D1+D2]] with

        D1 = (-d^2 + 1) S^2,  D2 = S^2 (-d^2 - 6 sech^2 + 1),  S = d + tanh.

    ``apply`` works in the precision of its input; ``dense`` materializes
    the same operator from spectral differentiation matrices.
    """

    def __init__(self, grid):
        self.grid = grid

    def _S(self, f, x):
        return self.grid.derivative(f, 1, denoise=False) + np.tanh(x) * f

    def D1(self, f):
        x = self.grid.x_as(np.asarray(f).real.dtype)
        g = self._S(self._S(f, x), x)
        return -self.grid.derivative(g, 2, denoise=False) + g

    def D2(self, f):
        x = self.grid.x_as(np.asarray(f).real.dtype)
        g = -self.grid.derivative(f, 2, denoise=False) + (1 - 6 * sech(x) ** 2) * f
        return self._S(self._S(g, x), x)

    def apply(self, f):
        f = np.asarray(f)
        p = self.D1(f[1] - f[0])
        m = self.D2(f[0] + f[1])
        return 0.5j * np.array([p - m, p + m])

    __call__ = apply

    @property
    def dense(self):
        n = self.grid.n
        x = self.grid.x
        D = first_derivative_matrix(self.grid)
        L = second_derivative_matrix(self.grid)
        I = np.eye(n)
        S = D + np.diag(np.tanh(x))
        S2 = S @ S
        D1 = (I - L) @ S2
        D2 = S2 @ (-L + np.diag(1 - 6 * sech(x) ** 2))
        return 0.5j * np.block([[-D1 - D2, D1 - D2], [-D1 + D2, D1 + D2]])


def build_conjugation(grid, dense=True):
    """Dt as a dense KernelOp (``dense=False`` returns the matrix-free object)."""
    C = Conjugation(grid)
    if not dense:
        return C
    return KernelOp(grid, C.dense, absorbed=False)


def smooth_probe(grid, rng, n_bumps=3, max_freq=3.0, width=(0.7, 2.5), spread=6.0):
    """Random decayed smooth (2, n) probe built from modulated Gaussians."""
    x = grid.x
    out = np.zeros((2, grid.n), dtype=complex)
    for comp in range(2):
        for _ in range(n_bumps):
            c = rng.normal() + 1j * rng.normal()
            x0 = rng.uniform(-spread, spread)
            w = rng.uniform(*width)
            k = rng.uniform(-max_freq, max_freq)
            out[comp] += c * np.exp(-((x - x0) / w) ** 2 + 1j * k * x)
    return out / np.max(np.abs(out))


def conjugation_identity_residual(H1, n_probes=8, seed=0, precision=np.longdouble):
    """max over probes of sup|Dt H1 f - H0 Dt f| / sup|H0 Dt f|."""
    grid = H1.grid
    C = Conjugation(grid)
    rng = np.random.default_rng(seed)
    worst = 0.0
    ctype = np.clongdouble if precision == np.longdouble else np.complex128
    V1 = H1.potential.V1.astype(precision)
    V2 = H1.potential.V2.astype(precision)
    mu = precision(H1.mu)

    def H(f, with_V):
        d2 = grid.derivative(f, 2, denoise=False)
        top = -d2[0] + mu * f[0]
        bot = d2[1] - mu * f[1]
        if with_V:
            top = top - V1 * f[0] - V2 * f[1]
            bot = bot + V2 * f[0] + V1 * f[1]
        return np.array([top, bot])

    for _ in range(n_probes):
        f = smooth_probe(grid, rng).astype(ctype)
        lhs = C(H(f, True))
        rhs = H(C(f), False)
        worst = max(worst, float(np.max(np.abs(lhs - rhs)) / np.max(np.abs(rhs))))
    return worst


def conjugation_kills_kernel(basis, precision=np.longdouble):
    """sup |Dt eta_j| for each generalized-kernel vector, computed in extended precision."""
    grid = basis.grid
    C = Conjugation(grid)
    x = grid.x_as(precision)
    Q = np.sqrt(precision(2)) * sech(x)
    dQ = -Q * np.tanh(x)
    scal = Q + x * dQ
    vecs = [np.array([Q, -Q]), np.array([scal, scal]), np.array([dQ, dQ]), np.array([x * Q, -x * Q])]
    return [float(np.max(np.abs(C(v.astype(np.clongdouble))))) for v in vecs]


def l1_block_residual(H1):
    """sup-entry residual of -i J^-1 H1 J = [[0, L-], [-L+, 0]] on the dense matrices."""
    n = H1.grid.n
    H = H1.dense.astype(complex)
    J = np.kron(np.array([[1, 1j], [1, -1j]]) / SQRT2, np.eye(n))
    Jinv = np.kron(np.array([[1, 1], [-1j, 1j]]) / SQRT2, np.eye(n))
    lhs = -1j * Jinv @ H @ J
    L = second_derivative_matrix(H1.grid)
    V = H1.potential
    Lm = -L + np.diag(V.mu - (V.V1 - V.V2))
    Lp = -L + np.diag(V.mu - (V.V1 + V.V2))
    Z = np.zeros((n, n))
    rhs = np.block([[Z, Lm], [-Lp, Z]])
    return float(np.max(np.abs(lhs - rhs)))


def sigma1_anticommutes(grid, n_probes=4, seed=1):
    """max sup|Dt sigma1 f + sigma1 Dt f| over smooth probes."""
    C = Conjugation(grid)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_probes):
        f = smooth_probe(grid, rng)
        worst = max(worst, float(np.max(np.abs(C(sigma1(f)) + sigma1(C(f))))))
    return worst
