"""Free resolvent kernels, the low-energy expansion kernels and M(z).

Kernels are materialized as dense 2n x 2n matrices acting on the stacked
vector ``[f1; f2]``, with quadrature weights folded in so that operator
composition is ordinary matrix multiplication.

The free kernels have a kink on the diagonal (they depend on |x - y|), and
the plain Riemann sum over a kink is only O(dx^2) accurate.  ``kink=2``
adds the Euler-Maclaurin endpoint correction ``(dx^2/6) K'(0)`` to the
diagonal, which restores O(dx^4); the default ``kink=4`` also adds the
next term, which involves second derivatives of the density and assumes
the density is decayed (as v1 f and the probes used here are).
``kink=0`` gives the plain dx-weighted sum.
"""
import csv

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import DomainError, NearEigenvalueError, SingularityError
from .operators import second_derivative_matrix

Z_FLOOR = 1e-6
COND_MAX = 1e12
CSV_SCHEMA = "matschro-kernel-csv v1"


class KernelOp:
    """Dense operator on (2, n) fields with dx folded into the entries."""

    def __init__(self, grid, matrix, absorbed=True):
        self.grid = grid
        self.matrix = np.asarray(matrix)
        self.absorbed = absorbed
        n2 = 2 * grid.n
        if self.matrix.shape != (n2, n2):
            raise ValueError(f"kernel matrix must be {n2}x{n2}")

    @classmethod
    def identity(cls, grid):
        return cls(grid, np.eye(2 * grid.n, dtype=complex))

    @classmethod
    def from_blocks(cls, grid, b11, b12=None, b21=None, b22=None, absorbed=True):
        n = grid.n
        z = np.zeros((n, n))
        blocks = [[b11, b12], [b21, b22]]
        blocks = [[z if b is None else b for b in row] for row in blocks]
        return cls(grid, np.block(blocks), absorbed)

    def block(self, i, j):
        """Kernel block (i, j) with i, j in {1, 2}, as stored (weights included)."""
        n = self.grid.n
        return self.matrix[(i - 1) * n:i * n, (j - 1) * n:j * n]

    def apply(self, f):
        f = np.asarray(f)
        out = self.matrix @ f.reshape(-1)
        return out.reshape(2, -1)

    __call__ = apply

    def __matmul__(self, other):
        if isinstance(other, KernelOp):
            return KernelOp(self.grid, self.matrix @ other.matrix)
        return self.apply(other)

    def __add__(self, other):
        return KernelOp(self.grid, self.matrix + other.matrix)

    def __sub__(self, other):
        return KernelOp(self.grid, self.matrix - other.matrix)

    def __mul__(self, c):
        return KernelOp(self.grid, c * self.matrix)

    __rmul__ = __mul__

    def conj(self):
        return KernelOp(self.grid, self.matrix.conj())

    def adjoint(self):
        """L^2 adjoint; with uniform weights this is the conjugate transpose."""
        return KernelOp(self.grid, self.matrix.conj().T)

    def norm(self, ord="fro"):
        """Matrix norm of the folded kernel; Frobenius (Hilbert-Schmidt) by default."""
        return float(np.linalg.norm(self.matrix, ord))

    def to_csv(self, path, stride=1, provenance=None):
        """Write (x_index, y_index, block, re, im) rows; ``stride`` thins the output."""
        n = self.grid.n
        idx = np.arange(0, n, stride)
        with open(path, "w", newline="") as fh:
            fh.write(f"# {CSV_SCHEMA}")
            if provenance:
                fh.write(f" {provenance}")
            fh.write("\n")
            w = csv.writer(fh)
            w.writerow(["x_index", "y_index", "block", "re", "im"])
            for bi in (1, 2):
                for bj in (1, 2):
                    B = self.block(bi, bj)[np.ix_(idx, idx)]
                    if self.absorbed:
                        B = B / self.grid.dx
                    for a, i in enumerate(idx):
                        for c, j in enumerate(idx):
                            v = complex(B[a, c])
                            w.writerow([int(i), int(j), f"{bi}{bj}", repr(v.real), repr(v.imag)])


def _distance(grid):
    x = grid.x
    return np.abs(x[:, None] - x[None, :])


def _kink_correction(grid, dK0, d3K0, kink):
    """Local correction operator (n x n) for a kernel K(|x-y|) with K'(0)=dK0.

    Euler-Maclaurin on both sides of the diagonal node gives
    int K g = sum + (dx^2/6) K'(0) g - (dx^4/360) (K'''(0) g + 3 K'(0) g'') + ...
    """
    n = grid.n
    dx = grid.dx
    if kink == 0:
        return np.zeros((n, n))
    C = (dx ** 2 / 6) * dK0 * np.eye(n)
    if kink >= 4:
        C = C - (dx ** 4 / 360) * (d3K0 * np.eye(n) + 3 * dK0 * second_derivative_matrix(grid))
    return C


def free_resolvent_blocks(r, mu, z):
    """Pointwise (plus side) kernel blocks of R0(z) at distances r."""
    k = np.sqrt(z * z + 2 * mu)
    top = 1j * np.exp(1j * z * r) / (2 * z)
    bot = -np.exp(-k * r) / (2 * k)
    return top, bot


def free_resolvent(grid, mu, z, side="plus", z_floor=Z_FLOOR, kink=4):
    """R0(z) = (H0 - (mu + z^2 +/- i0))^(-1); the minus side is the entrywise conjugate."""
    z = float(z)
    if abs(z) < z_floor:
        raise SingularityError(f"|z| = {abs(z):.3g} below z_floor = {z_floor:g}; use the threshold expansion")
    top, bot = free_resolvent_blocks(_distance(grid), mu, z)
    k = np.sqrt(z * z + 2 * mu)
    dx = grid.dx
    b11 = dx * top + _kink_correction(grid, -0.5, z * z / 2, kink)
    b22 = dx * bot + _kink_correction(grid, 0.5, k * k / 2, kink)
    op = KernelOp.from_blocks(grid, b11, None, None, b22)
    return _side(op, side)


def _side(op, side):
    if side == "plus":
        return op
    if side == "minus":
        return op.conj()
    raise ValueError(f"side must be 'plus' or 'minus', got {side!r}")


def g0_kernel(grid, mu, kink=4):
    """G0: top -|x-y|/2, bottom -exp(-sqrt(2mu)|x-y|)/(2 sqrt(2mu))."""
    r = _distance(grid)
    k0 = np.sqrt(2 * mu)
    dx = grid.dx
    b11 = dx * (-r / 2) + _kink_correction(grid, -0.5, 0.0, kink)
    b22 = dx * (-np.exp(-k0 * r) / (2 * k0)) + _kink_correction(grid, 0.5, k0 * k0 / 2, kink)
    return KernelOp.from_blocks(grid, b11.astype(complex), None, None, b22)


def g1_kernel(grid):
    """G1: top |x-y|^2/(4i), other blocks zero (smooth, no kink correction)."""
    r = _distance(grid)
    return KernelOp.from_blocks(grid, grid.dx * r ** 2 / 4j)


def expansion_residual(grid, mu, z, window=10.0):
    """max |R0 - (i/2z) e11 - G0 - z G1| / (z^2 <x>^3 <y>^3) over |x|,|y| <= window."""
    if not 0 < abs(z) < min(1.0, np.sqrt(2 * mu)):
        raise DomainError(f"z = {z} outside the expansion radius")
    x = grid.x[np.abs(grid.x) <= window]
    r = np.abs(x[:, None] - x[None, :])
    top, bot = free_resolvent_blocks(r, mu, z)
    k0 = np.sqrt(2 * mu)
    rem_top = top - 1j / (2 * z) - (-r / 2) - z * r ** 2 / 4j
    rem_bot = bot + np.exp(-k0 * r) / (2 * k0)
    w = (1 + x ** 2) ** 1.5
    scale = z * z * w[:, None] * w[None, :]
    return float(max(np.max(np.abs(rem_top) / scale), np.max(np.abs(rem_bot) / scale)))


def _sandwich(fp, K):
    """v2 K v1 for a block-diagonal kernel K (weights already in K)."""
    n = fp.grid.n
    Kb = np.stack([K.block(1, 1), K.block(2, 2)])
    out = np.einsum("ikx,kxy,kjy->ixjy", fp.v2.astype(complex), Kb, fp.v1)
    return KernelOp(fp.grid, out.reshape(2 * n, 2 * n))


def v_matrices(fp):
    """Dense 2n x 2n multiplication matrices for v1 and v2."""
    A, B = np.diag(fp.a), np.diag(fp.b)
    v2 = np.block([[A, B], [B, A]])
    v1 = np.block([[-A, -B], [B, A]])
    return v1, v2


def build_M(fp, grid, mu, z, side="plus", kink=4):
    """M(z) = I + v2 R0(z) v1."""
    R0 = free_resolvent(grid, mu, z, "plus", kink=kink)
    M = KernelOp.identity(grid) + _sandwich(fp, R0)
    return _side(M, side)


def _inverse_checked(M, z):
    A = M.matrix
    Ainv = sla.inv(A)
    cond = np.linalg.norm(A, 1) * np.linalg.norm(Ainv, 1)
    if not np.isfinite(cond) or cond > COND_MAX:
        raise NearEigenvalueError(f"M(z) ill-conditioned at z={z} (cond ~ {cond:.3g})", z=z, cond=cond)
    return Ainv, cond


def perturbed_resolvent(fp, grid, mu, z, side="plus", kink=4):
    """R(z) = R0 - R0 v1 M^(-1) v2 R0 (symmetric resolvent identity)."""
    R0 = free_resolvent(grid, mu, z, side, kink=kink)
    M = build_M(fp, grid, mu, z, side, kink=kink)
    Minv, _ = _inverse_checked(M, z)
    v1, v2 = v_matrices(fp)
    R = R0.matrix - R0.matrix @ (v1 @ (Minv @ (v2 @ R0.matrix)))
    return KernelOp(grid, R)


def second_identity_resolvent(fp, grid, mu, z, side="plus", kink=4):
    """(I + R0 V)^(-1) R0, the unsymmetrized resolvent identity."""
    R0 = free_resolvent(grid, mu, z, side, kink=kink)
    v1, v2 = v_matrices(fp)
    A = np.eye(2 * grid.n) + R0.matrix @ (v1 @ v2)
    return KernelOp(grid, np.linalg.solve(A, R0.matrix))


def neumann_inverse(M, terms=200, tol=1e-15):
    """sum_k (-(M - I))^k, summed until the increment falls below ``tol``."""
    A = M.matrix - np.eye(M.matrix.shape[0])
    total = np.eye(A.shape[0], dtype=complex)
    term = total.copy()
    for _ in range(terms):
        term = -(A @ term)
        total = total + term
        if np.linalg.norm(term, np.inf) < tol:
            break
    return KernelOp(M.grid, total)


def direct_resolvent_solve(V, z, f, side="plus", refine=8):
    """Independent oracle for R(z) f: finite differences with radiation conditions.

    Solves (H - (mu + z^2)) u = f on [-L/2, L/2] with the exact far-field
    conditions u1' = +-i z u1 (outgoing on the plus side) and
    u2' = -+k u2, using second order differences on grids refined by
    ``refine`` and ``2*refine``, then Richardson extrapolation.
    Needs ``V.profile`` and a densely sampled f (given as a callable).
    """
    grid = V.grid
    mu = V.mu
    sgn = 1 if side == "plus" else -1

    def solve(m):
        N = m * grid.n + 1
        xs = np.linspace(-grid.half_width, grid.half_width, N)
        h = xs[1] - xs[0]
        V1, V2 = V.at(xs)
        k = np.sqrt(z * z + 2 * mu)
        main = np.full(N, -2.0)
        lap = sp.diags([np.ones(N - 1), main, np.ones(N - 1)], [-1, 0, 1]) / h ** 2
        # ghost-point elimination of the Robin conditions u' = alpha u at the ends
        def robin(alpha_left, alpha_right):
            L = sp.lil_matrix(lap.astype(complex))
            L[0, 1] = 2 / h ** 2
            L[0, 0] = (-2 - 2 * h * alpha_left) / h ** 2
            L[N - 1, N - 2] = 2 / h ** 2
            L[N - 1, N - 1] = (-2 + 2 * h * alpha_right) / h ** 2
            return L.tocsr()
        L1 = robin(-1j * sgn * z, 1j * sgn * z)
        L2 = robin(k, -k)
        I = sp.identity(N, format="csr")
        A11 = -L1 - z * z * I - sp.diags(V1)
        A12 = -sp.diags(V2)
        A21 = sp.diags(V2)
        A22 = L2 - (2 * mu + z * z) * I + sp.diags(V1)
        A = sp.bmat([[A11, A12], [A21, A22]], format="csc")
        F = np.asarray(f(xs), dtype=complex).reshape(2, N)
        u = spla.spsolve(A, F.reshape(-1)).reshape(2, N)
        return u[:, :-1:m][:, :grid.n]

    u1 = solve(refine)
    u2 = solve(2 * refine)
    return (4 * u2 - u1) / 3


def local_residual(H, u, f, lam, inner=0.25, edge=0.6, width=None):
    """sup over |x| <= inner*L/2 of |(H - lam) u - f|.

    Resolvent outputs oscillate out to the domain edge, so u is first
    multiplied by a smooth erf window that equals 1 (to roundoff) on the
    inner region and vanishes before the boundary; spectral
    differentiation of the windowed field is then exact in the interior.
    """
    from scipy.special import erf
    grid = H.grid
    x = grid.x
    hw = grid.half_width
    a = edge * hw
    s = (hw - a) / 5.0 if width is None else width
    chi = 0.5 * (erf((x + a) / s) - erf((x - a) / s))
    w = np.asarray(u) * chi
    res = H.apply(w) - lam * w - np.asarray(f)
    mask = np.abs(x) <= inner * hw
    return float(np.max(np.abs(res[:, mask])))
