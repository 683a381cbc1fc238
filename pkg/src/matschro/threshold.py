"""Threshold analysis at z = 0: T, P, Q, the kernel S1 of QTQ and the resonance.

Everything here is discrete-consistent: Psi, c0, c1 and the rank-one
identities are computed with the same quadrature-folded kernels used to
build T, so the algebraic identities between them hold to roundoff plus
the size of the (numerically) zero eigenvalue of QTQ.
"""
import json
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .errors import DegenerateProjectionError, ResonanceError, ThresholdInconsistencyError
from .grid import Field2, japanese, sech
from .operators import build_H, factorize
from .resolvent import KernelOp, _sandwich, build_M, g0_kernel, g1_kernel

TOL = 1e-6


@dataclass
class ThresholdClass:
    kind: str  # "Regular" | "Irregular"
    rank: int
    singular_gap: float
    smallest: float = 0.0
    largest: float = 0.0


@dataclass
class ResonanceData:
    phi: Field2
    psi: Field2
    c0: complex
    c1: complex
    c2_plus: complex
    c2_minus: complex
    eta: float
    d: complex
    normalized: bool = False
    mu: float = 1.0
    residuals: dict = field(default_factory=dict)

    def scaled(self, alpha):
        """Rescale Phi and Psi by a real alpha > 0 (eta scales by alpha^-2)."""
        return ResonanceData(
            Field2(self.phi.grid, alpha * self.phi.values),
            Field2(self.psi.grid, alpha * self.psi.values),
            alpha * self.c0, alpha * self.c1, alpha * self.c2_plus, alpha * self.c2_minus,
            self.eta / alpha ** 2, self.d, self.normalized, self.mu, dict(self.residuals))

    def report(self, rank=1):
        def cx(z):
            return [float(np.real(z)), float(np.imag(z))]
        return {
            "rank": rank,
            "c0": cx(self.c0), "c1": cx(self.c1),
            "c2_plus": cx(self.c2_plus), "c2_minus": cx(self.c2_minus),
            "eta": float(self.eta), "d": cx(self.d),
            "normalized": self.normalized,
            "residuals": {k: float(v) for k, v in self.residuals.items()},
        }


def l1_norm_V1(fp):
    return float(fp.grid.quad(fp.potential.V1))


def build_P(fp):
    """Orthogonal projection onto span{(a, b)}, normalized by ||V1||_1 = ||(a,b)||^2."""
    nV = l1_norm_V1(fp)
    if nV <= 0:
        raise DegenerateProjectionError("||V1||_1 = 0: P is undefined for a vanishing potential")
    ab = fp.ab.reshape(-1)
    return KernelOp(fp.grid, np.outer(ab, ab).astype(complex) * (fp.grid.dx / nV))


def build_Q(fp):
    return KernelOp.identity(fp.grid) - build_P(fp)


def build_T(fp, grid=None, mu=None, kink=4):
    """T = I + v2 G0 v1 (self-adjoint)."""
    grid = fp.grid if grid is None else grid
    mu = fp.potential.mu if mu is None else mu
    return KernelOp.identity(grid) + _sandwich(fp, g0_kernel(grid, mu, kink=kink))


def build_M1(fp):
    """M1 = v2 G1 v1 = (i |x-y|^2 / 4) (a,b)(x) (a,b)(y)^T."""
    return _sandwich(fp, g1_kernel(fp.grid))


def find_S1(T, Q, tol=TOL, max_rank=1):
    """Classify the threshold from the spectrum of QTQ restricted to ran Q.

    QTQ is self-adjoint; adding P = I - Q moves the trivial kernel on
    ran P to eigenvalue 1, so the eigenvalues of QTQ + P below
    ``tol * largest`` span the kernel of QTQ on ran Q.  Returns the class and,
    for rank one, the L^2-normalized Phi (phase left to the caller).
    """
    grid = T.grid
    A = Q.matrix @ T.matrix @ Q.matrix + (np.eye(Q.matrix.shape[0]) - Q.matrix)
    A = 0.5 * (A + A.conj().T)
    w, U = sla.eigh(A)
    order = np.argsort(np.abs(w))
    aw = np.abs(w[order])
    largest = aw[-1]
    floor = tol * largest
    rank = int(np.sum(aw < floor))
    if rank == 0:
        cls = ThresholdClass("Regular", 0, aw[0] / floor, aw[0], largest)
        return cls, None
    gap = aw[rank] / max(aw[rank - 1], floor)
    cls = ThresholdClass("Irregular", rank, gap, aw[0], largest)
    if rank > max_rank:
        raise ThresholdInconsistencyError(
            f"kernel of QTQ has dimension {rank}; under the standing assumptions dim S1 <= 1")
    phi = U[:, order[0]].reshape(2, -1) / np.sqrt(grid.dx)
    return cls, Field2(grid, phi)


def _psi_from_phi(fp, G0, phi, c0):
    psi = -G0.apply(fp.apply_v1(phi))
    psi[0] = psi[0] + c0
    return psi


def _psi_offgrid(fp, phi, c0, xs, mu):
    """Psi at arbitrary points from the integral formula (plain sum, no kink term).

    Intended for points outside the grid, where v1 Phi is negligible near
    the evaluation point and the kink of G0 contributes nothing.
    """
    grid = fp.grid
    g = fp.apply_v1(phi)
    r = np.abs(xs[:, None] - grid.x[None, :])
    k0 = np.sqrt(2 * mu)
    top = -(-r / 2) @ g[0] * grid.dx + c0
    bot = -(-np.exp(-k0 * r) / (2 * k0)) @ g[1] * grid.dx
    return np.array([top, bot])


def c2_constants(fp, phi, psi, c0, mu, extend=None):
    """c2+- = (2 sqrt(2mu))^-1 int exp(+-sqrt(2mu) y)(V2 Psi1 + V1 Psi2) dy.

    The weight exp(sqrt(2mu)|y|) cancels most of the potential's decay, so
    the integrand decays only like exp(-beta |y|).  The grid is therefore
    extended with the same spacing until the remaining tail is below
    roundoff, with Psi evaluated off-grid and V from its profile.
    """
    V = fp.potential
    grid = fp.grid
    k0 = np.sqrt(2 * mu)
    xs, vals = grid.x, psi
    V1, V2 = V.V1, V.V2
    beta = V.beta if np.isfinite(V.beta) else 10.0
    if extend is None:
        extend = V.profile is not None and beta > 0
    if extend:
        width = min(37.0 / max(beta, 0.05), 10 * grid.half_width)
        m = int(np.ceil(width / grid.dx))
        left = grid.x[0] - grid.dx * np.arange(m, 0, -1)
        right = grid.x[-1] + grid.dx * np.arange(1, m + 1)
        outer = np.concatenate([left, right])
        po = _psi_offgrid(fp, phi, c0, outer, mu)
        xs = np.concatenate([left, grid.x, right])
        vals = np.concatenate([po[:, :m], psi, po[:, m:]], axis=1)
        V1o, V2o = V.at(outer)
        V1 = np.concatenate([V1o[:m], V.V1, V1o[m:]])
        V2 = np.concatenate([V2o[:m], V.V2, V2o[m:]])
    integrand = V2 * vals[0] + V1 * vals[1]
    cp = np.sum(np.exp(k0 * xs) * integrand) * grid.dx / (2 * k0)
    cm = np.sum(np.exp(-k0 * xs) * integrand) * grid.dx / (2 * k0)
    return cp, cm


def resonance_from_phi(phi, fp, grid=None, mu=None, T=None, normalize=True, kink=4):
    """Build Psi and the constants c0, c1, c2+-, eta, d from Phi in S1."""
    grid = fp.grid if grid is None else grid
    mu = fp.potential.mu if mu is None else mu
    T = build_T(fp, grid, mu, kink=kink) if T is None else T
    G0 = g0_kernel(grid, mu, kink=kink)
    nV = l1_norm_V1(fp)
    ph = np.asarray(phi.values)
    ab = fp.ab
    c0 = grid.quad(np.sum(ab * T.apply(ph), axis=0)) / nV
    c1 = 0.5 * grid.quad(grid.x * np.sum(ab * ph, axis=0))
    if abs(c0) < 1e-8 and abs(c1) < 1e-8:
        raise ResonanceError("c0 and c1 both vanish; Phi is not a threshold resonance")
    # fix the free phase: c0 real and nonnegative (c1 if c0 vanishes)
    ref = c0 if abs(c0) >= 1e-8 else c1
    ph = ph * (np.conj(ref) / abs(ref))
    c0, c1 = c0 * np.conj(ref) / abs(ref), c1 * np.conj(ref) / abs(ref)
    alpha = 1.0
    if normalize:
        alpha = 1.0 / np.sqrt(abs(c0) ** 2 + abs(c1) ** 2)
        ph, c0, c1 = alpha * ph, alpha * c0, alpha * c1
    psi = _psi_from_phi(fp, G0, ph, c0)
    eta = 1.0 / float(grid.quad(np.sum(np.abs(ph) ** 2, axis=0)))
    d = -2j * (abs(c0) ** 2 + abs(c1) ** 2) * eta
    cp, cm = c2_constants(fp, ph, psi, c0, mu)
    rd = ResonanceData(Field2(grid, ph), Field2(grid, psi), complex(c0), complex(c1),
                       complex(cp), complex(cm), eta, complex(d), normalize, mu)
    rd.residuals["phi_minus_v2psi"] = float(np.max(np.abs(ph - fp.apply_v2(psi))))
    rd.residuals["P_phi"] = float(abs(grid.quad(np.sum(ab * ph, axis=0))))
    return rd


def _smooth_limits(values, x):
    """Smooth profile with the same end values as each component (tanh blend)."""
    left, right = values[:, 0], values[:, -1]
    t = np.tanh(x)
    s = 0.5 * (right + left)[:, None] + 0.5 * (right - left)[:, None] * t[None, :]
    d2 = 0.5 * (right - left)[:, None] * (-2 * t * sech(x) ** 2)[None, :]
    return s, d2


def verify_resonance(psi, H, mu=None, energy=None):
    """sup_x <x>^-1 |(H - E) Psi| with E = mu by default.

    Psi1 tends to different constants at the two ends in general, so a
    tanh profile with the same limits is removed before spectral
    differentiation and its second derivative is added back exactly.
    """
    mu = H.mu if mu is None else mu
    E = mu if energy is None else energy
    grid = H.grid
    x = grid.x
    v = np.asarray(psi.values if isinstance(psi, Field2) else psi)
    s, s2 = _smooth_limits(v, x)
    d2 = grid.derivative(v - s, 2, denoise=False) + s2
    Vp = H.potential
    top = -d2[0] + H.mu * v[0] - Vp.V1 * v[0] - Vp.V2 * v[1]
    bot = d2[1] - H.mu * v[1] + Vp.V2 * v[0] + Vp.V1 * v[1]
    res = np.array([top, bot]) - E * v
    return float(np.max(np.abs(res) / japanese(x)))


def psi_tail_limits(rd, fraction=0.8):
    """Psi1 at x = -+fraction*L/2, to be compared with c0 -+ c1... (left, right)."""
    grid = rd.psi.grid
    x = grid.x
    hw = fraction * grid.half_width
    il = int(np.argmin(np.abs(x + hw)))
    ir = int(np.argmin(np.abs(x - hw)))
    return complex(rd.psi.values[0, il]), complex(rd.psi.values[0, ir])


def s1_operator(rd):
    """S1 = eta Phi Phi^* as a quadrature-folded KernelOp."""
    g = rd.phi.grid
    ph = rd.phi.values.reshape(-1)
    return KernelOp(g, rd.eta * np.outer(ph, ph.conj()) * g.dx)


def rank_one_identities(fp, rd, T=None, kink=4):
    """Frobenius norms of the residuals of the three rank-one identities.

        S1 T P T S1 = |c0|^2 eta ||V1||_1 S1
        P T S1 T P  = |c0|^2 eta ||V1||_1 P
        S1 M1 S1    = -2i |c1|^2 eta S1

    All operators involved have rank one, so products are formed from
    their factors u v^* instead of dense matrix products.
    """
    T = build_T(fp, kink=kink) if T is None else T
    g = fp.grid
    nV = l1_norm_V1(fp)
    s = rd.phi.values.reshape(-1)
    p = fp.ab.reshape(-1).astype(complex)
    Tm = T.matrix
    M1 = build_M1(fp).matrix
    # S1 = (eta dx) s s^*, P = (dx / nV) p p^*
    cs, cp = rd.eta * g.dx, g.dx / nV
    S1 = cs * np.outer(s, s.conj())
    P = cp * np.outer(p, p.conj())
    c0sq, c1sq = abs(rd.c0) ** 2, abs(rd.c1) ** 2
    # S1 T P T S1 = cs^2 cp (s^* T p)(p^* T s) s s^*
    sTp = s.conj() @ (Tm @ p)
    pTs = p.conj() @ (Tm @ s)
    r1 = cs * cs * cp * sTp * pTs * np.outer(s, s.conj()) - c0sq * rd.eta * nV * S1
    r2 = cp * cp * cs * pTs * sTp * np.outer(p, p.conj()) - c0sq * rd.eta * nV * P
    sMs = s.conj() @ (M1 @ s)
    r3 = cs * cs * sMs * np.outer(s, s.conj()) + 2j * c1sq * rd.eta * S1
    fro = lambda m: float(np.linalg.norm(m))
    return {"S1TPTS1": fro(r1), "PTS1TP": fro(r2), "S1M1S1": fro(r3)}


def m_inverse_leading(fp, rd, z, T=None, side="plus", kink=4):
    """Leading part of M(z)^-1: (1/d)((1/z)S1 - PTS1/kappa - S1TP/kappa) + (1/kappa + |c0|^2 eta ||V1|| /(d kappa^2)) z P."""
    T = build_T(fp, kink=kink) if T is None else T
    P = build_P(fp)
    S1 = s1_operator(rd)
    nV = l1_norm_V1(fp)
    kappa = nV / 2j
    d = rd.d
    lead = (S1 * (1 / z) - (P @ T @ S1) * (1 / kappa) - (S1 @ T @ P) * (1 / kappa)) * (1 / d)
    coef = 1 / kappa + abs(rd.c0) ** 2 * rd.eta * nV / (d * kappa ** 2)
    return lead + P * (coef * z)


def m_inverse(fp, z, side="plus", kink=4):
    M = build_M(fp, fp.grid, fp.potential.mu, z, side, kink=kink)
    return KernelOp(fp.grid, sla.inv(M.matrix))


def m_inverse_expansion_check(fp, grid, mu, rd, z, T=None, kink=4):
    """||M(z)^-1 - leading terms||, which should stay O(1) as z -> 0."""
    Minv = m_inverse(fp, z, kink=kink)
    return (Minv - m_inverse_leading(fp, rd, z, T=T, kink=kink)).norm()


def leading_coefficient(fp, rd, zs=(0.02, 0.01), kink=4):
    """Richardson estimate of lim z M(z)^-1 and its relative distance to S1/d.

    z M(z)^-1 = S1/d + z B + O(z^2), so 2 (z2 M(z2)^-1) - z1 M(z1)^-1 with
    z1 = 2 z2 removes the linear term.
    """
    z1, z2 = zs
    A1 = m_inverse(fp, z1, kink=kink).matrix * z1
    A2 = m_inverse(fp, z2, kink=kink).matrix * z2
    r = z1 / z2
    C = (r * A2 - A1) / (r - 1)
    target = s1_operator(rd).matrix / rd.d
    rel = np.linalg.norm(C - target) / np.linalg.norm(target)
    return C, float(rel)


@dataclass
class ThresholdResult:
    cls: ThresholdClass
    resonance: ResonanceData = None
    T: KernelOp = None

    def report(self):
        out = {"kind": self.cls.kind, "rank": self.cls.rank,
               "singular_gap": float(self.cls.singular_gap),
               "smallest_eigenvalue": float(self.cls.smallest)}
        if self.resonance is not None:
            out.update(self.resonance.report(self.cls.rank))
        return out


def analyze_threshold(V, tol=TOL, kink=4, normalize=True):
    """Factorize V, classify the threshold and, if irregular, build the resonance."""
    fp = factorize(V)
    T = build_T(fp, kink=kink)
    Q = build_Q(fp)
    cls, phi = find_S1(T, Q, tol=tol)
    if phi is None:
        return ThresholdResult(cls, None, T), fp
    rd = resonance_from_phi(phi, fp, T=T, normalize=normalize, kink=kink)
    H = build_H(V)
    rd.residuals["resonance_eq"] = verify_resonance(rd.psi, H)
    return ThresholdResult(cls, rd, T), fp


def write_report(result, path, provenance=None):
    rep = result.report()
    if provenance:
        rep["provenance"] = provenance
    with open(path, "w") as fh:
        json.dump(rep, fh, indent=2)
    return rep


def _trig_interp(values, grid, xs):
    """Evaluate the trigonometric interpolant of periodic samples at points xs."""
    n = grid.n
    F = np.fft.fft(values, axis=-1) / n
    k = np.fft.fftfreq(n, d=1.0 / n)
    F[..., n // 2] *= 0.5
    k = np.concatenate([k, [n // 2]])
    F = np.concatenate([F, F[..., n // 2:n // 2 + 1]], axis=-1)
    phase = np.exp(2j * np.pi * np.outer(xs - grid.x[0], k) / grid.length)
    return F @ phase.T


def psi_on_grid(rd, fp, target):
    """Resample the resonance Psi onto another grid.

    Inside the source domain Psi minus its tanh limit profile is decayed
    and periodic, so it is carried over by trigonometric interpolation;
    outside, Psi is evaluated from its integral formula.
    """
    src = rd.psi.grid
    psi = rd.psi.values
    s, _ = _smooth_limits(psi, src.x)
    xt = target.x
    inside = (xt >= src.x[0]) & (xt <= src.x[-1])
    out = np.empty((2, target.n), dtype=complex)
    left, right = psi[:, 0], psi[:, -1]
    t = np.tanh(xt[inside])
    smooth = 0.5 * (right + left)[:, None] + 0.5 * (right - left)[:, None] * t[None, :]
    out[:, inside] = _trig_interp(psi - s, src, xt[inside]) + smooth
    if np.any(~inside):
        out[:, ~inside] = _psi_offgrid(fp, rd.phi.values, rd.c0, xt[~inside], rd.mu)
    return Field2(target, out)
