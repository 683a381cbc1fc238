"""Uniform periodic grids, quadrature and spectral differentiation.

Fields are sampled on ``x_j = -L/2 + j*dx`` (``j = 0..n-1``), the usual
half-open periodic convention.  A two-component field is stored as an
array of shape ``(2, n)``.

All transforms use the unitary convention

    f_hat(xi) = (2 pi)^(-1/2) * int exp(-i x xi) f(x) dx,

approximated by the trapezoid (Riemann) sum on the grid.  Precision follows
the input: ``longdouble`` / ``clongdouble`` fields are transformed in
extended precision through :mod:`scipy.fft`, which matters for derivatives
of order six and above.
"""
from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft

from .errors import ConfigurationError

TAIL_TOL = 1e-6


def _pi(dtype):
    return 4 * np.arctan(np.ones((), dtype=dtype))


def sech(x):
    """Overflow-free sech, preserving the input precision."""
    e = np.exp(-np.abs(x))
    return 2 * e / (1 + e * e)


def japanese(x):
    """Japanese bracket <x> = (1 + x^2)^(1/2)."""
    return np.sqrt(1 + np.asarray(x) ** 2)


@dataclass(frozen=True)
class Grid:
    half_width: float
    n: int

    def __post_init__(self):
        if not (np.isfinite(self.half_width) and self.half_width > 0):
            raise ConfigurationError(f"half_width must be positive, got {self.half_width}")
        n = self.n
        if int(n) != n or n < 64 or (int(n) & (int(n) - 1)) != 0:
            raise ConfigurationError(f"n must be a power of two >= 64, got {n}")

    @property
    def length(self):
        return 2.0 * self.half_width

    @property
    def dx(self):
        return self.length / self.n

    @property
    def x(self):
        return -self.half_width + np.arange(self.n) * self.dx

    def x_as(self, dtype):
        """Nodes computed in the requested floating precision."""
        hw = np.asarray(self.half_width, dtype=dtype)
        return -hw + np.arange(self.n).astype(dtype) * (2 * hw / self.n)

    def wavenumbers(self, dtype=np.float64):
        """Angular wavenumbers in FFT order."""
        k = np.fft.fftfreq(self.n, d=1.0 / self.n).astype(dtype)
        return k * (2 * _pi(dtype) / np.asarray(self.length, dtype=dtype))

    @property
    def xi(self):
        return self.wavenumbers()

    # -- array-level kernels -------------------------------------------------

    def quad(self, values):
        """Riemann sum dx * sum over the last axis."""
        values = np.asarray(values)
        return values.sum(axis=-1) * np.asarray(self.dx, dtype=values.real.dtype)

    def derivative(self, values, order=1, denoise=None):
        """Fourier-multiplier derivative (i xi)^order along the last axis.

        With ``denoise`` (default: on for order >= 4) the Fourier modes whose magnitude sits below
        ``8 eps`` of the largest mode are dropped before multiplying; those
        modes carry only roundoff, which high orders would otherwise amplify
        by ``xi_max**order``.
        """
        values = np.asarray(values)
        if order == 0:
            return values.copy()
        if denoise is None:
            denoise = order >= 4
        rdt = values.real.dtype
        if rdt not in (np.float64, np.longdouble):
            rdt = np.dtype(np.float64)
            values = values.astype(np.complex128 if np.iscomplexobj(values) else np.float64)
        xi = self.wavenumbers(rdt)
        F = sfft.fft(values, axis=-1)
        if denoise:
            amp = np.abs(F)
            floor = 8 * np.finfo(rdt).eps * amp.max(axis=-1, keepdims=True)
            F = np.where(amp < floor, 0, F)
        mult = (1j * xi) ** order
        if order % 2:
            mult[self.n // 2] = 0
        out = sfft.ifft(F * mult, axis=-1)
        if not np.iscomplexobj(values):
            out = out.real
        return out

    def fourier_at(self, values, xi):
        """Continuous Fourier transform evaluated at arbitrary (possibly complex) frequencies."""
        values = np.asarray(values)
        rdt = values.real.dtype
        xi = np.atleast_1d(np.asarray(xi))
        xi = xi.astype(np.result_type(xi.dtype, rdt) if np.iscomplexobj(xi) else rdt)
        x = self.x_as(rdt)
        phase = np.exp(-1j * np.multiply.outer(x, xi))
        dx = np.asarray(self.dx, dtype=rdt)
        return values @ phase * (dx / np.sqrt(2 * _pi(rdt)))

    def spectrum(self, values):
        """FFT-based transform on the grid frequencies, sorted by frequency."""
        values = np.asarray(values)
        rdt = values.real.dtype
        xi = self.wavenumbers(rdt)
        x0 = np.asarray(-self.half_width, dtype=rdt)
        dx = np.asarray(self.dx, dtype=rdt)
        F = sfft.fft(values, axis=-1) * np.exp(-1j * xi * x0) * dx / np.sqrt(2 * _pi(rdt))
        return sfft.fftshift(xi), sfft.fftshift(F, axes=-1)


def make_grid(half_width, n):
    """Symmetric periodic grid on [-half_width, half_width) with n nodes."""
    return Grid(float(half_width), int(n))


@dataclass(frozen=True)
class Field2:
    """C^2-valued function sampled on a grid, ``values.shape == (2, n)``."""

    grid: Grid
    values: np.ndarray
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.shape != (2, self.grid.n):
            raise ConfigurationError(f"expected values of shape (2, {self.grid.n}), got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ConfigurationError("field has non-finite entries")
        if not np.iscomplexobj(v):
            v = v.astype(np.clongdouble if v.dtype == np.longdouble else np.complex128)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_components(cls, grid, top, bottom=0.0):
        top = np.broadcast_to(np.asarray(top), (grid.n,))
        bottom = np.broadcast_to(np.asarray(bottom), (grid.n,))
        return cls(grid, np.stack([top, bottom]))

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)

    @property
    def top(self):
        return self.values[0]

    @property
    def bottom(self):
        return self.values[1]


def integrate(f):
    """Componentwise integrals (int f1, int f2) by the trapezoid rule."""
    v = f.values
    return tuple(f.grid.quad(v))


def inner(f, g, grid=None):
    """<f, g> = int (conj(f1) g1 + conj(f2) g2) dx for Field2 or raw arrays."""
    if grid is None:
        grid = f.grid
    fv = np.asarray(f)
    gv = np.asarray(g)
    return grid.quad(np.sum(np.conj(fv) * gv, axis=0))


def tail_magnitude(values, fraction=0.0):
    """Largest magnitude at the two boundary nodes (or outer fraction)."""
    v = np.abs(np.asarray(values))
    n = v.shape[-1]
    k = max(1, int(round(fraction * n)))
    return float(max(v[..., :k].max(), v[..., n - k:].max()))


def spectral_derivative(f, order=1, denoise=None):
    """Apply d^order/dx^order to both components of ``f``.

    The result carries ``meta['tail_warning']`` when ``f`` is not decayed
    (boundary magnitude above 1e-6), in which case the periodic extension
    is not smooth and the derivative is only meaningful for genuinely
    periodic data.
    """
    if not 1 <= order <= 8:
        raise ConfigurationError("derivative order must be between 1 and 8")
    out = f.grid.derivative(f.values, order, denoise=denoise)
    warn = tail_magnitude(f.values) > TAIL_TOL
    return Field2(f.grid, out, meta={"tail_warning": warn})


def weighted_sup_norm(f, sigma, window=None):
    """max_x <x>^(-sigma) max(|f1(x)|, |f2(x)|), optionally over |x| <= window."""
    grid = f.grid if isinstance(f, Field2) else None
    v = np.abs(np.asarray(f))
    x = grid.x if grid is not None else None
    if x is None:
        raise ConfigurationError("weighted_sup_norm needs a Field2")
    w = japanese(x) ** (-float(sigma))
    vals = w * v.max(axis=0)
    if window is not None:
        vals = vals[np.abs(x) <= window]
    return float(vals.max())
