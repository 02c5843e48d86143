"""ISI coefficients, effective Toeplitz channel matrices and the Dirichlet kernel."""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import circulant, toeplitz

from .pulse import _check_xi, spectrum_sq
from .quadrature import fourier_integral

QUAD_ATOL = 1e-12
_CHUNK = 256


def spectrum_cosine_transform(pulse, t, atol=QUAD_ATOL):
    """Integral of |Hp(f)|^2 cos(2 pi f t) over the pulse band, for each t.

    For a symmetric spectrum this is the full Fourier integral of |Hp|^2,
    i.e. the pulse autocorrelation at lag t.  The flat passband is integrated
    in closed form; only the roll-off band goes through the quadrature.
    """
    t = np.asarray(t, dtype=float)
    flat = t.ravel()
    f1, f2 = pulse.passband_edge, pulse.band_edge
    # 2 * int_0^f1 T cos(2 pi f t) df
    out = 2.0 * pulse.T * f1 * np.sinc(2.0 * f1 * flat)
    if f2 > f1:
        roll = fourier_integral(lambda f: spectrum_sq(pulse, f), flat, f1, f2,
                                atol=0.5 * atol, cosine=True, chunk=_CHUNK)
        out += 2.0 * roll
    out = out.reshape(t.shape)
    return out[()] if out.ndim == 0 else out


def isi_coefficient(pulse, xi, k, tau=0.0):
    """ISI coefficient g[k, tau] between symbols k xi T + tau apart."""
    _check_xi(xi)
    k = np.asarray(k, dtype=float)
    return spectrum_cosine_transform(pulse, k * xi * pulse.T + tau)


@dataclass(frozen=True)
class IsiMatrix:
    """Effective channel matrix of one path: entry (n, m) = g[m - n, tau]."""

    size: int
    tau: float
    entries: np.ndarray
    cyclic: bool = False

    def __post_init__(self):
        self.entries.setflags(write=False)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)


def build_isi_matrix(pulse, xi, N, tau=0.0, cyclic=False, reach=None):
    """N x N Toeplitz matrix of ISI coefficients for a path with delay ``tau``.

    With ``cyclic=True`` the coefficient sequence is wrapped modulo N
    (``c[k] = sum_j g[k + jN]`` over ``|k + jN| <= reach``, default
    ``max(8N, 1024)``), which yields the circulant matrix a cyclic prefix
    would produce.
    """
    if N < 1:
        raise ValueError("matrix size must be at least 1")
    _check_xi(xi)
    if not cyclic:
        k = np.arange(-(N - 1), N)
        g = isi_coefficient(pulse, xi, k, tau)
        row = g[N - 1:]
        col = g[N - 1::-1]
        return IsiMatrix(N, tau, toeplitz(col, row), cyclic=False)
    if reach is None:
        reach = max(8 * N, 1024)
    J = int(np.ceil(reach / N))
    k = np.arange(-J * N, (J + 1) * N)
    g = isi_coefficient(pulse, xi, k, tau)
    g[np.abs(k) > reach] = 0.0
    c = g.reshape(2 * J + 1, N).sum(axis=0)
    # circulant(col) has entry (n, m) = col[(n - m) mod N]; we need c[(m - n) mod N]
    col = np.roll(c[::-1], 1)
    return IsiMatrix(N, tau, circulant(col), cyclic=True)


def dirichlet_kernel(x, N, xiT):
    """Closed form of sum_{n=1}^{N} exp(j 2 pi x n xiT).

    The ratio sin(pi x N xiT) / sin(pi x xiT) is evaluated after reducing
    x xiT to the nearest integer, so the kernel stays exact at and near the
    periodic peaks x = k / xiT.
    """
    if N < 1:
        raise ValueError("N must be at least 1")
    x = np.asarray(x, dtype=float)
    u = x * xiT
    k = np.rint(u)
    r = u - k
    s = np.sin(np.pi * r)
    sign = np.where((k * (N - 1)) % 2 == 0, 1.0, -1.0)
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.where(np.abs(s) < 1e-9, float(N), np.sin(np.pi * N * r) / s)
    out = np.exp(1j * np.pi * (N + 1) * u) * sign * ratio
    return out[()] if out.ndim == 0 else out
