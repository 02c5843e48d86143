"""Ambiguity-function analytics for random FTN signals.

The transmitted signal is s(t) = sqrt(E_s) sum_n x_n p(t - n xi T), n = 1..N,
and its ambiguity function is taken as

    AF_s(tau, nu) = int s(t) s*(t - tau) exp(-j 2 pi nu (t - tau)) dt
                  = int H_s(f) H_s*(f - nu) exp(j 2 pi f tau) df.

Expected squared AFs are evaluated through single sums over the symbol
lag m weighted by (N - |m|).
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .isi import dirichlet_kernel, spectrum_cosine_transform
from .pulse import _check_xi, amplitude, bandwidth
from .quadrature import fourier_integral

AF_ATOL = 1e-12
_MOMENT_TOL = 1e-12


@dataclass(frozen=True)
class Constellation:
    """Unit-power, rotationally symmetric symbol alphabet.

    ``points`` is empty for the analytic Gaussian entry, which carries its
    fourth moment in ``analytic_kurtosis`` and cannot be sampled.
    """

    name: str
    points: tuple = ()
    analytic_kurtosis: float = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=complex).ravel()
        object.__setattr__(self, "points", tuple(pts))
        if pts.size == 0:
            if self.analytic_kurtosis is None:
                raise ValueError("an empty constellation needs an analytic kurtosis")
            return
        if abs(np.mean(np.abs(pts) ** 2) - 1.0) > _MOMENT_TOL:
            raise ValueError(f"{self.name}: constellation must have unit average power")
        if abs(np.mean(pts)) > _MOMENT_TOL or abs(np.mean(pts ** 2)) > _MOMENT_TOL:
            raise ValueError(f"{self.name}: constellation is not rotationally symmetric "
                             "(requires E[a] = 0 and E[a^2] = 0)")

    @property
    def is_analytic(self):
        return not self.points

    @property
    def array(self):
        if self.is_analytic:
            raise ValueError(f"{self.name} has no finite alphabet to sample from")
        return np.array(self.points)

    @property
    def size(self):
        return len(self.points)


def psk(M, name=None):
    return Constellation(name or f"{M}psk", np.exp(1j * (np.pi / M + 2 * np.pi * np.arange(M) / M)))


def square_qam(M, name=None):
    side = int(round(math.sqrt(M)))
    if side * side != M:
        raise ValueError("square QAM needs a perfect-square order")
    levels = np.arange(-(side - 1), side, 2, dtype=float)
    grid = (levels[:, None] + 1j * levels[None, :]).ravel()
    return Constellation(name or f"{M}qam", grid / np.sqrt(np.mean(np.abs(grid) ** 2)))


GAUSSIAN = Constellation("gaussian", (), analytic_kurtosis=2.0)

CONSTELLATIONS = {
    "qpsk": psk(4, "qpsk"),
    "8psk": psk(8),
    "16qam": square_qam(16),
    "64qam": square_qam(64),
    "gaussian": GAUSSIAN,
}


def get_constellation(name):
    try:
        return CONSTELLATIONS[name.lower()]
    except KeyError:
        raise ValueError(f"unknown constellation {name!r}; choose from {sorted(CONSTELLATIONS)}") from None


def kurtosis(constellation):
    """Fourth absolute moment E|a|^4 of a unit-power constellation."""
    if constellation.is_analytic:
        return float(constellation.analytic_kurtosis)
    return float(np.mean(np.abs(constellation.array) ** 4))


def fair_symbol_count(n_nyquist, xi):
    """Symbols an FTN frame needs to occupy the same duration: round(N / xi)."""
    _check_xi(xi)
    return int(math.floor(n_nyquist / xi + 0.5))


def _overlap_band(pulse, nu):
    half = pulse.band_edge
    return max(-half, nu - half), min(half, nu + half)


def _af_fixed_doppler(pulse, t, nu, atol=AF_ATOL):
    """AF_p(t, nu) for an array of delays and one Doppler offset."""
    t = np.asarray(t, dtype=float)
    if nu == 0.0:
        return spectrum_cosine_transform(pulse, t, atol=atol) + 0j
    lo, hi = _overlap_band(pulse, nu)
    if hi <= lo:
        return np.zeros(t.shape, dtype=complex)
    knots = np.concatenate([pulse.knots(), pulse.knots() + nu])
    return fourier_integral(lambda f: amplitude(pulse, f) * amplitude(pulse, f - nu),
                            t, lo, hi, knots=knots, atol=atol)


def pulse_af(pulse, tau, nu):
    """Ambiguity function AF_p(tau, nu) of the unit-energy pulse.

    Integrates Hp(f) Hp(f - nu) exp(j 2 pi f tau) over the overlap of the
    two shifted bands; returns exact zero when they do not overlap.
    ``tau`` and ``nu`` broadcast against each other.
    """
    tau, nu = np.broadcast_arrays(np.asarray(tau, dtype=float), np.asarray(nu, dtype=float))
    out = np.zeros(tau.shape, dtype=complex)
    for v in np.unique(nu):
        sel = nu == v
        out[sel] = _af_fixed_doppler(pulse, tau[sel], float(v))
    return out[()] if out.ndim == 0 else out


def dirichlet_sq(df, N, xiT):
    """Squared Dirichlet kernel sin^2(pi N df xiT) / sin^2(pi df xiT)."""
    return np.abs(dirichlet_kernel(df, N, xiT)) ** 2


def _lag_weights(N):
    m = np.arange(1 - N, N)
    return m, (N - np.abs(m)).astype(float)


def _weighted_lag_sum(pulse, xi, N, tau, nu):
    """sum_{m=1-N}^{N-1} (N - |m|) |AF_p(m xi T - tau, nu)|^2, vectorized over tau."""
    m, w = _lag_weights(N)
    tau = np.asarray(tau, dtype=float)
    lags = m[None, :] * xi * pulse.T - tau.reshape(-1, 1)
    vals = np.abs(_af_fixed_doppler(pulse, lags, nu)) ** 2
    return (vals @ w).reshape(tau.shape)


def _check_common(N, mu4):
    if N < 1:
        raise ValueError("N must be at least 1")
    if mu4 < 1:
        raise ValueError("kurtosis of a unit-power constellation is at least 1")


def _terms(pulse, xi, N, mu4, tau, nu):
    """Per-point (|AF_p(-tau, nu)|^2, |D_N(nu)|^2, weighted lag sum)."""
    _check_xi(xi)
    _check_common(N, mu4)
    tau, nu = np.broadcast_arrays(np.asarray(tau, dtype=float), np.asarray(nu, dtype=float))
    main = np.empty(tau.shape)
    lagsum = np.empty(tau.shape)
    for v in np.unique(nu):
        sel = nu == v
        main[sel] = np.abs(_af_fixed_doppler(pulse, -tau[sel], float(v))) ** 2
        lagsum[sel] = _weighted_lag_sum(pulse, xi, N, tau[sel], float(v))
    kern = dirichlet_sq(nu, N, xi * pulse.T)
    return main, np.asarray(kern), lagsum


def iceberg_decomposition(pulse, xi, N, mu4, tau, nu, Es=None):
    """Split E|AF_s|^2 into the squared mean and the symbol-induced variance.

    Returns ``(mean_sq, variance)``; their sum is ``expected_sq_af``.
    """
    Es = xi * pulse.T if Es is None else Es
    main, kern, lagsum = _terms(pulse, xi, N, mu4, tau, nu)
    mean_sq = Es ** 2 * kern * main
    variance = Es ** 2 * (N * (mu4 - 2.0) * main + lagsum)
    if mean_sq.ndim == 0:
        return float(mean_sq), float(variance)
    return mean_sq, variance


def expected_sq_af(pulse, xi, N, mu4, tau, nu, Es=None):
    """E|AF_s(tau, nu)|^2 over i.i.d. symbols with kurtosis ``mu4``.

    ``Es`` defaults to xi T (unit transmit power).
    """
    mean_sq, variance = iceberg_decomposition(pulse, xi, N, mu4, tau, nu, Es)
    return mean_sq + variance


def signal_af(x, pulse, xi, tau, nu, Es=None):
    """Exact AF_s(tau, nu) of the signal carrying symbols ``x``.

    ``x`` has shape ``(N,)`` or ``(B, N)`` for a batch of frames; uses
    AF_s = E_s sum_{n, n'} x_n x_n'^* exp(-j 2 pi n' nu xi T) AF_p((n' - n) xi T + tau, nu).
    """
    Es = xi * pulse.T if Es is None else Es
    x = np.asarray(x, dtype=complex)
    N = x.shape[-1]
    M = signal_af_kernel(pulse, xi, N, tau, nu)
    return Es * np.sum((x @ M) * np.conj(x), axis=-1)


def signal_af_kernel(pulse, xi, N, tau, nu):
    """N x N matrix M with AF_s = E_s x^T M x^*, for fixed (tau, nu)."""
    _check_xi(xi)
    d = np.arange(1 - N, N)
    a = _af_fixed_doppler(pulse, d * xi * pulse.T + tau, float(nu))
    n = np.arange(1, N + 1)
    diff = n[None, :] - n[:, None]  # n' - n, rows n, columns n'
    return a[diff + N - 1] * np.exp(-2j * np.pi * n[None, :] * nu * xi * pulse.T)


def accumulated_isi(pulse, xi, N, tau):
    """Accumulated ISI function X(tau) = sum (N - |m|) |AF_p(m xi T - tau, 0)|^2."""
    _check_xi(xi)
    _check_common(N, 1.0)
    out = _weighted_lag_sum(pulse, xi, N, tau, 0.0)
    return out[()] if np.ndim(out) == 0 else out


def doppler_accumulated_isi(pulse, xi, N, nu):
    """Doppler-shifted accumulated ISI X'(nu) = sum (N - |m|) |AF_p(m xi T, nu)|^2."""
    _check_xi(xi)
    _check_common(N, 1.0)
    nu = np.asarray(nu, dtype=float)
    out = np.array([_weighted_lag_sum(pulse, xi, N, 0.0, float(v)) for v in nu.ravel()]).reshape(nu.shape)
    return out[()] if out.ndim == 0 else out


def periodic_doppler_variation(pulse, xi, N, nu):
    """Y(nu) = |D_N(nu)|^2 |AF_p(0, nu)|^2, the symbol-mean part of the Doppler slice."""
    _check_xi(xi)
    nu = np.asarray(nu, dtype=float)
    out = dirichlet_sq(nu, N, xi * pulse.T) * np.abs(pulse_af(pulse, 0.0, nu)) ** 2
    return out[()] if np.ndim(out) == 0 else out


@dataclass
class AfSlice:
    axis: str
    grid: np.ndarray
    values: np.ndarray
    config: dict = field(default_factory=dict)


def af_slice(pulse, xi, N, constellation, axis, grid, Es=None):
    """Normalized expected squared AF along the delay or the Doppler axis.

    Values are E|AF_s|^2 on the grid divided by E|AF_s(0, 0)|^2; the other
    coordinate is held at zero.
    """
    axis = axis.lower()
    if axis not in ("delay", "doppler"):
        raise ValueError("axis must be 'delay' or 'doppler'")
    grid = np.atleast_1d(np.asarray(grid, dtype=float))
    if grid.size == 0:
        raise ValueError("empty grid")
    mu4 = kurtosis(constellation)
    if axis == "delay":
        vals = expected_sq_af(pulse, xi, N, mu4, grid, 0.0, Es)
    else:
        vals = expected_sq_af(pulse, xi, N, mu4, 0.0, grid, Es)
    ref = expected_sq_af(pulse, xi, N, mu4, 0.0, 0.0, Es)
    config = {"xi": xi, "N": N, "T": pulse.T, "beta": pulse.beta, "mu4": mu4,
              "constellation": constellation.name, "W": bandwidth(pulse)}
    return AfSlice(axis, grid, np.asarray(vals) / ref, config)
