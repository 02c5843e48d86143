"""Spectral efficiency of FTN signaling over time-invariant multipath channels.

Frequency-domain results (DTFTs of the Toeplitz coefficients, the exact rate
integral and its folded-spectrum bounds) and the finite-N log-det reference.
SNR everywhere is P / N0 with symbol energy E_s = P xi T.
"""

import functools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import isi
from .pulse import (
    FoldKind,
    _check_xi,
    alias_knots,
    alias_terms,
    bandwidth,
    folded_spectrum_sq,
    saturation_threshold,
    spectrum_sq,
)
from .quadrature import breakpoints, integrate

SE_ATOL = 1e-10
# relative slack on the |f| <= 1/(2 xi T) domain and the xi <= xi0 test
_DOMAIN_SLACK = 1e-12


class ConditioningError(ArithmeticError):
    """The noise-covariance matrix G0 is not numerically positive definite."""


@dataclass(frozen=True)
class MultipathChannel:
    """L resolvable paths with complex gains and distinct non-negative delays."""

    gains: tuple
    delays: tuple

    def __post_init__(self):
        gains = tuple(complex(h) for h in np.atleast_1d(self.gains))
        delays = tuple(float(t) for t in np.atleast_1d(self.delays))
        if len(gains) != len(delays) or not gains:
            raise ValueError("need one delay per gain and at least one path")
        if min(delays) < 0:
            raise ValueError("path delays must be non-negative")
        if len(set(delays)) != len(delays):
            raise ValueError("path delays must be pairwise distinct")
        object.__setattr__(self, "gains", gains)
        object.__setattr__(self, "delays", delays)

    @classmethod
    def from_paths(cls, paths):
        gains, delays = zip(*paths)
        return cls(gains, delays)

    @classmethod
    def single(cls, gain=1.0, delay=0.0):
        return cls((gain,), (delay,))

    @property
    def L(self):
        return len(self.gains)

    @property
    def h(self):
        return np.array(self.gains)

    @property
    def tau(self):
        return np.array(self.delays)

    def pairs(self):
        """Index pairs (l1, l2) with l1 > l2."""
        return [(a, b) for a in range(self.L) for b in range(a)]

    def frequency_response(self, f):
        """sum_l h_l exp(j 2 pi f tau_l)."""
        f = np.asarray(f, dtype=float)
        return np.exp(2j * np.pi * f[..., None] * self.tau) @ self.h


def three_path_reference(T=1.0):
    """Fixed channel with equal gains 1/sqrt(3) and delays 0, 0.2T, 0.5T."""
    return MultipathChannel((1 / math.sqrt(3),) * 3, (0.0, 0.2 * T, 0.5 * T))


@dataclass
class SeResult:
    snr_db: np.ndarray
    rate: np.ndarray
    rate_ub: np.ndarray
    rate_lb: np.ndarray
    meta: dict = field(default_factory=dict)


def db2lin(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


def _check_domain(pulse, xi, f):
    _check_xi(xi)
    half = 1.0 / (2.0 * xi * pulse.T)
    if np.any(np.abs(f) > half * (1 + _DOMAIN_SLACK)):
        raise ValueError(f"frequency outside [-1/(2 xi T), 1/(2 xi T)] = [-{half}, {half}]")


def alias_phasor_sum(pulse, xi, f, tau):
    """S(tau) = sum_n |Hp(f - n/(xi T))|^2 exp(j 2 pi n tau / (xi T))."""
    n, vals = alias_terms(pulse, xi, f)
    return vals @ np.exp(2j * np.pi * n * tau / (xi * pulse.T))


def dtft_g0(pulse, xi, f):
    """DTFT of the coefficients of G0: folded spectrum over xi T."""
    f = np.asarray(f, dtype=float)
    _check_domain(pulse, xi, f)
    return folded_spectrum_sq(pulse, xi, f) / (xi * pulse.T)


def dtft_dll(pulse, xi, h, tau, f):
    """DTFT of the Toeplitz coefficients of D_ll = |h|^2 G_l G_l^H."""
    f = np.asarray(f, dtype=float)
    _check_domain(pulse, xi, f)
    S = alias_phasor_sum(pulse, xi, f, tau)
    return abs(h) ** 2 * np.abs(S) ** 2 / (xi * pulse.T) ** 2


def dtft_tll(pulse, xi, h1, tau1, h2, tau2, f):
    """DTFT of the Toeplitz coefficients of T_{l,l'} = D_{l,l'} + D_{l',l}."""
    f = np.asarray(f, dtype=float)
    _check_domain(pulse, xi, f)
    S1 = alias_phasor_sum(pulse, xi, f, tau1)
    S2 = alias_phasor_sum(pulse, xi, f, tau2)
    c = h1 * np.conj(h2) * np.exp(2j * np.pi * f * (tau1 - tau2))
    return 2.0 * np.real(c * S2 * np.conj(S1)) / (xi * pulse.T) ** 2


def upsilon(pulse, xi, channel, f):
    """Effective signal spectrum Upsilon(f) of the multipath FTN link.

    Direct paths use the double alias sum, cross terms the pairwise alias
    phasor products; the result equals (xi T)^2 (sum D_ll + sum T_ll').
    """
    f = np.asarray(f, dtype=float)
    _check_domain(pulse, xi, f)
    n, vals = alias_terms(pulse, xi, f)
    dT = xi * pulse.T
    out = np.zeros(f.shape)
    for h, tau in zip(channel.h, channel.tau):
        ph = np.exp(2j * np.pi * (n[:, None] - n[None, :]) * tau / dT)
        out = out + abs(h) ** 2 * np.real(np.einsum("...n,nm,...m->...", vals, ph, vals))
    for a, b in channel.pairs():
        Sa = vals @ np.exp(2j * np.pi * n * channel.tau[a] / dT)
        Sb = vals @ np.exp(2j * np.pi * n * channel.tau[b] / dT)
        c = channel.h[a] * np.conj(channel.h[b]) * np.exp(2j * np.pi * f * (channel.tau[a] - channel.tau[b]))
        out = out + 2.0 * np.real(c * Sb * np.conj(Sa))
    return out


def _cross_zero_crossings(channel, lo, hi):
    """Frequencies in (lo, hi) where Re{h_a h_b^* exp(j 2 pi f (tau_a - tau_b))} = 0."""
    pts = []
    for a, b in channel.pairs():
        dtau = channel.tau[a] - channel.tau[b]
        c = channel.h[a] * np.conj(channel.h[b])
        if c == 0:
            continue
        phi = np.angle(c)
        k_lo = math.floor((2 * np.pi * lo * dtau + phi) / np.pi - 1)
        k_hi = math.ceil((2 * np.pi * hi * dtau + phi) / np.pi + 1)
        ks = np.arange(min(k_lo, k_hi) - 1, max(k_lo, k_hi) + 2)
        pts.append(((ks + 0.5) * np.pi - phi) / (2 * np.pi * dtau))
    return np.concatenate(pts) if pts else np.empty(0)


def _rate_integral(pulse, xi, integrand, snr, extra_knots=(), lo=None, hi=None):
    snr = np.atleast_1d(np.asarray(snr, dtype=float))
    half = 1.0 / (2.0 * xi * pulse.T)
    lo = -half if lo is None else lo
    hi = half if hi is None else hi
    knots = np.concatenate([alias_knots(pulse, xi), np.asarray(extra_knots, dtype=float)])
    edges = breakpoints(knots, lo, hi, max_width=(hi - lo) / 8)

    def func(f):
        g = integrand(f)
        return np.log2(1.0 + g[:, None] * snr[None, :])

    return integrate(func, edges, atol=SE_ATOL) / bandwidth(pulse)


def _squeeze(val, snr):
    return float(val[0]) if np.ndim(snr) == 0 else val


def spectral_efficiency(pulse, xi, channel, snr):
    """Achievable rate in bits/s/Hz for Gaussian inputs at SNR = P/N0 (linear).

    ``snr`` may be a scalar or an array; the integral over the symbol-rate
    band is normalized by the pulse bandwidth W.
    """
    _check_xi(xi)

    def ratio(f):
        fo = folded_spectrum_sq(pulse, xi, f)
        ups = upsilon(pulse, xi, channel, f)
        safe = np.where(fo > 0, fo, 1.0)
        return np.where(fo > 0, ups / safe, 0.0)

    val = _rate_integral(pulse, xi, ratio, snr)
    return _squeeze(val, snr)


def _phi_bounds(pulse, xi, channel, f):
    fo = folded_spectrum_sq(pulse, xi, f)
    tfo = folded_spectrum_sq(pulse, xi, f, FoldKind.TWISTED)
    power = np.sum(np.abs(channel.h) ** 2)
    ub = power * fo
    lb = power * tfo
    for a, b in channel.pairs():
        c = channel.h[a] * np.conj(channel.h[b]) * np.exp(2j * np.pi * f * (channel.tau[a] - channel.tau[b]))
        rc = np.real(c)
        ub = ub + 2.0 * rc * np.where(rc >= 0, fo, tfo)
        lb = lb + 2.0 * rc * np.where(rc >= 0, tfo, fo)
    return ub, np.maximum(lb, 0.0)


def se_bounds(pulse, xi, channel, snr):
    """Folded / twisted-folded spectrum upper and lower bounds on the rate.

    Returns ``(rate_ub, rate_lb)``.
    """
    _check_xi(xi)
    half = 1.0 / (2.0 * xi * pulse.T)
    knots = _cross_zero_crossings(channel, -half, half)
    ub = _rate_integral(pulse, xi, lambda f: _phi_bounds(pulse, xi, channel, f)[0], snr, knots)
    lb = _rate_integral(pulse, xi, lambda f: _phi_bounds(pulse, xi, channel, f)[1], snr, knots)
    return _squeeze(ub, snr), _squeeze(lb, snr)


def se_no_aliasing(pulse, xi, channel, snr):
    """Closed-form rate valid when the symbol rate covers the pulse band.

    Independent of xi: integrates |sum_l h_l e^{j2 pi f tau_l}|^2 |Hp(f)|^2
    over [-W/2, W/2].
    """
    _check_xi(xi)
    if xi > saturation_threshold(pulse) * (1 + _DOMAIN_SLACK):
        raise ValueError(f"xi = {xi} exceeds the saturation threshold {saturation_threshold(pulse):.6f}")

    def gain(f):
        return np.abs(channel.frequency_response(f)) ** 2 * spectrum_sq(pulse, f)

    hi = pulse.band_edge
    snr_arr = np.atleast_1d(np.asarray(snr, dtype=float))
    edges = breakpoints(pulse.knots(), -hi, hi, max_width=hi / 4)
    val = integrate(lambda f: np.log2(1.0 + gain(f)[:, None] * snr_arr[None, :]), edges, atol=SE_ATOL)
    return _squeeze(val / bandwidth(pulse), snr)


def se_curve(pulse, xi, channel, snr_db):
    """Rate and both bounds over an SNR grid given in dB."""
    snr_db = np.atleast_1d(np.asarray(snr_db, dtype=float))
    snr = db2lin(snr_db)
    rate = np.atleast_1d(spectral_efficiency(pulse, xi, channel, snr))
    ub, lb = se_bounds(pulse, xi, channel, snr)
    return SeResult(snr_db, rate, np.atleast_1d(ub), np.atleast_1d(lb),
                    meta={"xi": xi, "beta": pulse.beta, "T": pulse.T})


@functools.lru_cache(maxsize=64)
def _isi_matrix(pulse, xi, N, tau, cyclic):
    return np.asarray(isi.build_isi_matrix(pulse, xi, N, tau, cyclic=cyclic))


def _logdet_pd(A, what):
    try:
        L = np.linalg.cholesky(A)
    except np.linalg.LinAlgError as exc:
        raise ConditioningError(f"{what} is not positive definite") from exc
    d = np.real(np.diag(L))
    if d.min() <= math.sqrt(np.finfo(float).eps) * d.max():
        raise ConditioningError(f"{what} is numerically singular (pivot ratio {d.min() / d.max():.3g})")
    return 2.0 * np.sum(np.log(d))


def mutual_info_matrix(pulse, xi, channel, snr, N, cyclic=False):
    """Finite-block normalized mutual information in bits/s/Hz.

    log det(G0 + (E_s/N0) H H^H) - log det(G0) with H = sum_l h_l G_l, both
    via Cholesky, normalized by N xi T W.  ``cyclic`` swaps every Toeplitz
    matrix for its circulant wrap.
    """
    if N < 2:
        raise ValueError("block length must be at least 2")
    _check_xi(xi)
    es_n0 = float(snr) * xi * pulse.T
    G0 = _isi_matrix(pulse, xi, N, 0.0, cyclic)
    H = np.zeros((N, N), dtype=complex)
    for h, tau in zip(channel.h, channel.tau):
        H += h * _isi_matrix(pulse, xi, N, float(tau), cyclic)
    ld0 = _logdet_pd(G0, "G0")
    A = G0 + es_n0 * (H @ H.conj().T)
    A = 0.5 * (A + A.conj().T)
    ld1 = _logdet_pd(A, "G0 + (Es/N0) H H^H")
    return (ld1 - ld0) / math.log(2.0) / (N * xi * pulse.T * bandwidth(pulse))


@dataclass(frozen=True)
class ChannelModel:
    """Random multipath law: L paths, delays uniform on [0, tau_max].

    Gains are circular complex Gaussian with per-path variance from
    ``power_profile`` (uniform 1/L when omitted).
    """

    L: int
    tau_max: float
    power_profile: tuple = None

    def __post_init__(self):
        if self.L < 1:
            raise ValueError("need at least one path")
        if self.tau_max < 0:
            raise ValueError("tau_max must be non-negative")
        prof = self.power_profile
        prof = (1.0 / self.L,) * self.L if prof is None else tuple(float(p) for p in prof)
        if len(prof) != self.L or min(prof) < 0:
            raise ValueError("power profile needs one non-negative entry per path")
        object.__setattr__(self, "power_profile", prof)

    def sample(self, trials, seed, min_separation=1e-9):
        """Draw ``trials`` channels reproducibly from ``seed``.

        Each trial owns a spawned child stream; delays are redrawn while any
        two lie closer than ``min_separation``.
        """
        if trials < 1:
            raise ValueError("trials must be at least 1")
        L = self.L
        if L > 1 and self.tau_max < min_separation * (L - 1):
            raise ValueError("delay range too small for distinct delays")
        var = np.array(self.power_profile)
        out = []
        for child in np.random.SeedSequence(seed).spawn(trials):
            rng = np.random.default_rng(child)
            h = np.sqrt(var / 2) * (rng.standard_normal(L) + 1j * rng.standard_normal(L))
            while True:
                tau = rng.uniform(0.0, self.tau_max, L)
                if L == 1 or np.min(np.diff(np.sort(tau))) >= min_separation:
                    break
            out.append(MultipathChannel(h, tau))
        return out


def ergodic_se(pulse, xi, model, snr, trials, seed, bounds=False, workers=1):
    """Average spectral efficiency over channels drawn from ``model``.

    Returns the mean rate (scalar or per-SNR array), or an ``SeResult`` of
    mean rate and mean bounds when ``bounds`` is set.  Trials may run on
    ``workers`` threads; the reduction is always in trial order.
    """
    channels = model.sample(trials, seed)
    snr_arr = np.atleast_1d(np.asarray(snr, dtype=float))

    def one(ch):
        r = np.atleast_1d(spectral_efficiency(pulse, xi, ch, snr_arr))
        if not bounds:
            return r
        ub, lb = se_bounds(pulse, xi, ch, snr_arr)
        return np.stack([r, np.atleast_1d(ub), np.atleast_1d(lb)])

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(one, channels))
    else:
        rows = [one(ch) for ch in channels]
    mean = np.mean(np.stack(rows), axis=0)
    if not bounds:
        return _squeeze(mean, snr)
    meta = {"xi": xi, "L": model.L, "tau_max": model.tau_max, "trials": trials,
            "seed": seed, "workers": workers}
    return SeResult(10 * np.log10(snr_arr), mean[0], mean[1], mean[2], meta=meta)
