"""Monte Carlo harnesses: empirical ambiguity slices and two-target Doppler MSE.

Randomness is drawn from per-chunk streams spawned off a master
``SeedSequence``; chunk boundaries are fixed by ``CHUNK`` so results do not
depend on how many workers evaluate them.
"""

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .ambiguity import AfSlice, af_slice, get_constellation, kurtosis, signal_af_kernel
from .capacity import db2lin
from .pulse import PulseSpec, _check_xi, waveform

CHUNK = 500


def draw_symbols(constellation, N, rng, size=None):
    """i.i.d. uniform symbols from the constellation.

    Returns shape ``(N,)``, or ``(size, N)`` when ``size`` is given.
    """
    if N < 1:
        raise ValueError("N must be at least 1")
    pts = constellation.array
    shape = (N,) if size is None else (size, N)
    return pts[rng.integers(0, pts.size, shape)]


def _chunk_streams(seed, total):
    """(start, stop, Generator) per fixed-size chunk of ``total`` items."""
    n_chunks = max(1, math.ceil(total / CHUNK))
    children = np.random.SeedSequence(seed).spawn(n_chunks)
    return [(i * CHUNK, min(total, (i + 1) * CHUNK), np.random.default_rng(c))
            for i, c in enumerate(children)]


def _map_ordered(fn, items, workers):
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(it) for it in items]


@dataclass(frozen=True)
class McConfig:
    """Monte Carlo ambiguity-slice run.

    ``trials=None`` selects exhaustive enumeration of all M^N sequences.
    """

    pulse: PulseSpec = PulseSpec()
    xi: float = 1.0
    N: int = 100
    constellation: str = "qpsk"
    trials: int = 10000
    seed: int = 2025
    workers: int = 1

    def __post_init__(self):
        _check_xi(self.xi)
        if self.N < 1:
            raise ValueError("N must be at least 1")
        if self.trials is not None and self.trials < 1:
            raise ValueError("trials must be at least 1")

    @property
    def exhaustive(self):
        return self.trials is None


def _slice_kernels(cfg, axis, grid):
    axis = axis.lower()
    if axis not in ("delay", "doppler"):
        raise ValueError("axis must be 'delay' or 'doppler'")
    kernels = []
    for g in grid:
        tau, nu = (g, 0.0) if axis == "delay" else (0.0, g)
        kernels.append(signal_af_kernel(cfg.pulse, cfg.xi, cfg.N, tau, nu))
    return np.stack(kernels)


def _ratio_sums(X, kernels, origin):
    """Sum over frames of |x^T M x^*|^2 / |x^T M0 x^*|^2 for every kernel M."""
    ref = np.abs(np.sum((X @ origin) * np.conj(X), axis=-1)) ** 2
    out = np.empty(kernels.shape[0])
    for i, M in enumerate(kernels):
        af = np.sum((X @ M) * np.conj(X), axis=-1)
        out[i] = np.sum(np.abs(af) ** 2 / ref)
    return out


def mc_af_slice(cfg, axis, grid):
    """Empirical E[|AF_s|^2 / |AF_s(0, 0)|^2] along one axis.

    Each trial's ratio is computed exactly from its own symbol frame; the
    symbol energy cancels.  With ``cfg.trials=None`` the average runs over
    every sequence of the alphabet instead of random draws.
    """
    grid = np.atleast_1d(np.asarray(grid, dtype=float))
    const = get_constellation(cfg.constellation)
    kernels = _slice_kernels(cfg, axis, grid)
    origin = signal_af_kernel(cfg.pulse, cfg.xi, cfg.N, 0.0, 0.0)
    if cfg.exhaustive:
        X = np.array(list(itertools.product(const.array, repeat=cfg.N)))
        values = _ratio_sums(X, kernels, origin) / X.shape[0]
        count = X.shape[0]
    else:
        def run(chunk):
            start, stop, rng = chunk
            X = draw_symbols(const, cfg.N, rng, size=stop - start)
            return _ratio_sums(X, kernels, origin)

        parts = _map_ordered(run, _chunk_streams(cfg.seed, cfg.trials), cfg.workers)
        values = np.sum(parts, axis=0) / cfg.trials
        count = cfg.trials
    config = {"xi": cfg.xi, "N": cfg.N, "T": cfg.pulse.T, "beta": cfg.pulse.beta,
              "mu4": kurtosis(const), "constellation": const.name, "trials": count,
              "seed": cfg.seed, "exhaustive": cfg.exhaustive}
    return AfSlice(axis.lower(), grid, values, config)


def closed_form_slice(cfg, axis, grid):
    """Closed-form counterpart of ``mc_af_slice`` for the same configuration."""
    return af_slice(cfg.pulse, cfg.xi, cfg.N, get_constellation(cfg.constellation), axis, grid)


@dataclass(frozen=True)
class DopplerSceneConfig:
    """Two-target Doppler estimation scene.

    Parameters
    ----------
    targets : tuple of (reflectivity, normalized Doppler)
        Doppler in cycles per Nyquist period (nu T).
    snr_db : tuple of float
        SNR grid, P / N0 in dB.
    n_nyquist : int
        Frame length at xi = 1; FTN frames use round(n_nyquist / xi).  At
        100 symbols the random-symbol pedestal of an FTN frame is already
        comparable to a 15% target, hence the longer default.
    window : float
        Doppler search interval is [-window, window] / T.
    refine : int
        Grid step is 1 / (refine N xi T).
    excision : float
        Radius, in units of 1 / (N xi T), removed around each detected peak.
        The default clears the main lobe and the first four sidelobes, whose
        random-symbol fluctuations can otherwise outgrow a 15% target.
    oversample : int
        Waveform samples per Nyquist period.
    pulse_span : float
        Pulse truncated to |t| <= pulse_span T when synthesized.
    random_phase : bool
        Draw an independent uniform phase per target and trial.
    """

    targets: tuple = ((1.0, 0.5), (0.15, -0.4))
    snr_db: tuple = (0.0, 5.0, 10.0, 15.0, 20.0)
    trials: int = 500
    seed: int = 2025
    n_nyquist: int = 400
    window: float = 1.0
    refine: int = 8
    excision: float = 5.0
    oversample: int = 8
    pulse_span: float = 16.0
    random_phase: bool = True
    workers: int = 1

    def __post_init__(self):
        targets = tuple((float(a), float(v)) for a, v in self.targets)
        if not targets:
            raise ValueError("scene needs at least one target")
        if any(a <= 0 for a, _ in targets):
            raise ValueError("target reflectivities must be positive")
        if any(abs(v) > self.window for _, v in targets):
            raise ValueError("target Doppler outside the search window")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        object.__setattr__(self, "targets", targets)
        object.__setattr__(self, "snr_db", tuple(float(s) for s in self.snr_db))


@dataclass
class DopplerMseResult:
    snr_db: np.ndarray
    mse: np.ndarray
    meta: dict = field(default_factory=dict)


def _frame_geometry(scene, pulse, xi):
    N = int(math.floor(scene.n_nyquist / xi + 0.5))
    T = pulse.T
    Ts = T / scene.oversample
    span = scene.pulse_span * T
    k0 = math.floor((xi * T - span) / Ts)
    k1 = math.ceil((N * xi * T + span) / Ts)
    t = np.arange(k0, k1 + 1) * Ts
    lag = t[:, None] - xi * T * np.arange(1, N + 1)[None, :]
    inside = np.abs(lag) <= span
    shaping = np.zeros(lag.shape)
    shaping[inside] = waveform(pulse, lag[inside])
    step = 1.0 / (scene.refine * N * xi * T)
    half = int(math.floor(scene.window / T / step + 1e-9))
    grid = np.arange(-half, half + 1) * step
    return N, Ts, t, shaping, grid


def _detect(mag, grid, count, radius):
    """Sequential peak picking with excision of ``radius`` around each pick."""
    mag = mag.copy()
    picks = np.empty((count,) + mag.shape[1:])
    for i in range(count):
        idx = np.argmax(mag, axis=0)
        nu = grid[idx]
        picks[i] = nu
        mag[np.abs(grid[:, None] - nu[None, :]) <= radius] = -np.inf
    return picks


def doppler_mse(scene, pulse, xi, constellation="qpsk", include_echo=True):
    """Mean squared Doppler error of the weakest target versus SNR.

    Per trial: draw symbols, build s(t) = sqrt(E_s) sum x_n p(t - n xi T) on
    a sampled grid, form r(t) = sum_k a_k e^{j phi_k} s(t) e^{j 2 pi nu_k t}
    + w(t), and correlate against Doppler-shifted copies of s(t).  White
    noise has per-sample variance N0 / Ts with E_s = xi T and N0 = 1 / SNR,
    so a single symbol's matched-filter SNR is E_s / N0.  Targets are
    detected strongest first; the k-th strongest target is scored against
    the k-th detected peak.  Noise realizations are shared across the SNR
    grid (only their scale changes).  ``include_echo=False`` drops the echo
    to measure pure-noise guessing.
    """
    _check_xi(xi)
    const = get_constellation(constellation) if isinstance(constellation, str) else constellation
    N, Ts, t, shaping, grid = _frame_geometry(scene, pulse, xi)
    Es = xi * pulse.T
    refl = np.array([a for a, _ in scene.targets])
    dops = np.array([v for _, v in scene.targets])
    rank = np.argsort(-refl, kind="stable")
    weak = rank[-1]
    weak_pick = len(rank) - 1
    radius = scene.excision / (N * xi * pulse.T)
    steer = np.exp(-2j * np.pi * grid[:, None] * t[None, :]) * Ts
    shifts = np.exp(2j * np.pi * dops[:, None] * t[None, :])
    snr = db2lin(scene.snr_db)
    sigma = np.sqrt(1.0 / snr / Ts)

    def run(chunk):
        start, stop, rng = chunk
        B = stop - start
        X = draw_symbols(const, N, rng, size=B)
        phases = rng.uniform(0, 2 * np.pi, (B, len(refl))) if scene.random_phase else np.zeros((B, len(refl)))
        noise = (rng.standard_normal((B, t.size)) + 1j * rng.standard_normal((B, t.size))) / np.sqrt(2)
        s = math.sqrt(Es) * X @ shaping.T
        coef = refl * np.exp(1j * phases)
        echo = (coef @ shifts) * s if include_echo else np.zeros_like(s)
        z_sig = steer @ (echo * np.conj(s)).T
        z_noise = steer @ (noise * np.conj(s)).T
        err = np.empty((snr.size, B))
        for i, sd in enumerate(sigma):
            picks = _detect(np.abs(z_sig + sd * z_noise), grid, len(rank), radius)
            err[i] = (picks[weak_pick] - dops[weak]) ** 2
        return err.sum(axis=1)

    parts = _map_ordered(run, _chunk_streams(scene.seed, scene.trials), scene.workers)
    mse = np.sum(parts, axis=0) / scene.trials
    meta = {"xi": xi, "N": N, "beta": pulse.beta, "T": pulse.T, "constellation": const.name,
            "trials": scene.trials, "seed": scene.seed, "grid_step": float(grid[1] - grid[0]),
            "window": scene.window, "excision_radius": radius, "sample_period": Ts,
            "noise": "white, per-sample variance N0/Ts; per-symbol matched-filter SNR = Es/N0",
            "Es": Es, "targets": [list(tg) for tg in scene.targets], "workers": scene.workers}
    return DopplerMseResult(np.array(scene.snr_db), mse, meta)
