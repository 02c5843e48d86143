"""Shaping-pulse spectra: root-raised-cosine and ideal sinc.

Pulses are described in the frequency domain only.  ``spectrum_sq`` returns
the energy spectrum |Hp(f)|^2 of a unit-energy pulse; it is exactly zero
outside the two-sided bandwidth W.
"""

import enum
import math
from dataclasses import dataclass

import numpy as np

from .quadrature import breakpoints, fourier_integral, integrate


class Family(str, enum.Enum):
    RRC = "rrc"
    SINC = "sinc"


class FoldKind(str, enum.Enum):
    FOLDED = "folded"
    TWISTED = "twisted"


@dataclass(frozen=True)
class PulseSpec:
    """A unit-energy, strictly band-limited shaping pulse.

    Parameters
    ----------
    family : Family or str
        ``"rrc"`` or ``"sinc"``.
    beta : float
        Roll-off factor in [0, 1]; ignored (forced to 0) for sinc.
    T : float
        Nyquist symbol period in seconds.
    """

    family: Family = Family.RRC
    beta: float = 0.3
    T: float = 1.0

    def __post_init__(self):
        fam = Family(self.family)
        object.__setattr__(self, "family", fam)
        if fam is Family.SINC:
            object.__setattr__(self, "beta", 0.0)
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError(f"roll-off must lie in [0, 1], got {self.beta}")
        if not self.T > 0:
            raise ValueError(f"Nyquist period must be positive, got {self.T}")

    @classmethod
    def rrc(cls, beta, T=1.0):
        return cls(Family.RRC, beta, T)

    @classmethod
    def sinc(cls, T=1.0):
        return cls(Family.SINC, 0.0, T)

    @property
    def passband_edge(self):
        return (1.0 - self.beta) / (2.0 * self.T)

    @property
    def band_edge(self):
        """W / 2."""
        return (1.0 + self.beta) / (2.0 * self.T)

    def knots(self):
        """Frequencies where |Hp(f)|^2 is not smooth."""
        f1, f2 = self.passband_edge, self.band_edge
        return np.unique([-f2, -f1, f1, f2])


def bandwidth(pulse):
    """Two-sided bandwidth W in Hz: (1 + beta) / T."""
    return 2.0 * pulse.band_edge


def saturation_threshold(pulse):
    """Largest compression factor free of spectral aliasing, 1 / (W T)."""
    return 1.0 / (bandwidth(pulse) * pulse.T)


def spectrum_sq(pulse, f):
    """Energy spectrum |Hp(f)|^2 of the unit-energy pulse.

    Flat value T in the passband, raised-cosine taper in the roll-off band and
    exact zero beyond W/2.
    """
    f = np.asarray(f, dtype=float)
    af = np.abs(f)
    T = pulse.T
    f1, f2 = pulse.passband_edge, pulse.band_edge
    out = np.zeros_like(af)
    out[af <= f1] = T
    if pulse.beta > 0:
        roll = (af > f1) & (af <= f2)
        out[roll] = 0.5 * T * (1.0 + np.cos(np.pi * T / pulse.beta * (af[roll] - f1)))
    return out[()] if out.ndim == 0 else out


def amplitude(pulse, f):
    """Zero-phase amplitude spectrum Hp(f) = sqrt(|Hp(f)|^2)."""
    return np.sqrt(spectrum_sq(pulse, f))


def _check_xi(xi):
    if not 0.0 < xi <= 1.0:
        raise ValueError(f"compression factor must lie in (0, 1], got {xi}")


def alias_range(pulse, xi):
    """Largest alias index that can overlap the base band: ceil(W xi T) + 1."""
    _check_xi(xi)
    return int(math.ceil(bandwidth(pulse) * xi * pulse.T)) + 1


def alias_terms(pulse, xi, f):
    """Shifted copies |Hp(f - n / (xi T))|^2 for n = -K..K.

    Returns ``(n, values)`` where ``values`` has shape ``f.shape + (2K+1,)``.
    """
    K = alias_range(pulse, xi)
    n = np.arange(-K, K + 1)
    f = np.asarray(f, dtype=float)
    vals = spectrum_sq(pulse, f[..., None] - n / (xi * pulse.T))
    return n, vals


def folded_spectrum_sq(pulse, xi, f, kind=FoldKind.FOLDED):
    """Folded (or twisted folded) spectrum at symbol rate 1 / (xi T).

    Folded: sum of all aliases.  Twisted: base copy minus all other aliases.
    Both are defined as zero outside [-1/(2 xi T), 1/(2 xi T)].
    """
    kind = FoldKind(kind)
    n, vals = alias_terms(pulse, xi, f)
    f = np.asarray(f, dtype=float)
    if kind is FoldKind.FOLDED:
        out = vals.sum(axis=-1)
    else:
        base = vals[..., n == 0][..., 0]
        out = 2.0 * base - vals.sum(axis=-1)
    half = 1.0 / (2.0 * xi * pulse.T)
    out = np.where(np.abs(f) <= half, out, 0.0)
    return out[()] if out.ndim == 0 else out


def alias_knots(pulse, xi):
    """Non-smooth points of every alias copy that can fall in the base band."""
    K = alias_range(pulse, xi)
    shifts = np.arange(-K, K + 1) / (xi * pulse.T)
    return np.unique((shifts[:, None] + pulse.knots()[None, :]).ravel())


def energy(pulse, atol=1e-13):
    """Total energy of |Hp|^2, integrated with the package quadrature."""
    edges = breakpoints(pulse.knots(), -pulse.band_edge, pulse.band_edge)
    return float(integrate(lambda f: spectrum_sq(pulse, f), edges, atol=atol))


def waveform(pulse, t, atol=1e-12):
    """Time-domain pulse p(t), the inverse Fourier transform of the amplitude spectrum."""
    t = np.asarray(t, dtype=float)
    f1, f2 = pulse.passband_edge, pulse.band_edge
    # flat passband in closed form, roll-off by quadrature; even spectrum
    out = 2.0 * math.sqrt(pulse.T) * f1 * np.sinc(2.0 * f1 * t)
    if f2 > f1:
        out = out + 2.0 * fourier_integral(lambda f: amplitude(pulse, f), t, f1, f2,
                                           atol=0.5 * atol, cosine=True)
    return out[()] if out.ndim == 0 else out
