"""Faster-than-Nyquist ISAC analytics: pulses, ISI, spectral efficiency and ambiguity functions."""

__version__ = "0.1.0"
