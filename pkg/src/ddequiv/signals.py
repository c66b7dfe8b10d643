"""Sampled complex baseband signals and band-limited fractional delay."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

DEFAULT_HALF_WIDTH = 64
DEFAULT_KAISER_BETA = 10.0
# Fractional parts closer than this to an integer are treated as integer shifts.
INTEGER_DELAY_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class SampledSignal:
    """Complex samples ``x[n] = x(t0 + n / sample_rate)``."""

    samples: np.ndarray
    sample_rate: float
    t0: float = 0.0

    def __post_init__(self):
        x = np.asarray(self.samples, dtype=complex)
        if x.ndim != 1 or x.size < 1:
            raise ValueError("samples must be a non-empty 1-D sequence")
        if not np.all(np.isfinite(x)):
            raise ValueError("samples must be finite")
        if not (math.isfinite(self.sample_rate) and self.sample_rate > 0):
            raise ValueError("sample_rate must be positive")
        x.setflags(write=False)
        object.__setattr__(self, "samples", x)

    def __len__(self):
        return self.samples.size

    @property
    def dt(self) -> float:
        return 1.0 / self.sample_rate

    @property
    def times(self) -> np.ndarray:
        return self.t0 + np.arange(self.samples.size) / self.sample_rate

    @property
    def energy(self) -> float:
        return float(np.vdot(self.samples, self.samples).real)

    def spectrum(self, n_fft: int | None = None) -> tuple[np.ndarray, np.ndarray]:
        """Frequencies (Hz, signed) and DFT of the record, zero-padded to ``n_fft``.

        The DFT is scaled by ``dt`` so it approximates the continuous transform
        with the time origin at ``t0``.
        """
        n = n_fft or self.samples.size
        freqs = np.fft.fftfreq(n, self.dt)
        return freqs, np.fft.fft(self.samples, n) * self.dt

    def padded(self, n_out: int) -> "SampledSignal":
        if n_out < self.samples.size:
            raise ValueError("cannot pad to a shorter length")
        out = np.zeros(n_out, dtype=complex)
        out[: self.samples.size] = self.samples
        return SampledSignal(out, self.sample_rate, self.t0)


def nmse(estimate, reference) -> float:
    """``sum |estimate - reference|^2 / sum |reference|^2``."""
    estimate = np.asarray(estimate)
    reference = np.asarray(reference)
    ref = float(np.vdot(reference, reference).real)
    err = estimate - reference
    return float(np.vdot(err, err).real) / ref


def kaiser_sinc_kernel(frac: float, half_width: int = DEFAULT_HALF_WIDTH,
                       beta: float = DEFAULT_KAISER_BETA) -> np.ndarray:
    """Kaiser-windowed sinc taps for a fractional delay ``frac`` in ``[0, 1)``.

    Tap ``i`` multiplies ``x[n - k - j]`` with ``j = i - half_width + 1``.
    """
    j = np.arange(-half_width + 1, half_width + 1)
    u = j - frac
    arg = np.clip(1.0 - (u / half_width) ** 2, 0.0, None)
    return np.sinc(u) * np.i0(beta * np.sqrt(arg)) / np.i0(beta)


def fractional_delay(x: np.ndarray, delay_samples: float, n_out: int,
                     half_width: int = DEFAULT_HALF_WIDTH,
                     beta: float = DEFAULT_KAISER_BETA) -> np.ndarray:
    """Return ``y[n] = x(n - delay_samples)`` for ``n in [0, n_out)``.

    Samples of ``x`` outside its record are taken as zero. Integer delays are
    exact shifts; fractional ones use a Kaiser-windowed sinc of
    ``2 * half_width`` taps, which assumes ``x`` is band-limited well inside
    the Nyquist band.
    """
    x = np.asarray(x, dtype=complex)
    k = math.floor(delay_samples)
    frac = delay_samples - k
    if frac > 1.0 - INTEGER_DELAY_TOL:
        k, frac = k + 1, 0.0
    y = np.zeros(n_out, dtype=complex)
    if frac < INTEGER_DELAY_TOL:
        lo, hi = max(0, k), min(n_out, k + x.size)
        if hi > lo:
            y[lo:hi] = x[lo - k:hi - k]
        return y
    h = kaiser_sinc_kernel(frac, half_width, beta)
    full = np.convolve(x, h)
    # full[i] is y at n = i + k + j0, j0 = -half_width + 1
    offset = k - half_width + 1
    lo, hi = max(0, offset), min(n_out, offset + full.size)
    if hi > lo:
        y[lo:hi] = full[lo - offset:hi - offset]
    return y


def spectral_mask(x: np.ndarray, sample_rate: float, mask_fn) -> np.ndarray:
    """Multiply the DFT of ``x`` by ``mask_fn(freqs)`` and transform back.

    ``freqs`` are the signed bin frequencies in Hz; the operation is circular
    over the record, so callers zero-pad beforehand.
    """
    x = np.asarray(x, dtype=complex)
    freqs = np.fft.fftfreq(x.size, 1.0 / sample_rate)
    return np.fft.ifft(np.fft.fft(x) * mask_fn(freqs))
