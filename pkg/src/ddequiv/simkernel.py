"""Discrete-time check that the on-grid model reproduces the windowed channel.

Two pipelines run on a common zero-padded record:

* the *off-grid* pipeline applies the real windows and the physical paths
  (fractional delays via sinc interpolation);
* the *on-grid* pipeline applies rectangular windows of the grid's size around
  the finite tap double sum.

Frequency-domain windows are DFT-domain masks over the padded record, so both
pipelines see identical circular conventions. Records are placed with equal
margins on both sides so that wrap-around stays negligible.
"""

from __future__ import annotations

import hashlib
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .channel import PhysicalChannel, apply_channel_offgrid
from .ongrid import GridSpec, TapMatrix, TruncationPolicy, V_TAPS, compute_taps_discrete
from .signals import DEFAULT_HALF_WIDTH, DEFAULT_KAISER_BETA, SampledSignal, nmse, spectral_mask
from .windows import RECT, WindowPair, rect, window_value

PAD_FACTOR = 4
MIN_RATE_MARGIN = 1.25
TEST_OCCUPANCY = 0.8
TEST_TAPER_BETA = 8.0
# tolerance for deciding that fs*T or fs/W is an integer
INTEGER_RATIO_TOL = 1e-9


class ModelError(ValueError):
    """The on-grid model was used outside the conditions that make it exact."""


@dataclass(frozen=True)
class RecordLayout:
    """Padded output record: ``n_total`` samples starting ``n_pre`` samples before ``x.t0``."""

    n_total: int
    n_pre: int

    @classmethod
    def around(cls, n_in: int, before: int, after: int, pad_factor: int = PAD_FACTOR) -> "RecordLayout":
        n_lin = n_in + before + after
        n_total = pad_factor * n_lin
        return cls(n_total, before + (n_total - n_lin) // 2)

    def place(self, x: SampledSignal) -> SampledSignal:
        out = np.zeros(self.n_total, dtype=complex)
        if self.n_pre + len(x) > self.n_total:
            raise ValueError("record layout too short for the input")
        out[self.n_pre:self.n_pre + len(x)] = x.samples
        return SampledSignal(out, x.sample_rate, x.t0 - self.n_pre / x.sample_rate)


def _default_layout(x: SampledSignal, max_delay: float, half_width: int) -> RecordLayout:
    return RecordLayout.around(len(x), half_width, math.ceil(max_delay * x.sample_rate) + half_width)


def check_sample_rate(windows: WindowPair, max_abs_doppler: float, sample_rate: float) -> None:
    """Sample rate must cover the frequency window plus the Doppler span with margin."""
    fw = windows.freq_window
    occupied = fw.width + 2 * max_abs_doppler
    if sample_rate < MIN_RATE_MARGIN * occupied:
        raise ValueError(
            f"sample rate {sample_rate:g} Hz below {MIN_RATE_MARGIN} x occupied bandwidth "
            f"{occupied:g} Hz"
        )
    if abs(fw.center) + fw.width / 2 + max_abs_doppler > sample_rate / 2:
        raise ValueError("frequency window plus Doppler span exceeds the Nyquist band")


def apply_windowed_offgrid(channel: PhysicalChannel, windows: WindowPair, x: SampledSignal,
                           layout: RecordLayout | None = None,
                           half_width: int = DEFAULT_HALF_WIDTH,
                           beta: float = DEFAULT_KAISER_BETA) -> SampledSignal:
    """Physical channel between the given (possibly non-rectangular) windows.

    Orientation ``"a"``: time window, channel, then frequency mask.
    Orientation ``"b"``: frequency mask, channel, then time window.
    """
    check_sample_rate(windows, channel.max_abs_doppler, x.sample_rate)
    layout = layout or _default_layout(x, channel.max_delay, half_width)
    fs = x.sample_rate
    rec = layout.place(x)
    if windows.orientation == "a":
        xw = SampledSignal(rec.samples * window_value(windows.tx, rec.times), fs, rec.t0)
        y = apply_channel_offgrid(channel, xw, layout.n_total, half_width, beta)
        out = spectral_mask(y.samples, fs, lambda f: window_value(windows.rx, f))
    else:
        xf = SampledSignal(spectral_mask(rec.samples, fs, lambda f: window_value(windows.tx, f)),
                           fs, rec.t0)
        y = apply_channel_offgrid(channel, xf, layout.n_total, half_width, beta)
        out = y.samples * window_value(windows.rx, y.times)
    return SampledSignal(out, fs, rec.t0)


def rect_windows(grid: GridSpec, orientation: str) -> WindowPair:
    """Rectangular windows spanning the grid, in the requested orientation."""
    T, W = grid.frame_duration, grid.bandwidth
    if orientation == "a":
        return WindowPair(rect("time", T, grid.tx_center), rect("frequency", W, grid.rx_center))
    return WindowPair(rect("frequency", W, grid.tx_center), rect("time", T, grid.rx_center))


def _check_rect_pair(taps: TapMatrix, windows_rect: WindowPair) -> None:
    if windows_rect.tx.shape != RECT or windows_rect.rx.shape != RECT:
        raise ModelError(
            "the on-grid model is exact only between rectangular windows of the grid's "
            f"duration and bandwidth; got tx={windows_rect.tx.shape}, rx={windows_rect.rx.shape}"
        )
    if windows_rect.orientation != taps.orientation:
        raise ModelError(f"{taps.convention} taps need orientation {taps.orientation} windows")
    expect = rect_windows(taps.grid, taps.orientation)
    for got, want in ((windows_rect.tx, expect.tx), (windows_rect.rx, expect.rx)):
        if not (math.isclose(got.width, want.width, rel_tol=1e-12)
                and math.isclose(got.center, want.center, rel_tol=1e-12, abs_tol=1e-12 * want.width)):
            raise ModelError("rectangular windows must match the tap grid's size and centers")


def _is_integer(x: float) -> bool:
    return abs(x - round(x)) < INTEGER_RATIO_TOL * max(1.0, abs(x))


def _doppler_sums(G: np.ndarray, kappa: np.ndarray, t_first: float, n: int, fs: float,
                  T: float) -> np.ndarray:
    """``Z[m, d] = sum_kappa G[kappa, d] exp(j 2 pi kappa t_m / T)``, ``t_m = t_first + m / fs``."""
    coef = G * np.exp(2j * np.pi * kappa * t_first / T)[:, None]
    if _is_integer(fs * T):
        # exp(j 2 pi kappa m / (fs T)) is periodic in kappa: fold, then one inverse FFT
        period = int(round(fs * T))
        folded = np.zeros((period, G.shape[1]), dtype=complex)
        np.add.at(folded, kappa % period, coef)
        Z = np.fft.ifft(folded, axis=0) * period
        return Z[np.arange(n) % period]
    return np.exp(2j * np.pi * np.outer(np.arange(n) / fs, kappa / T)) @ coef


def _window_samples(times: np.ndarray, center: float, span: float) -> np.ndarray:
    return np.nonzero(np.abs(times - center) <= span / 2)[0]


def _phase_delays(n_total: int, fs: float, delays: np.ndarray, chunk: int = 64):
    freqs = np.fft.fftfreq(n_total, 1.0 / fs)
    for lo in range(0, delays.size, chunk):
        sl = slice(lo, lo + chunk)
        yield sl, np.exp(-2j * np.pi * np.outer(freqs, delays[sl]))


def apply_ongrid_model(taps: TapMatrix, windows_rect: WindowPair, x: SampledSignal,
                       layout: RecordLayout | None = None) -> SampledSignal:
    """Rectangular window, finite on-grid tap sum, rectangular window.

    V taps act as ``x(t - tau_d) exp(j 2 pi nu_kappa (t - tau_d))`` and U taps
    as ``x(t - tau_d) exp(j 2 pi nu_kappa t)``, each scaled by ``1 / (T W)``.
    Delays are exact circular shifts when ``tau_d`` lands on samples and
    DFT-domain phase ramps otherwise.
    """
    _check_rect_pair(taps, windows_rect)
    grid = taps.grid
    T, W = grid.frame_duration, grid.bandwidth
    fs = x.sample_rate
    if layout is None:
        before = max(0, -taps.d_range[0]) * math.ceil(fs / W)
        after = max(0, taps.d_range[1]) * math.ceil(fs / W) + DEFAULT_HALF_WIDTH
        layout = RecordLayout.around(len(x), before, after)
    rec = layout.place(x)
    L = layout.n_total
    times = rec.times
    G = taps.retained_gains() / (T * W)
    kappa = taps.kappa
    delays = grid.tau(taps.d)
    shifts = delays * fs
    integer = all(_is_integer(s) for s in shifts)
    ishift = np.rint(shifts).astype(int)
    t_win = windows_rect.time_window
    S = _window_samples(times, t_win.center, t_win.width)
    Z = _doppler_sums(G, kappa, rec.t0 + S[0] / fs, S.size, fs, T)
    if taps.convention == V_TAPS:
        D = rec.samples[S][:, None] * Z
        if integer:
            y = np.zeros(L, dtype=complex)
            idx = (S[:, None] + ishift[None, :]) % L
            np.add.at(y, idx.ravel(), D.ravel())
        else:
            Y = np.zeros(L, dtype=complex)
            for sl, ph in _phase_delays(L, fs, delays):
                block = np.zeros((L, D[:, sl].shape[1]), dtype=complex)
                block[S] = D[:, sl]
                Y += np.sum(np.fft.fft(block, axis=0) * ph, axis=1)
            y = np.fft.ifft(Y)
        fw = windows_rect.rx
        out = spectral_mask(y, fs, lambda f: window_value(fw, f))
    else:
        fw = windows_rect.tx
        xf = spectral_mask(rec.samples, fs, lambda f: window_value(fw, f))
        out = np.zeros(L, dtype=complex)
        if integer:
            shifted = xf[(S[:, None] - ishift[None, :]) % L]
            out[S] = np.sum(shifted * Z, axis=1)
        else:
            Xf = np.fft.fft(xf)
            for sl, ph in _phase_delays(L, fs, delays):
                shifted = np.fft.ifft(Xf[:, None] * ph, axis=0)[S]
                out[S] += np.sum(shifted * Z[:, sl], axis=1)
    return SampledSignal(out, fs, rec.t0)


def make_test_signal(grid: GridSpec, oversampling: float = 2.0, seed: int = 0,
                     time_center: float = 0.0, freq_center: float = 0.0,
                     occupancy: float = TEST_OCCUPANCY,
                     taper_beta: float = TEST_TAPER_BETA) -> SampledSignal:
    """Random band-limited probe supported on one frame.

    A complex Gaussian spectrum occupying ``occupancy * W`` around
    ``freq_center`` is inverse transformed and tapered by a zero-ended Kaiser window of
    duration ``T`` centered at ``time_center``. The result has unit average
    power over its ``round(oversampling * W * T)`` samples.
    """
    if oversampling < MIN_RATE_MARGIN:
        raise ValueError(f"oversampling must be at least {MIN_RATE_MARGIN}")
    W, T = grid.bandwidth, grid.frame_duration
    fs = oversampling * W
    n = int(round(fs * T))
    rng = np.random.default_rng(seed)
    freqs = np.fft.fftfreq(n, 1.0 / fs)
    band = np.abs(freqs - freq_center) <= occupancy * W / 2
    spec = np.zeros(n, dtype=complex)
    spec[band] = rng.standard_normal(band.sum()) + 1j * rng.standard_normal(band.sum())
    t0 = time_center - T / 2
    # put the spectrum's time origin at t0 so the record is a plain IDFT
    # Kaiser taper shifted to vanish at the frame edges, so no step is left there
    taper = np.kaiser(n + 1, taper_beta)[:n]
    taper = (taper - taper[0]) / (1.0 - taper[0])
    x = np.fft.ifft(spec) * taper
    x /= math.sqrt(np.mean(np.abs(x) ** 2))
    return SampledSignal(x, fs, t0)


def random_underspread_channel(grid: GridSpec, n_paths: int, rng: np.random.Generator,
                               max_delay_bins: float = 64, max_doppler_bins: float = 32,
                               dynamic_range_db: float = 20.0) -> PhysicalChannel:
    """Paths with delays in ``[0, 64/W]``, Dopplers in ``[-32/T, 32/T]``, log-uniform magnitudes."""
    tau = rng.uniform(0, max_delay_bins / grid.bandwidth, n_paths)
    nu = rng.uniform(-max_doppler_bins / grid.frame_duration,
                     max_doppler_bins / grid.frame_duration, n_paths)
    mag = 10 ** (-rng.uniform(0, dynamic_range_db, n_paths) / 20)
    gains = mag * np.exp(2j * np.pi * rng.uniform(0, 1, n_paths))
    return PhysicalChannel.from_paths(zip(gains, tau, nu))


@dataclass(frozen=True)
class EquivalenceReport:
    nmse_mean: float
    nmse_max: float
    max_abs_err: float
    truncation_energy_bound: float
    config_digest: str
    trials: int
    nmse_trials: tuple[float, ...] = field(default=(), repr=False)
    tolerance: float = 1e-4

    @property
    def passed(self) -> bool:
        return self.nmse_max <= self.tolerance

    def to_json(self) -> dict[str, Any]:
        return {
            "nmse_mean": self.nmse_mean,
            "nmse_max": self.nmse_max,
            "trials": self.trials,
            "truncation_bound": self.truncation_energy_bound,
            "config_digest": self.config_digest,
        }


def config_digest(channel: PhysicalChannel, windows: WindowPair, grid: GridSpec,
                  trunc: TruncationPolicy, n_trials: int, seed: int, oversampling: float) -> str:
    doc = {
        "channel": channel.to_json(), "windows": windows.to_json(), "grid": grid.to_json(),
        "truncation": trunc.to_json(), "trials": n_trials, "seed": seed,
        "oversampling": oversampling,
    }
    blob = json.dumps(doc, sort_keys=True, separators=(",", ":")).encode()
    return "sha256:" + hashlib.sha256(blob).hexdigest()


def verify_equivalence(channel: PhysicalChannel, windows: WindowPair, grid: GridSpec | None = None,
                       trunc: TruncationPolicy | None = None, n_trials: int = 5, seed: int = 0,
                       oversampling: float = 2.0, tolerance: float = 1e-4,
                       taps: TapMatrix | None = None, workers: int = 1) -> EquivalenceReport:
    """Run both pipelines on ``n_trials`` random probes and report their NMSE.

    NMSE above ``tolerance`` is reported through ``passed``, never raised.
    """
    if n_trials < 1:
        raise ValueError("n_trials must be at least 1")
    trunc = trunc or TruncationPolicy()
    grid = grid or GridSpec.from_windows(windows)
    if taps is None:
        taps = compute_taps_discrete(channel, windows, grid, trunc)
    o = windows.orientation
    rects = rect_windows(grid, o)
    fs = oversampling * grid.bandwidth
    n_in = int(round(fs * grid.frame_duration))
    step = math.ceil(fs / grid.bandwidth)
    before = max(DEFAULT_HALF_WIDTH, -taps.d_range[0] * step)
    after = max(math.ceil(channel.max_delay * fs), taps.d_range[1] * step) + DEFAULT_HALF_WIDTH
    layout = RecordLayout.around(n_in, before, after)

    def trial(i):
        x = make_test_signal(grid, oversampling, seed + i, grid.time_center(o), grid.freq_center(o))
        y_off = apply_windowed_offgrid(channel, windows, x, layout).samples
        y_on = apply_ongrid_model(taps, rects, x, layout).samples
        return nmse(y_on, y_off), float(np.max(np.abs(y_on - y_off)))

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(trial, range(n_trials)))
    else:
        results = [trial(i) for i in range(n_trials)]
    errs = np.array([r[0] for r in results])
    return EquivalenceReport(
        nmse_mean=float(errs.mean()), nmse_max=float(errs.max()),
        max_abs_err=max(r[1] for r in results),
        truncation_energy_bound=taps.truncation_bound,
        config_digest=config_digest(channel, windows, grid, trunc, n_trials, seed, oversampling),
        trials=n_trials, nmse_trials=tuple(errs.tolist()), tolerance=tolerance,
    )
