"""Off-grid doubly selective channels and their spreading functions.

Path gains are stored in the Doppler-delay (V) convention: a path contributes
``gain * delta(nu - doppler) * delta(tau - delay)`` to ``V(nu, tau)`` and acts
on the input as ``gain * x(t - delay) * exp(j 2 pi doppler (t - delay))``.
The delay-Doppler (U) weight of the same path is always derived,
``gain * exp(-j 2 pi doppler delay)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Iterable

import numpy as np

from .signals import DEFAULT_HALF_WIDTH, DEFAULT_KAISER_BETA, SampledSignal, fractional_delay


@dataclass(frozen=True)
class PhysicalPath:
    gain_v: complex
    delay: float
    doppler: float

    def __post_init__(self):
        g = complex(self.gain_v)
        if not (math.isfinite(g.real) and math.isfinite(g.imag)):
            raise ValueError("path gain must be finite")
        if not math.isfinite(self.delay) or self.delay < 0:
            raise ValueError(f"path delay must be finite and non-negative, got {self.delay}")
        if not math.isfinite(self.doppler):
            raise ValueError("path Doppler must be finite")
        object.__setattr__(self, "gain_v", g)
        object.__setattr__(self, "delay", float(self.delay))
        object.__setattr__(self, "doppler", float(self.doppler))

    @property
    def gain_u(self) -> complex:
        return self.gain_v * np.exp(-2j * np.pi * self.doppler * self.delay)


@dataclass(frozen=True, eq=False)
class ScattererDensity:
    """Tabulated ``V(nu_i, tau_j)`` on a rectangular grid (Hz x seconds)."""

    nu_grid: np.ndarray
    tau_grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        nu = np.asarray(self.nu_grid, dtype=float)
        tau = np.asarray(self.tau_grid, dtype=float)
        v = np.asarray(self.values, dtype=complex)
        if nu.ndim != 1 or tau.ndim != 1 or nu.size < 2 or tau.size < 2:
            raise ValueError("density grids need at least two points each")
        if np.any(np.diff(nu) <= 0) or np.any(np.diff(tau) <= 0):
            raise ValueError("density grids must be strictly increasing")
        if v.shape != (nu.size, tau.size):
            raise ValueError(f"density values shape {v.shape} does not match grids "
                             f"({nu.size}, {tau.size})")
        if not (np.all(np.isfinite(nu)) and np.all(np.isfinite(tau)) and np.all(np.isfinite(v))):
            raise ValueError("density must be finite")
        for a in (nu, tau, v):
            a.setflags(write=False)
        object.__setattr__(self, "nu_grid", nu)
        object.__setattr__(self, "tau_grid", tau)
        object.__setattr__(self, "values", v)

    def to_json(self) -> dict[str, Any]:
        return {
            "nu_hz": self.nu_grid.tolist(),
            "tau_s": self.tau_grid.tolist(),
            "re": self.values.real.tolist(),
            "im": self.values.imag.tolist(),
        }

    @classmethod
    def from_json(cls, obj: dict[str, Any]) -> "ScattererDensity":
        values = np.asarray(obj["re"], dtype=float) + 1j * np.asarray(obj["im"], dtype=float)
        return cls(np.asarray(obj["nu_hz"]), np.asarray(obj["tau_s"]), values)


@dataclass(frozen=True, eq=False)
class PhysicalChannel:
    paths: tuple[PhysicalPath, ...] = field(default_factory=tuple)
    density: ScattererDensity | None = None

    def __post_init__(self):
        object.__setattr__(self, "paths", tuple(self.paths))
        if self.paths and self.density is not None:
            raise ValueError("a channel holds either discrete paths or a density, not both")

    @classmethod
    def from_paths(cls, paths: Iterable[tuple[complex, float, float]]) -> "PhysicalChannel":
        """Build from ``(gain_v, delay_s, doppler_hz)`` triples."""
        return cls(tuple(PhysicalPath(g, tau, nu) for g, tau, nu in paths))

    @property
    def is_discrete(self) -> bool:
        return self.density is None

    def __or__(self, other: "PhysicalChannel") -> "PhysicalChannel":
        return PhysicalChannel(self._discrete().paths + other._discrete().paths)

    def _discrete(self) -> "PhysicalChannel":
        if self.density is not None:
            raise ValueError("operation requires a discrete-path channel; "
                             "density channels go through the quadrature tap route")
        return self

    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """``(gain_v, delay, doppler)`` as arrays."""
        self._discrete()
        g = np.array([p.gain_v for p in self.paths], dtype=complex)
        tau = np.array([p.delay for p in self.paths], dtype=float)
        nu = np.array([p.doppler for p in self.paths], dtype=float)
        return g, tau, nu

    def u_gains(self) -> np.ndarray:
        g, tau, nu = self.arrays()
        return g * np.exp(-2j * np.pi * nu * tau)

    @property
    def max_delay(self) -> float:
        return max((p.delay for p in self._discrete().paths), default=0.0)

    @property
    def max_abs_doppler(self) -> float:
        return max((abs(p.doppler) for p in self._discrete().paths), default=0.0)

    def to_json(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "paths": [
                {"gain_re": p.gain_v.real, "gain_im": p.gain_v.imag,
                 "delay_s": p.delay, "doppler_hz": p.doppler}
                for p in self.paths
            ]
        }
        if self.density is not None:
            out["density"] = self.density.to_json()
        return out

    @classmethod
    def from_json(cls, obj: dict[str, Any]) -> "PhysicalChannel":
        paths = tuple(
            PhysicalPath(complex(float(p["gain_re"]), float(p.get("gain_im", 0.0))),
                         float(p["delay_s"]), float(p["doppler_hz"]))
            for p in obj.get("paths", [])
        )
        dens = obj.get("density")
        return cls(paths, ScattererDensity.from_json(dens) if dens is not None else None)


def eval_transfer_function(channel: PhysicalChannel, f, t):
    """Time-variant transfer function ``T(f, t)``; ``f`` and ``t`` broadcast."""
    g, tau, nu = channel.arrays()
    f = np.asarray(f, dtype=float)[..., None]
    t = np.asarray(t, dtype=float)[..., None]
    u = g * np.exp(-2j * np.pi * nu * tau)
    return np.sum(u * np.exp(2j * np.pi * nu * t) * np.exp(-2j * np.pi * f * tau), axis=-1)


def eval_modulation_function(channel: PhysicalChannel, t, f):
    """Frequency-dependent modulation function ``M(t, f)``."""
    g, tau, nu = channel.arrays()
    t = np.asarray(t, dtype=float)[..., None]
    f = np.asarray(f, dtype=float)[..., None]
    return np.sum(g * np.exp(2j * np.pi * nu * t) * np.exp(-2j * np.pi * tau * f), axis=-1)


def apply_channel_offgrid(channel: PhysicalChannel, x: SampledSignal, n_out: int | None = None,
                          half_width: int = DEFAULT_HALF_WIDTH, beta: float = DEFAULT_KAISER_BETA,
                          grouping: str = "v") -> SampledSignal:
    """Brute-force channel output ``sum_p g_p x(t - tau_p) exp(j 2 pi nu_p (t - tau_p))``.

    The output shares ``x``'s sample clock and start time and by default is
    long enough to hold the most delayed copy. ``x`` must be band-limited well
    inside its Nyquist band for the sinc interpolation to be accurate.

    ``grouping="u"`` evaluates the same phases as
    ``g_p exp(-j 2 pi nu_p tau_p) * exp(j 2 pi nu_p t)``.
    """
    g, tau, nu = channel.arrays()
    fs = x.sample_rate
    if n_out is None:
        n_out = len(x) + math.ceil(channel.max_delay * fs)
    t = x.t0 + np.arange(n_out) / fs
    y = np.zeros(n_out, dtype=complex)
    for gp, tp, vp in zip(g, tau, nu):
        if gp == 0:
            continue
        shifted = fractional_delay(x.samples, tp * fs, n_out, half_width, beta)
        if grouping == "v":
            phase = gp * np.exp(2j * np.pi * vp * (t - tp))
        elif grouping == "u":
            phase = gp * np.exp(-2j * np.pi * vp * tp) * np.exp(2j * np.pi * vp * t)
        else:
            raise ValueError(f"unknown phase grouping {grouping!r}")
        y += phase * shifted
    return SampledSignal(y, fs, x.t0)
