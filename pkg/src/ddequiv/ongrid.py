"""On-grid delay-Doppler equivalents of windowed off-grid channels.

Grid points are ``nu_kappa = kappa / T`` and ``tau_d = d / W`` for integer
``kappa`` and ``d``. In both window orientations the Doppler axis is governed
by the transform of the time-domain window and the delay axis by the
transform of the frequency-domain window:

* orientation ``"a"`` (time window at tx, frequency window at rx) yields
  ``V_taps[kappa, d] = sum_p V_p W_T(nu_kappa - nu_p) w_R(tau_d - tau_p)``;
* orientation ``"b"`` (frequency window at tx, time window at rx) yields
  ``U_taps[kappa, d] = sum_p U_p w_T(tau_d - tau_p) W_R(nu_kappa - nu_p)``.

Gain matrices are stored as ``gains[kappa - kappa_min, d - d_min]`` for both
conventions.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .channel import PhysicalChannel, ScattererDensity
from .windows import QuadratureWarning, WindowPair, WindowSpec, window_energy, window_transform

V_TAPS = "V_taps"
U_TAPS = "U_taps"
CONVENTIONS = (V_TAPS, U_TAPS)
CSV_HEADER = "kappa,d,nu_hz,tau_s,re,im,abs"

# Halved-step density self-check threshold, relative to the peak tap.
DENSITY_COARSE_TOL = 1e-3


class OrientationError(ValueError):
    """Requested tap convention does not match the window orientation."""


class TruncationWarning(UserWarning):
    """Tap range hit the hard index cap before the truncation policy was met."""


@dataclass(frozen=True)
class GridSpec:
    """Delay-Doppler grid set by the window durations.

    ``tx_center`` and ``rx_center`` hold the window centers in the units of
    the respective window: ``(t_i, f_o)`` for orientation ``"a"`` and
    ``(f_i, t_o)`` for orientation ``"b"``.
    """

    frame_duration: float
    bandwidth: float
    tx_center: float = 0.0
    rx_center: float = 0.0

    def __post_init__(self):
        for name in ("frame_duration", "bandwidth"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive and finite, got {v}")

    @classmethod
    def from_windows(cls, windows: WindowPair) -> "GridSpec":
        return cls(windows.time_window.width, windows.freq_window.width,
                   windows.tx.center, windows.rx.center)

    def time_center(self, orientation: str) -> float:
        return self.tx_center if orientation == "a" else self.rx_center

    def freq_center(self, orientation: str) -> float:
        return self.rx_center if orientation == "a" else self.tx_center

    def nu(self, kappa) -> np.ndarray:
        return np.asarray(kappa, dtype=float) / self.frame_duration

    def tau(self, d) -> np.ndarray:
        return np.asarray(d, dtype=float) / self.bandwidth

    def check_windows(self, windows: WindowPair) -> None:
        """Both window supports must fit inside the grid's sampling intervals."""
        o = windows.orientation
        tw, fw = windows.time_window, windows.freq_window
        _check_inside(tw, self.time_center(o), self.frame_duration, "time")
        _check_inside(fw, self.freq_center(o), self.bandwidth, "frequency")

    def to_json(self) -> dict[str, Any]:
        return {"frame_duration_s": self.frame_duration, "bandwidth_hz": self.bandwidth,
                "tx_center": self.tx_center, "rx_center": self.rx_center}

    @classmethod
    def from_json(cls, obj: dict[str, Any]) -> "GridSpec":
        return cls(float(obj["frame_duration_s"]), float(obj["bandwidth_hz"]),
                   float(obj.get("tx_center", 0.0)), float(obj.get("rx_center", 0.0)))


def _check_inside(w: WindowSpec, center: float, span: float, what: str) -> None:
    slack = 1e-12 * max(span, abs(center))
    if w.lo < center - span / 2 - slack or w.hi > center + span / 2 + slack:
        raise ValueError(
            f"{what} window support [{w.lo:g}, {w.hi:g}] exceeds the grid interval "
            f"[{center - span / 2:g}, {center + span / 2:g}]"
        )


@dataclass(frozen=True)
class TruncationPolicy:
    """Dual truncation criterion for the otherwise infinite tap sums.

    Each path's index window grows (doubling from ``initial_half_width``)
    until taps at its edge fall below ``rel_floor`` times the peak and the
    captured share of the path's energy along each axis is at least
    ``1 - energy_deficit / 2``; it never exceeds ``max_index`` around the
    path's nearest grid point. Taps below the floor are left out of the
    model unless they fall inside the forced index window.
    ``rel_floor=0`` disables the floor.
    """

    rel_floor: float = 1e-6
    energy_deficit: float = 1e-8
    max_index: int = 512
    initial_half_width: int = 8
    force_kappa: tuple[int, int] | None = None
    force_d: tuple[int, int] | None = None

    def __post_init__(self):
        if not 0 <= self.rel_floor < 1:
            raise ValueError("rel_floor must lie in [0, 1)")
        if not 0 <= self.energy_deficit < 1:
            raise ValueError("energy_deficit must lie in [0, 1)")
        if self.max_index < 1 or self.initial_half_width < 1:
            raise ValueError("index limits must be positive")
        for name in ("force_kappa", "force_d"):
            rng = getattr(self, name)
            if rng is not None:
                lo, hi = int(rng[0]), int(rng[1])
                if hi < lo:
                    raise ValueError(f"{name} must be an increasing pair")
                object.__setattr__(self, name, (lo, hi))

    def to_json(self) -> dict[str, Any]:
        out: dict[str, Any] = {"rel_floor": self.rel_floor, "energy_deficit": self.energy_deficit,
                               "max_index": self.max_index,
                               "initial_half_width": self.initial_half_width}
        if self.force_kappa is not None:
            out["force_kappa"] = list(self.force_kappa)
        if self.force_d is not None:
            out["force_d"] = list(self.force_d)
        return out

    @classmethod
    def from_json(cls, obj: dict[str, Any]) -> "TruncationPolicy":
        fk, fd = obj.get("force_kappa"), obj.get("force_d")
        return cls(float(obj.get("rel_floor", 1e-6)), float(obj.get("energy_deficit", 1e-8)),
                   int(obj.get("max_index", 512)), int(obj.get("initial_half_width", 8)),
                   tuple(fk) if fk is not None else None, tuple(fd) if fd is not None else None)


@dataclass(frozen=True, eq=False)
class TapMatrix:
    convention: str
    kappa_min: int
    d_min: int
    gains: np.ndarray
    grid: GridSpec
    truncation_epsilon: float = 0.0
    retained: np.ndarray | None = None
    truncation_bound: float = 0.0
    capped: bool = False
    coarse: bool = False
    policy: TruncationPolicy | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.convention not in CONVENTIONS:
            raise ValueError(f"unknown tap convention {self.convention!r}")
        g = np.asarray(self.gains, dtype=complex)
        if g.ndim != 2 or g.size == 0:
            raise ValueError("gains must be a non-empty 2-D array")
        keep = np.ones(g.shape, bool) if self.retained is None else np.asarray(self.retained, bool)
        if keep.shape != g.shape:
            raise ValueError("retained mask shape must match gains")
        g.setflags(write=False)
        keep.setflags(write=False)
        object.__setattr__(self, "gains", g)
        object.__setattr__(self, "retained", keep)

    @property
    def kappa(self) -> np.ndarray:
        return np.arange(self.kappa_min, self.kappa_min + self.gains.shape[0])

    @property
    def d(self) -> np.ndarray:
        return np.arange(self.d_min, self.d_min + self.gains.shape[1])

    @property
    def kappa_range(self) -> tuple[int, int]:
        return self.kappa_min, self.kappa_min + self.gains.shape[0] - 1

    @property
    def d_range(self) -> tuple[int, int]:
        return self.d_min, self.d_min + self.gains.shape[1] - 1

    @property
    def orientation(self) -> str:
        return "a" if self.convention == V_TAPS else "b"

    def retained_gains(self) -> np.ndarray:
        return np.where(self.retained, self.gains, 0.0)

    def at(self, kappa: int, d: int) -> complex:
        return complex(self.gains[kappa - self.kappa_min, d - self.d_min])

    def sidecar(self) -> dict[str, Any]:
        return {
            "convention": self.convention,
            "kappa_range": list(self.kappa_range),
            "d_range": list(self.d_range),
            "grid": self.grid.to_json(),
            "truncation": {
                "epsilon": self.truncation_epsilon,
                "bound": self.truncation_bound,
                "capped": self.capped,
                "coarse_density": self.coarse,
                "policy": self.policy.to_json() if self.policy is not None else None,
            },
            "retained_count": int(np.count_nonzero(self.retained)),
        }

    def to_csv(self) -> str:
        lines = [CSV_HEADER]
        ki, di = np.nonzero(self.retained)
        nu, tau = self.grid.nu(self.kappa), self.grid.tau(self.d)
        for i, j in zip(ki.tolist(), di.tolist()):
            g = complex(self.gains[i, j])
            lines.append(",".join((
                str(self.kappa_min + i), str(self.d_min + j), repr(float(nu[i])),
                repr(float(tau[j])), repr(g.real), repr(g.imag), repr(abs(g)),
            )))
        return "\n".join(lines) + "\n"

    def write(self, csv_path: str | Path) -> tuple[Path, Path]:
        """Write the CSV and its ``.json`` sidecar next to it."""
        csv_path = Path(csv_path)
        csv_path.write_text(self.to_csv())
        side = csv_path.with_suffix(".json")
        side.write_text(json.dumps(self.sidecar(), indent=2, sort_keys=True) + "\n")
        return csv_path, side


def read_taps(csv_path: str | Path) -> TapMatrix:
    """Load a TapMatrix written by :meth:`TapMatrix.write` (retained taps only)."""
    csv_path = Path(csv_path)
    meta = json.loads(csv_path.with_suffix(".json").read_text())
    k0, k1 = meta["kappa_range"]
    d0, d1 = meta["d_range"]
    gains = np.zeros((k1 - k0 + 1, d1 - d0 + 1), dtype=complex)
    keep = np.zeros(gains.shape, bool)
    rows = csv_path.read_text().splitlines()
    if rows[0] != CSV_HEADER:
        raise ValueError(f"unexpected tap CSV header {rows[0]!r}")
    for row in rows[1:]:
        k, d, _, _, re, im, _ = row.split(",")
        i, j = int(k) - k0, int(d) - d0
        gains[i, j] = complex(float(re), float(im))
        keep[i, j] = True
    tr = meta["truncation"]
    policy = TruncationPolicy.from_json(tr["policy"]) if tr.get("policy") else None
    return TapMatrix(meta["convention"], k0, d0, gains, GridSpec.from_json(meta["grid"]),
                     tr["epsilon"], keep, tr["bound"], tr["capped"], tr["coarse_density"], policy)


def _convention_for(windows: WindowPair, convention: str | None) -> str:
    natural = V_TAPS if windows.orientation == "a" else U_TAPS
    if convention is not None and convention != natural:
        raise OrientationError(
            f"{convention} requires orientation {'a' if convention == V_TAPS else 'b'} windows, "
            f"got orientation {windows.orientation}"
        )
    return natural


def doppler_factor(windows: WindowPair, grid: GridSpec, kappa, nu) -> np.ndarray:
    """``window_transform(time_window, nu_kappa - nu)`` as a ``(len(kappa), len(nu))`` matrix."""
    xi = grid.nu(np.asarray(kappa))[:, None] - np.atleast_1d(np.asarray(nu, dtype=float))[None, :]
    return window_transform(windows.time_window, xi)


def delay_factor(windows: WindowPair, grid: GridSpec, d, tau) -> np.ndarray:
    """``window_transform(freq_window, tau_d - tau)`` as a ``(len(d), len(tau))`` matrix."""
    xi = grid.tau(np.asarray(d))[:, None] - np.atleast_1d(np.asarray(tau, dtype=float))[None, :]
    return window_transform(windows.freq_window, xi)


def path_weights(channel: PhysicalChannel, windows: WindowPair) -> np.ndarray:
    """Per-path sample weights: V gains for orientation a, U gains for b."""
    g, _, _ = channel.arrays()
    return g if windows.orientation == "a" else channel.u_gains()


def tap_gains(channel: PhysicalChannel, windows: WindowPair, grid: GridSpec, kappa, d) -> np.ndarray:
    """Exact tap values on the given index vectors, no truncation logic."""
    _, tau, nu = channel.arrays()
    A = doppler_factor(windows, grid, kappa, nu)
    B = delay_factor(windows, grid, d, tau)
    return (A * path_weights(channel, windows)[None, :]) @ B.T


def _axis_energy(w: WindowSpec, span: float) -> float:
    # Poisson summation: sum_k |F(k/span - x)|^2 = span * integral |w|^2 when the support fits
    return span * window_energy(w)


def _grow(factor, centers, thresholds, energy_total, policy):
    """Half-widths per source along one axis; returns ``(half_widths, capped)``."""
    half = np.zeros(len(centers), dtype=int)
    capped = False
    need = 1.0 - policy.energy_deficit / 2
    for p, (c, thr) in enumerate(zip(centers, thresholds)):
        K = min(policy.initial_half_width, policy.max_index)
        while True:
            idx = np.arange(c - K, c + K + 1)
            vals = np.abs(factor(idx, p))
            ring = np.abs(idx - c) > K // 2
            edge_ok = thr <= 0 or float(np.max(vals[ring], initial=0.0)) < thr
            energy_ok = energy_total <= 0 or float(np.sum(vals**2)) >= need * energy_total
            if edge_ok and energy_ok:
                break
            if K >= policy.max_index:
                capped = True
                break
            K = min(2 * K, policy.max_index)
        half[p] = K
    return half, capped


def _union(lo, hi, forced):
    if forced is not None:
        lo, hi = min(lo, forced[0]), max(hi, forced[1])
    return int(lo), int(hi)


def _forced_mask(shape, k0, d0, policy):
    mask = np.zeros(shape, bool)
    if policy.force_kappa is None and policy.force_d is None:
        return mask
    kr = policy.force_kappa or (k0, k0 + shape[0] - 1)
    dr = policy.force_d or (d0, d0 + shape[1] - 1)
    mask[kr[0] - k0:kr[1] - k0 + 1, dr[0] - d0:dr[1] - d0 + 1] = True
    return mask


def _finish(convention, k0, d0, G, grid, policy, outside_norm, capped, coarse=False):
    peak = float(np.max(np.abs(G))) if G.size else 0.0
    if policy.rel_floor > 0:
        keep = np.abs(G) >= policy.rel_floor * peak
        keep |= _forced_mask(G.shape, k0, d0, policy)
    else:
        keep = np.ones(G.shape, bool)
    kept = float(np.sum(np.abs(G[keep]) ** 2))
    dropped = float(np.sum(np.abs(G[~keep]) ** 2))
    bound = (outside_norm**2 + dropped) / kept if kept > 0 else 0.0
    if capped:
        warnings.warn(
            f"tap range reached the +/-{policy.max_index} index cap before the truncation "
            f"policy was met (relative energy bound {bound:.2e})",
            TruncationWarning,
            stacklevel=3,
        )
    return TapMatrix(convention, k0, d0, G, grid, policy.rel_floor, keep, bound, capped, coarse,
                     policy)


def compute_taps_discrete(channel: PhysicalChannel, windows: WindowPair, grid: GridSpec | None = None,
                          trunc: TruncationPolicy | None = None,
                          convention: str | None = None) -> TapMatrix:
    """On-grid taps of a discrete-path channel under the given window pair."""
    trunc = trunc or TruncationPolicy()
    grid = grid or GridSpec.from_windows(windows)
    grid.check_windows(windows)
    conv = _convention_for(windows, convention)
    _, tau, nu = channel.arrays()
    weights = path_weights(channel, windows)
    if len(weights) == 0:
        k0, k1 = _union(0, 0, trunc.force_kappa)
        d0, d1 = _union(0, 0, trunc.force_d)
        G = np.zeros((k1 - k0 + 1, d1 - d0 + 1), dtype=complex)
        return _finish(conv, k0, d0, G, grid, trunc, 0.0, False)

    ck = np.rint(nu * grid.frame_duration).astype(int)
    cd = np.rint(tau * grid.bandwidth).astype(int)
    # per-path axis peaks over a short neighbourhood, used to scale the edge thresholds
    near = np.arange(-2, 3)
    amax = np.array([np.max(np.abs(doppler_factor(windows, grid, c + near, [v])))
                     for c, v in zip(ck, nu)])
    bmax = np.array([np.max(np.abs(delay_factor(windows, grid, c + near, [t])))
                     for c, t in zip(cd, tau)])
    mag = np.abs(weights)
    peak = float(np.max(mag * amax * bmax))
    floor = trunc.rel_floor * peak
    with np.errstate(divide="ignore"):
        thr_k = np.where(mag * bmax > 0, floor / (mag * bmax), np.inf)
        thr_d = np.where(mag * amax > 0, floor / (mag * amax), np.inf)
    if trunc.rel_floor == 0:
        thr_k = thr_d = np.zeros(len(weights))

    Ea = _axis_energy(windows.time_window, grid.frame_duration)
    Eb = _axis_energy(windows.freq_window, grid.bandwidth)
    hk, cap_k = _grow(lambda idx, p: doppler_factor(windows, grid, idx, [nu[p]])[:, 0],
                      ck, thr_k, Ea, trunc)
    hd, cap_d = _grow(lambda idx, p: delay_factor(windows, grid, idx, [tau[p]])[:, 0],
                      cd, thr_d, Eb, trunc)
    live = mag > 0
    k0, k1 = _union(np.min((ck - hk)[live], initial=0), np.max((ck + hk)[live], initial=0),
                    trunc.force_kappa)
    d0, d1 = _union(np.min((cd - hd)[live], initial=0), np.max((cd + hd)[live], initial=0),
                    trunc.force_d)
    kappa, d = np.arange(k0, k1 + 1), np.arange(d0, d1 + 1)
    A = doppler_factor(windows, grid, kappa, nu)
    B = delay_factor(windows, grid, d, tau)
    G = (A * weights[None, :]) @ B.T

    Ra = np.sum(np.abs(A) ** 2, axis=0)
    Rb = np.sum(np.abs(B) ** 2, axis=0)
    tails = np.sqrt(np.clip(Ea * Eb - Ra * Rb, 0.0, None))
    outside = float(np.sum(mag * tails))
    return _finish(conv, k0, d0, G, grid, trunc, outside, cap_k or cap_d)


def _trapezoid_weights(x: np.ndarray) -> np.ndarray:
    w = np.zeros_like(x)
    dx = np.diff(x)
    w[:-1] += dx / 2
    w[1:] += dx / 2
    return w


def _density_taps(density, windows, grid, kappa, d, nu_idx=None, tau_idx=None):
    nu, tau, V = density.nu_grid, density.tau_grid, density.values
    if nu_idx is not None:
        nu, tau, V = nu[nu_idx], tau[tau_idx], V[np.ix_(nu_idx, tau_idx)]
    if windows.orientation == "b":
        V = V * np.exp(-2j * np.pi * nu[:, None] * tau[None, :])
    Q = _trapezoid_weights(nu)[:, None] * V * _trapezoid_weights(tau)[None, :]
    A = doppler_factor(windows, grid, kappa, nu)
    B = delay_factor(windows, grid, d, tau)
    return A @ Q @ B.T, Q, A, B


def _every_other(n: int) -> np.ndarray:
    idx = np.arange(0, n, 2)
    return idx if idx[-1] == n - 1 else np.append(idx, n - 1)


def compute_taps_continuous(density: ScattererDensity, windows: WindowPair,
                            grid: GridSpec | None = None, trunc: TruncationPolicy | None = None,
                            convention: str | None = None) -> TapMatrix:
    """Taps of a tabulated scatterer density by 2-D composite trapezoid quadrature.

    The density is compared against the same integral on the grid with every
    other sample removed; a change above ``1e-3`` of the peak tap sets
    ``coarse`` and raises a :class:`QuadratureWarning`.
    """
    trunc = trunc or TruncationPolicy()
    grid = grid or GridSpec.from_windows(windows)
    grid.check_windows(windows)
    conv = _convention_for(windows, convention)
    nu, tau, V = density.nu_grid, density.tau_grid, density.values
    nz = np.abs(V) > 0
    if not nz.any():
        k0, k1 = _union(0, 0, trunc.force_kappa)
        d0, d1 = _union(0, 0, trunc.force_d)
        G = np.zeros((k1 - k0 + 1, d1 - d0 + 1), dtype=complex)
        return _finish(conv, k0, d0, G, grid, trunc, 0.0, False)

    # grow from the extreme occupied rows/columns as if they were single scatterers
    rows, cols = np.nonzero(nz.any(axis=1))[0], np.nonzero(nz.any(axis=0))[0]
    nu_ext = nu[[rows[0], rows[-1]]]
    tau_ext = tau[[cols[0], cols[-1]]]
    ck = np.rint(nu_ext * grid.frame_duration).astype(int)
    cd = np.rint(tau_ext * grid.bandwidth).astype(int)
    Ea = _axis_energy(windows.time_window, grid.frame_duration)
    Eb = _axis_energy(windows.freq_window, grid.bandwidth)
    near = np.arange(-2, 3)
    amax = max(float(np.max(np.abs(doppler_factor(windows, grid, c + near, [v]))))
               for c, v in zip(ck, nu_ext))
    bmax = max(float(np.max(np.abs(delay_factor(windows, grid, c + near, [t]))))
               for c, t in zip(cd, tau_ext))
    thr_k = np.full(2, trunc.rel_floor * amax)
    thr_d = np.full(2, trunc.rel_floor * bmax)
    hk, cap_k = _grow(lambda idx, p: doppler_factor(windows, grid, idx, [nu_ext[p]])[:, 0],
                      ck, thr_k, Ea, trunc)
    hd, cap_d = _grow(lambda idx, p: delay_factor(windows, grid, idx, [tau_ext[p]])[:, 0],
                      cd, thr_d, Eb, trunc)
    k0, k1 = _union(np.min(ck - hk), np.max(ck + hk), trunc.force_kappa)
    d0, d1 = _union(np.min(cd - hd), np.max(cd + hd), trunc.force_d)
    kappa, d = np.arange(k0, k1 + 1), np.arange(d0, d1 + 1)

    G, Q, A, B = _density_taps(density, windows, grid, kappa, d)
    G2, _, _, _ = _density_taps(density, windows, grid, kappa, d,
                                _every_other(nu.size), _every_other(tau.size))
    peak = float(np.max(np.abs(G)))
    coarse = peak > 0 and float(np.max(np.abs(G - G2))) > DENSITY_COARSE_TOL * peak
    if coarse:
        warnings.warn("scatterer density grid too coarse: halved-step check changed taps by "
                      f"{float(np.max(np.abs(G - G2))) / peak:.2e} of the peak",
                      QuadratureWarning, stacklevel=2)

    Ra = np.sum(np.abs(A) ** 2, axis=0)
    Rb = np.sum(np.abs(B) ** 2, axis=0)
    tails = np.sqrt(np.clip(Ea * Eb - Ra[:, None] * Rb[None, :], 0.0, None))
    outside = float(np.sum(np.abs(Q) * tails))
    return _finish(conv, k0, d0, G, grid, trunc, outside, cap_k or cap_d, coarse)


def compute_taps(channel: PhysicalChannel, windows: WindowPair, grid: GridSpec | None = None,
                 trunc: TruncationPolicy | None = None) -> TapMatrix:
    """Dispatch to the discrete or continuous tap route."""
    if channel.density is not None:
        return compute_taps_continuous(channel.density, windows, grid, trunc)
    return compute_taps_discrete(channel, windows, grid, trunc)


def reconstruct_spread(taps: TapMatrix, nu, tau, as_printed: bool = False):
    """Interpolate the windowed Doppler-delay spread function from V taps.

    Each axis uses the kernel ``sin(pi W x) / (W x)`` (and its Doppler
    counterpart) with the window-center phase terms. That kernel is ``pi``
    times the unit-normalised sinc, so the raw double sum equals ``pi**2``
    times the spread function; the result is divided by ``pi**2`` unless
    ``as_printed`` is set.
    """
    if taps.convention != V_TAPS:
        raise OrientationError("spread reconstruction is defined for V_taps only")
    grid = taps.grid
    t_i, f_o = grid.tx_center, grid.rx_center
    nu = np.asarray(nu, dtype=float)
    tau = np.asarray(tau, dtype=float)
    shape = np.broadcast(nu, tau).shape
    nu_f = np.broadcast_to(nu, shape).ravel()
    tau_f = np.broadcast_to(tau, shape).ravel()
    dn = nu_f[:, None] - grid.nu(taps.kappa)[None, :]
    dt = tau_f[:, None] - grid.tau(taps.d)[None, :]
    Kn = np.exp(-2j * np.pi * t_i * dn) * np.pi * np.sinc(grid.frame_duration * dn)
    Kt = np.exp(2j * np.pi * f_o * dt) * np.pi * np.sinc(grid.bandwidth * dt)
    out = np.sum((Kn @ taps.retained_gains()) * Kt, axis=1)
    if not as_printed:
        out = out / np.pi**2
    return out.reshape(shape) if shape else complex(out[0])


@dataclass(frozen=True)
class SpreadReport:
    nonzero_count_at: dict[float, int]
    energy_concentration: dict[int, float]
    rank1_residual: float
    peak_index: tuple[int, int]
    peak_abs: float

    def to_json(self) -> dict[str, Any]:
        return {
            "nonzero_count_at": {repr(k): v for k, v in self.nonzero_count_at.items()},
            "energy_concentration": {str(k): v for k, v in self.energy_concentration.items()},
            "rank1_residual": self.rank1_residual,
            "peak_index": list(self.peak_index),
            "peak_abs": self.peak_abs,
        }


def _power_sigma(A: np.ndarray, iters: int = 300, rtol: float = 1e-13, seed: int = 0):
    rng = np.random.default_rng(seed)
    v = np.abs(rng.standard_normal(A.shape[1])) + 1.0
    v /= np.linalg.norm(v)
    sigma = 0.0
    u = np.zeros(A.shape[0])
    for _ in range(iters):
        u = A @ v
        nu_ = np.linalg.norm(u)
        if nu_ == 0:
            return 0.0, u, v
        u /= nu_
        v = A.T @ u
        s = np.linalg.norm(v)
        if s == 0:
            return 0.0, u, v
        v /= s
        if abs(s - sigma) <= rtol * s:
            sigma = s
            break
        sigma = s
    return sigma, u, v


def rank1_residual(mag: np.ndarray) -> float:
    """``sigma_2 / sigma_1`` of a real matrix via two-sided power iteration with deflation."""
    s1, u, v = _power_sigma(mag)
    if s1 == 0:
        return 0.0
    s2, _, _ = _power_sigma(mag - s1 * np.outer(u, v), seed=1)
    return min(1.0, s2 / s1)


def spread_report(taps: TapMatrix, thresholds=(1e-9, 1e-6, 1e-3, 1e-2),
                  ks=(0, 1, 2, 3, 5, 10)) -> SpreadReport:
    """Sparsity and leakage statistics over the full computed tap rectangle."""
    mag = np.abs(taps.gains)
    peak = float(mag.max())
    i, j = np.unravel_index(int(np.argmax(mag)), mag.shape)
    counts = {float(t): int(np.count_nonzero(mag > t * peak)) for t in thresholds}
    energy = mag**2
    total = float(energy.sum())
    conc = {}
    for K in sorted(int(k) for k in ks):
        block = energy[max(0, i - K):i + K + 1, max(0, j - K):j + K + 1]
        conc[K] = float(block.sum()) / total if total > 0 else 0.0
    return SpreadReport(counts, conc, rank1_residual(mag),
                        (taps.kappa_min + int(i), taps.d_min + int(j)), peak)

