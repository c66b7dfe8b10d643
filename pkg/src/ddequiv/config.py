"""Run configuration documents and the built-in numerical-example setups."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .channel import PhysicalChannel
from .ongrid import GridSpec, TruncationPolicy
from .windows import WindowPair, hamming, raised_cosine, rect

SCHEMA_VERSION = 1

# Numerical-example system: W = 7.68 MHz, T = 16384 / W.
EXAMPLE_BANDWIDTH = 7.68e6
EXAMPLE_FRAME = 16384 / EXAMPLE_BANDWIDTH
EXAMPLE_DELAY_BINS = 25.5
EXAMPLE_DOPPLER_BINS = 15.5
EXAMPLE_RC_ROLLOFF = 0.2

# On/off-grid placements in each coordinate, as (delay bins, Doppler bins).
FIG5_CASES = {
    "tau25_nu15": (25.0, 15.0),
    "tau25.5_nu15": (25.5, 15.0),
    "tau25_nu15.5": (25.0, 15.5),
    "tau25.5_nu15.5": (25.5, 15.5),
}


class ConfigError(ValueError):
    """Malformed or inconsistent run configuration."""


@dataclass(frozen=True)
class VerifySettings:
    trials: int = 5
    oversampling: float = 2.0
    tolerance: float = 1e-4

    def to_json(self) -> dict[str, Any]:
        return {"trials": self.trials, "oversampling": self.oversampling,
                "tolerance": self.tolerance}

    @classmethod
    def from_json(cls, obj: dict[str, Any]) -> "VerifySettings":
        return cls(int(obj.get("trials", 5)), float(obj.get("oversampling", 2.0)),
                   float(obj.get("tolerance", 1e-4)))


@dataclass(frozen=True)
class RunConfig:
    channel: PhysicalChannel
    windows: WindowPair
    grid: GridSpec
    truncation: TruncationPolicy = field(default_factory=TruncationPolicy)
    output_prefix: str = "taps"
    seed: int = 0
    verify: VerifySettings = field(default_factory=VerifySettings)

    def __post_init__(self):
        try:
            self.grid.check_windows(self.windows)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def to_json(self) -> dict[str, Any]:
        return {
            "schema_version": SCHEMA_VERSION,
            "channel": self.channel.to_json(),
            "windows": self.windows.to_json(),
            "grid": self.grid.to_json(),
            "truncation": self.truncation.to_json(),
            "output": {"prefix": self.output_prefix},
            "seed": self.seed,
            "verify": self.verify.to_json(),
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, obj: Any) -> "RunConfig":
        if not isinstance(obj, dict):
            raise ConfigError("config must be a JSON object")
        version = obj.get("schema_version")
        if version is None:
            raise ConfigError("config is missing schema_version")
        if version != SCHEMA_VERSION:
            raise ConfigError(f"unsupported schema_version {version!r}")
        try:
            channel = PhysicalChannel.from_json(obj["channel"])
            windows = WindowPair.from_json(obj["windows"])
            grid = (GridSpec.from_json(obj["grid"]) if obj.get("grid") is not None
                    else GridSpec.from_windows(windows))
            trunc = TruncationPolicy.from_json(obj.get("truncation", {}))
            verify = VerifySettings.from_json(obj.get("verify", {}))
            prefix = str(obj.get("output", {}).get("prefix", "taps"))
            seed = int(obj.get("seed", 0))
        except KeyError as exc:
            raise ConfigError(f"config is missing field {exc.args[0]!r}") from exc
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        return cls(channel, windows, grid, trunc, prefix, seed, verify)

    @classmethod
    def load(cls, path: str | Path) -> "RunConfig":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
        return cls.from_json(obj)


def example_config(delay_bins: float = EXAMPLE_DELAY_BINS,
                   doppler_bins: float = EXAMPLE_DOPPLER_BINS,
                   smooth: bool = False, prefix: str = "taps") -> RunConfig:
    """Single unit-gain path with delay ``delay_bins / W`` and Doppler ``doppler_bins / T``."""
    W, T = EXAMPLE_BANDWIDTH, EXAMPLE_FRAME
    if smooth:
        windows = WindowPair(hamming("time", T), raised_cosine("frequency", W, EXAMPLE_RC_ROLLOFF))
    else:
        windows = WindowPair(rect("time", T), rect("frequency", W))
    channel = PhysicalChannel.from_paths([(1.0, delay_bins / W, doppler_bins / T)])
    return RunConfig(channel, windows, GridSpec(T, W), output_prefix=prefix)


def builtin_configs() -> dict[str, RunConfig]:
    configs = {
        "fig3": example_config(prefix="fig3"),
        "fig4": example_config(smooth=True, prefix="fig4"),
    }
    for label, (db, kb) in FIG5_CASES.items():
        name = f"fig5_{label}"
        configs[name] = example_config(db, kb, prefix=name)
    return configs
