"""Command-line front end.

Exit codes: 0 success, 2 configuration error, 3 numeric warning under
``--strict``, 4 equivalence tolerance exceeded.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from .config import ConfigError, RunConfig, builtin_configs
from .ongrid import OrientationError, TapMatrix, TruncationWarning, compute_taps, spread_report
from .simkernel import ModelError, verify_equivalence
from .windows import QuadratureWarning

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_TOLERANCE = 4

FIGURES = ("fig3", "fig4", "fig5")
# half-size of the 2-D grid exported around the peak tap
FIGURE_HALF_SPAN = 32
NUMERIC_WARNINGS = (TruncationWarning, QuadratureWarning)


def _dump_json(path: Path, obj: Any) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _figure_names(figure: str | None) -> list[str]:
    names = list(builtin_configs())
    if figure is None:
        return names
    return [n for n in names if n == figure or n.startswith(figure + "_")]


def _rows(header: str, rows) -> str:
    return "\n".join([header, *(",".join(map(str, r)) for r in rows)]) + "\n"


def figure_bundle(taps: TapMatrix, name: str, out: Path) -> dict[str, Any]:
    """Write peak-normalised delay/Doppler slices and the 2-D grid around the peak."""
    mag = np.abs(taps.gains)
    peak = float(mag.max())
    norm = mag / peak
    i, j = np.unravel_index(int(np.argmax(mag)), mag.shape)
    kappa, d = taps.kappa, taps.d
    nu, tau = taps.grid.nu(kappa), taps.grid.tau(d)

    (out / f"{name}_delay_slice.csv").write_text(_rows(
        "d,tau_s,abs_norm",
        ((int(d[c]), repr(float(tau[c])), repr(float(norm[i, c]))) for c in range(d.size))))
    (out / f"{name}_doppler_slice.csv").write_text(_rows(
        "kappa,nu_hz,abs_norm",
        ((int(kappa[r]), repr(float(nu[r])), repr(float(norm[r, j]))) for r in range(kappa.size))))
    r0, r1 = max(0, i - FIGURE_HALF_SPAN), min(mag.shape[0], i + FIGURE_HALF_SPAN + 1)
    c0, c1 = max(0, j - FIGURE_HALF_SPAN), min(mag.shape[1], j + FIGURE_HALF_SPAN + 1)
    (out / f"{name}_grid.csv").write_text(_rows(
        "kappa,d,abs_norm",
        ((int(kappa[r]), int(d[c]), repr(float(norm[r, c])))
         for r in range(r0, r1) for c in range(c0, c1))))

    summary = spread_report(taps).to_json()
    summary["peak_unnormalized"] = peak
    summary["convention"] = taps.convention
    _dump_json(out / f"{name}_summary.json", summary)
    return summary


def _cmd_taps(args) -> int:
    cfg = RunConfig.load(args.config)
    taps = compute_taps(cfg.channel, cfg.windows, cfg.grid, cfg.truncation)
    csv_path, side = taps.write(args.out / f"{cfg.output_prefix}_taps.csv")
    print(f"wrote {csv_path} ({int(np.count_nonzero(taps.retained))} taps) and {side}")
    return EXIT_OK


def _cmd_verify(args) -> int:
    cfg = RunConfig.load(args.config)
    if not cfg.channel.is_discrete:
        raise ConfigError("verify needs a discrete-path channel")
    trials = args.trials if args.trials is not None else cfg.verify.trials
    seed = args.seed if args.seed is not None else cfg.seed
    rep = verify_equivalence(cfg.channel, cfg.windows, cfg.grid, cfg.truncation, n_trials=trials,
                             seed=seed, oversampling=cfg.verify.oversampling,
                             tolerance=cfg.verify.tolerance, workers=args.workers)
    path = args.out / f"{cfg.output_prefix}_report.json"
    _dump_json(path, rep.to_json())
    verdict = "within" if rep.passed else "EXCEEDS"
    print(f"wrote {path}: nmse_max={rep.nmse_max:.3e} {verdict} tolerance {cfg.verify.tolerance:g}")
    return EXIT_OK if rep.passed else EXIT_TOLERANCE


def _cmd_figures(args) -> int:
    configs = builtin_configs()
    figures = [args.figure] if args.figure else list(FIGURES)
    for fig in figures:
        for name in _figure_names(fig):
            cfg = configs[name]
            taps = compute_taps(cfg.channel, cfg.windows, cfg.grid, cfg.truncation)
            s = figure_bundle(taps, name, args.out)
            print(f"{name}: peak {s['peak_index']}, energy within K=3 "
                  f"{s['energy_concentration']['3']:.6f}")
    return EXIT_OK


def _cmd_export(args) -> int:
    configs = builtin_configs()
    for name in _figure_names(args.figure):
        path = args.out / f"{name}.json"
        path.write_text(configs[name].dumps())
        print(f"wrote {path}")
    return EXIT_OK


COMMANDS: dict[str, Callable] = {
    "taps": _cmd_taps, "verify": _cmd_verify, "figures": _cmd_figures, "export": _cmd_export,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ddequiv",
                                description="On-grid delay-Doppler equivalents of off-grid channels.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config: bool):
        if config:
            sp.add_argument("--config", type=Path, required=True, help="RunConfig JSON document")
        sp.add_argument("--out", type=Path, required=True, help="output directory")
        sp.add_argument("--strict", action="store_true",
                        help="exit 3 if a truncation or quadrature warning is raised")

    common(sub.add_parser("taps", help="compute the on-grid tap matrix (CSV + JSON sidecar)"), True)
    v = sub.add_parser("verify", help="compare the on-grid model against the off-grid oracle")
    common(v, True)
    v.add_argument("--trials", type=int, default=None)
    v.add_argument("--seed", type=int, default=None)
    v.add_argument("--workers", type=int, default=1, help="threads for independent trials")
    f = sub.add_parser("figures", help="export figure data for the built-in single-path examples")
    common(f, False)
    f.add_argument("--figure", choices=FIGURES, default=None)
    e = sub.add_parser("export", help="write the built-in example configs as JSON")
    common(e, False)
    e.add_argument("--figure", choices=FIGURES, default=None)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        print(f"error: cannot create {args.out}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            code = COMMANDS[args.command](args)
        except (ConfigError, OrientationError, ModelError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
    numeric = [w for w in caught if issubclass(w.category, NUMERIC_WARNINGS)]
    for w in caught:
        print(f"warning: {w.category.__name__}: {w.message}", file=sys.stderr)
    if numeric and args.strict and code == EXIT_OK:
        return EXIT_NUMERIC
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
