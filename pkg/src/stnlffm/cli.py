"""Command-line interface: ``stnlffm fuse | evaluate | synth | sweep``.

Exit codes: 0 success, 2 usage, 3 I/O, 4 geometry/validation, 5 numeric failure.
Every command that writes files also writes a ``*.manifest.json`` recording
the resolved configuration, so ``--config <manifest>`` reproduces a run.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from dataclasses import replace
from pathlib import Path

from . import __version__
from .errors import ConfigError, FusionError, GeometryError, NumericError, RasterFormatError
from .evaluation import evaluate
from .fusion import FusionConfig, FusionTask, Mode, predict_image, predict_series
from .raster import ReferencePair, read_raster, upsample_cubic, write_raster
from .synth import SceneSpec, generate_series, read_series, write_series

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_GEOMETRY, EXIT_NUMERIC = 0, 2, 3, 4, 5

# flag dest -> (config section, field)
_FLAG_FIELDS = {
    "window": ("similarity", "search_window"),
    "d": ("similarity", "d"),
    "classes": ("similarity", "classes"),
    "sigma_cc": ("similarity", "sigma_cc"),
    "cap": ("similarity", "cap"),
    "patch": ("weights", "patch_size"),
    "h": ("weights", "h"),
    "kernel_sigma": ("weights", "kernel_sigma"),
    "whole_window": ("weights", "whole_window"),
    "epsilon": ("weights", "epsilon"),
    "gamma": ("regression", "gamma"),
    "min_points": ("regression", "min_points"),
    "tile": (None, "tile_size"),
    "threads": (None, "thread_hint"),
}


def _load_config_file(path) -> dict:
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() == ".toml":
        try:
            import tomllib
        except ModuleNotFoundError:  # Python < 3.11
            import tomli as tomllib
        data = tomllib.loads(text)
    else:
        data = json.loads(text)
    # a run manifest carries its resolved configuration under "config"
    if "config" in data and isinstance(data["config"], dict):
        data = data["config"]
    return data


def resolve_config(args) -> FusionConfig:
    """Built-in defaults, overridden by ``--config``, overridden by explicit flags."""
    cfg = FusionConfig().to_dict()
    if getattr(args, "config", None):
        for key, value in _load_config_file(args.config).items():
            if isinstance(value, dict):
                cfg.setdefault(key, {}).update(value)
            else:
                cfg[key] = value
    for flag, (section, name) in _FLAG_FIELDS.items():
        value = getattr(args, flag, None)
        if value is None:
            continue
        if section is None:
            cfg[name] = value
        else:
            cfg[section][name] = value
    # the whole-weight window follows the search window unless set on its own
    if getattr(args, "window", None) is not None and getattr(args, "whole_window", None) is None:
        cfg["weights"]["whole_window"] = args.window
    if getattr(args, "squared_distance", False):
        cfg["weights"]["squared"] = True
    if getattr(args, "mode", None):
        cfg["mode"] = Mode.parse(args.mode).value
    try:
        return FusionConfig.from_dict(cfg)
    except TypeError as exc:
        raise ConfigError(f"bad configuration: {exc}") from exc


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("fusion parameters")
    g.add_argument("--config", help="JSON or TOML config file, or a previous run manifest")
    g.add_argument("--window", type=int, help="similar-pixel search window (odd, pixels)")
    g.add_argument("--whole-window", type=int, help="whole-weight window (defaults to --window)")
    g.add_argument("--patch", type=int, help="patch size for individual weights (odd)")
    g.add_argument("--h", type=float, help="filtering parameter h")
    g.add_argument("--kernel-sigma", type=float, help="Gaussian patch kernel std")
    g.add_argument("--d", type=float, help="spectral-threshold free parameter")
    g.add_argument("--classes", type=int, help="class count in the spectral threshold")
    g.add_argument("--sigma-cc", type=float, help="change-consistency tolerance")
    g.add_argument("--gamma", type=float, help="regularisation pulling a towards 1")
    g.add_argument("--min-points", type=int, help="minimum members for a full regression")
    g.add_argument("--epsilon", type=float, help="whole-weight zero-change guard")
    g.add_argument("--cap", type=int, help="maximum similar pixels per date")
    g.add_argument("--squared-distance", action="store_true",
                   help="use squared patch differences")
    g.add_argument("--tile", type=int, help="tile size in pixels")
    g.add_argument("--threads", type=int, help="worker thread cap")


def _write_manifest(path, command, argv, config, inputs, outputs, started, seed=None, extra=None):
    manifest = {
        "command": command,
        "argv": list(argv),
        "config": config.to_dict() if config is not None else None,
        "inputs": inputs,
        "outputs": outputs,
        "duration_s": time.perf_counter() - started,
        "tool_version": __version__,
        "seed": seed,
    }
    if extra:
        manifest.update(extra)
    Path(path).write_text(json.dumps(manifest, indent=2, default=str))
    return manifest


def _manifest_path(out) -> Path:
    out = Path(out)
    return out.with_name(out.name + ".manifest.json")


# ------------------------------------------------------------------- commands


def cmd_fuse(args, argv) -> int:
    started = time.perf_counter()
    config = resolve_config(args)
    factor = args.upsample_factor

    def load_coarse(path):
        grid = read_raster(path)
        return upsample_cubic(grid, factor) if factor > 1 else grid

    pairs = [ReferencePair(date, read_raster(fine), load_coarse(coarse))
             for fine, coarse, date in args.pair]
    coarse_p = load_coarse(args.coarse)
    task = FusionTask(tuple(pairs), coarse_p, args.date)
    grid = predict_image(task, config)
    write_raster(grid, args.out)
    _write_manifest(
        _manifest_path(args.out), "fuse", argv, config,
        {"pairs": [list(p) for p in args.pair], "coarse": args.coarse, "date": args.date,
         "upsample_factor": factor},
        {"prediction": str(args.out)}, started,
        extra={"shape": list(grid.shape)},
    )
    return EXIT_OK


def cmd_evaluate(args, argv) -> int:
    started = time.perf_counter()
    report = evaluate(read_raster(args.predicted), read_raster(args.observed))
    outputs = {}
    if args.csv:
        Path(args.csv).write_text(report.to_csv())
        outputs["csv"] = args.csv
    if args.json:
        Path(args.json).write_text(report.to_json())
        outputs["json"] = args.json
    if not outputs:
        sys.stdout.write(report.to_csv())
    else:
        first = args.csv or args.json
        _write_manifest(_manifest_path(first), "evaluate", argv, None,
                        {"predicted": args.predicted, "observed": args.observed},
                        outputs, started)
    return EXIT_OK


def cmd_synth(args, argv) -> int:
    started = time.perf_counter()
    spec = SceneSpec.from_json(args.spec) if args.spec else SceneSpec()
    if args.seed is not None:
        spec = replace(spec, seed=args.seed)
    frames = generate_series(spec, args.dates)
    index = write_series(frames, args.out_dir, spec)
    _write_manifest(Path(args.out_dir) / "synth.manifest.json", "synth", argv, None,
                    {"spec": args.spec, "dates": args.dates}, {"index": str(index)},
                    started, seed=spec.seed, extra={"spec": spec.to_dict()})
    return EXIT_OK


def cmd_sweep(args, argv) -> int:
    started = time.perf_counter()
    base = resolve_config(args)
    frames = read_series(args.series)
    pairs = [fr.pair() for fr in frames]
    truth = {fr.date_tag: fr.truth for fr in frames}
    rows = []
    for mode in args.modes:
        config = replace(base, mode=Mode.parse(mode))
        _, report = predict_series(pairs, protocol="symmetric_sweep", config=config,
                                   truth=truth)
        for r in report:
            rows.append({"interval_days": r["interval_days"], "mode": config.mode.value,
                         "mean_rmse": r["mean_rmse"], "mean_r2": r["mean_r_squared"]})
    out = Path(args.out)
    with open(out, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=["interval_days", "mode", "mean_rmse", "mean_r2"],
                                lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
    _write_manifest(_manifest_path(out), "sweep", argv, base,
                    {"series": args.series, "modes": args.modes}, {"csv": str(out)}, started)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stnlffm", description=__doc__.splitlines()[0],
                                     allow_abbrev=False)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fuse", allow_abbrev=False, help="predict a fine image at the prediction date")
    p.add_argument("--pair", nargs=3, action="append", required=True,
                   metavar=("FINE", "COARSE", "DATE"), help="reference pair (repeatable)")
    p.add_argument("--coarse", required=True, help="coarse raster at the prediction date")
    p.add_argument("--date", required=True, help="prediction date (ordinal day or ISO)")
    p.add_argument("--out", required=True, help="output raster path")
    p.add_argument("--mode", choices=["stnlffm", "starfm"], help="prediction mode")
    p.add_argument("--upsample-factor", type=int, default=1,
                   help="coarse inputs are native resolution; upsample by this factor")
    _add_config_flags(p)
    p.set_defaults(func=cmd_fuse)

    p = sub.add_parser("evaluate", allow_abbrev=False, help="RMSE and R^2 of a prediction against an observation")
    p.add_argument("predicted")
    p.add_argument("observed")
    p.add_argument("--csv", help="write the report as CSV")
    p.add_argument("--json", help="write the report as JSON")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("synth", allow_abbrev=False, help="generate a synthetic fine/coarse series")
    p.add_argument("--spec", help="scene spec JSON file")
    p.add_argument("--dates", nargs="+", required=True, type=int, help="ordinal dates")
    p.add_argument("--seed", type=int)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("sweep", allow_abbrev=False, help="RMSE versus symmetric reference interval")
    p.add_argument("--series", required=True, help="series.json index written by synth")
    p.add_argument("--modes", nargs="+", default=["stnlffm", "starfm"],
                   choices=["stnlffm", "starfm"])
    p.add_argument("--out", required=True, help="output CSV")
    _add_config_flags(p)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return args.func(args, argv)
    except OSError as exc:
        print(f"stnlffm: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (NumericError, FloatingPointError, ZeroDivisionError) as exc:
        print(f"stnlffm: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (GeometryError, RasterFormatError, ConfigError, FusionError, ValueError) as exc:
        print(f"stnlffm: validation error: {exc}", file=sys.stderr)
        return EXIT_GEOMETRY


if __name__ == "__main__":
    sys.exit(main())
