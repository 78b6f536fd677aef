"""Command-line entry point.

Subcommands: score (run detection over a manifest), eval (recompute metrics
from scores.csv), sweep (robustness grid), synth (build the synthetic
corpus), series (per-frame feature series for one clip).

Exit codes: 0 success, 1 configuration/usage error, 2 completed with partial
failures (skipped entries or failed grid points).
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

from .errors import ConfigError, D3Error, UndefinedMetricError
from .harness import (
    RunConfig,
    compute_series,
    config_from_dict,
    emit_report,
    evaluate,
    parse_scores,
    run_detection,
)
from .metrics import REAL_POOL_TAG
from .robustness import default_grid, degradation_rows, grid_from_levels, sweep
from .synth import DynamicsParams, make_corpus


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors; this tool reserves 2 for partial
    # failures, so usage errors become exit code 1.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _load_config(path: str | None) -> RunConfig:
    if path is None:
        return RunConfig()
    p = Path(path)
    try:
        if p.suffix.lower() == ".toml":
            import tomli

            raw = tomli.loads(p.read_text(encoding="utf-8"))
        else:
            raw = json.loads(p.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except (json.JSONDecodeError, ValueError) as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    return config_from_dict(raw)


def _resolve_workers(cfg: RunConfig, flag_value: int | None) -> int:
    """Priority: --workers flag, then D3_WORKERS, then the config file."""
    if flag_value is not None:
        return flag_value
    env = os.environ.get("D3_WORKERS")
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise ConfigError(f"D3_WORKERS must be an integer, got {env!r}") from exc
    return cfg.workers


def _levels(text: str, cast):
    try:
        return [cast(tok) for tok in text.split(",") if tok.strip() != ""]
    except ValueError as exc:
        raise ConfigError(f"bad grid levels {text!r}: {exc}") from exc


def _print_report(report) -> None:
    for name, m in report.per_subset.items():
        print(f"subset {name}: ap={m.ap:.4f} auroc={m.auroc:.4f} (n={m.n_pos}+{m.n_neg})")
    print(f"mAP={report.mean_ap:.4f} mean_auroc={report.mean_auroc:.4f}")


def _cmd_score(args) -> int:
    cfg = _load_config(args.config)
    workers = _resolve_workers(cfg, args.workers)
    if args.strict:
        import dataclasses

        cfg = dataclasses.replace(cfg, skip_short_videos=False)
    run = run_detection(args.manifest, cfg, workers=workers, collect_series=args.series)
    report = None
    try:
        report = evaluate(run, real_pool_tag=args.real_tag, config=cfg)
    except UndefinedMetricError as exc:
        print(f"note: no evaluation ({exc})", file=sys.stderr)
    emit_report(report, run.records, args.out, config=cfg, run=run)
    print(f"scored {len(run.records)} clips, skipped {len(run.skipped)} -> {args.out}")
    if report is not None:
        _print_report(report)
    return 2 if run.skipped else 0


def _cmd_eval(args) -> int:
    records = parse_scores(args.scores)
    report = evaluate(records, real_pool_tag=args.real_tag)
    _print_report(report)
    if args.out:
        Path(args.out).write_text(
            json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8"
        )
    return 0


def _cmd_sweep(args) -> int:
    cfg = _load_config(args.config)
    workers = _resolve_workers(cfg, args.workers)
    if args.blur_sigmas is None and args.jpeg_qualities is None:
        grid = default_grid()
    else:
        grid = grid_from_levels(
            _levels(args.blur_sigmas or "", float),
            _levels(args.jpeg_qualities or "", int),
        )
    result = sweep(args.manifest, cfg, grid, workers=workers)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    if result.reports:
        with open(out_dir / "sweep.csv", "w", encoding="utf-8", newline="") as fh:
            csv.writer(fh, lineterminator="\n").writerows(degradation_rows(result.reports))
        with open(out_dir / "sweep_reports.json", "w", encoding="utf-8") as fh:
            json.dump(
                {p.label: r.to_dict() for p, r in result.reports.items()}, fh, indent=2
            )
            fh.write("\n")
    for p, exc in result.failures:
        print(f"grid point {p.label} failed: {exc}", file=sys.stderr)
    print(f"swept {len(result.reports)}/{len(result.reports) + len(result.failures)} points -> {out_dir}")
    return 2 if result.failures else 0


def _cmd_synth(args) -> int:
    params = DynamicsParams(seed=args.seed)
    manifest = make_corpus(args.n_real, args.n_fake, args.out, params)
    print(manifest)
    return 0


def _cmd_series(args) -> int:
    cfg = _load_config(args.config)
    series = compute_series(args.video, cfg)
    out_fh = open(args.out, "w", encoding="utf-8", newline="") if args.out else sys.stdout
    try:
        writer = csv.writer(out_fh, lineterminator="\n")
        writer.writerow(["series", "index", "value"])
        for name, values in series.items():
            for k, v in enumerate(values):
                writer.writerow([name, k, repr(v)])
    finally:
        if args.out:
            out_fh.close()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="d3", description="Training-free generated-video detector.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("score", help="score a manifest of videos")
    p.add_argument("--manifest", required=True)
    p.add_argument("--config", default=None, help="JSON or TOML run config")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--real-tag", default=REAL_POOL_TAG)
    p.add_argument("--series", action="store_true", help="also write series.csv")
    p.add_argument("--strict", action="store_true", help="fail on broken entries")
    p.set_defaults(func=_cmd_score)

    p = sub.add_parser("eval", help="recompute metrics from scores.csv")
    p.add_argument("--scores", required=True)
    p.add_argument("--real-tag", default=REAL_POOL_TAG)
    p.add_argument("--out", default=None, help="optional report.json path")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("sweep", help="robustness sweep over blur/JPEG levels")
    p.add_argument("--manifest", required=True)
    p.add_argument("--config", default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--blur-sigmas", default=None, help="comma-separated, e.g. 0,1,2,3,4")
    p.add_argument("--jpeg-qualities", default=None, help="comma-separated, e.g. 100,90,80,70,60")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("synth", help="generate the synthetic corpus")
    p.add_argument("--n-real", type=int, default=100)
    p.add_argument("--n-fake", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("series", help="per-frame feature series for one clip")
    p.add_argument("--video", required=True)
    p.add_argument("--config", default=None)
    p.add_argument("--out", default=None, help="CSV path (default: stdout)")
    p.set_defaults(func=_cmd_series)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except D3Error as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
