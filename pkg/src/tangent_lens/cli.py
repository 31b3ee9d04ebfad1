"""Command line entry point.

    tangent-lens zoom --config example-4-2 --out run/
    tangent-lens analyze check|lyapunov|tangent --config cfg.json --out run/

Every command writes trace.csv and report.json into --out; zoom adds one
frame_<scale>.ppm per scale and the analyze paths add a PNG figure.  Outputs
are functions of (config bytes, command line) only.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
import traceback
from pathlib import Path

import numpy as np

from tangent_lens import conditions, figures
from tangent_lens.config import RunConfig, load_config
from tangent_lens.render import render_frame, write_ppm
from tangent_lens.screens import epsilon_bound
from tangent_lens.spectral import carpet_lyapunov, lyapunov_estimate
from tangent_lens.symbolic import DomainError
from tangent_lens.tangents import modified_tangent, scale_row

EXIT_OK, EXIT_ERROR, EXIT_CHECK = 0, 1, 2
# failing any of these makes `analyze check` exit with EXIT_CHECK
GATING = ("separation", "projection", "lyapunov_distinct")


def fmt(v) -> str:
    """CSV cell: 17 significant digits for floats, plain text otherwise."""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    if isinstance(v, (list, tuple, dict)):
        return json.dumps(conditions._plain(v), separators=(",", ":"))
    return "" if v is None else str(v)


def write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([fmt(v) for v in r])


def write_json(path: Path, obj) -> None:
    text = json.dumps(conditions._plain(obj), indent=2, sort_keys=True, allow_nan=True)
    path.write_text(text + "\n", encoding="utf-8")


def _base_report(cfg: RunConfig, raw: bytes, args, command: str) -> dict:
    return {
        "command": command,
        "config": cfg.to_dict(),
        "config_sha256": hashlib.sha256(raw).hexdigest(),
        "seed": cfg.seed,
        "K": cfg.K,
        "samples": cfg.samples,
    }


def _address_report(ifs, cfg):
    addr, snap = cfg.address(ifs)
    return addr, {"prefix": list(addr.prefix), "tail": addr.tail, "snap_distance": snap,
                  "point": addr.point(ifs).tolist()}


TRACE_COLUMNS = ("scale", "level", "ratio", "pattern", "d_hausdorff", "max_height",
                 "epsilon", "n_rectangles", "vertical_extent")


def _trace_rows(rows):
    return [(r.t, r.level, r.ratio, r.pattern, r.d_hausdorff, r.max_height, r.epsilon,
             r.n_rectangles, r.vertical_extent) for r in rows]


def cmd_zoom(cfg: RunConfig, raw: bytes, args, out: Path) -> int:
    ifs = cfg.ifs()
    addr, where = _address_report(ifs, cfg)
    eps = epsilon_bound(ifs, cfg.K)
    rows, frames = [], []
    for k, t in enumerate(cfg.scales):
        row, ap, _ = scale_row(ifs, addr, t, cfg.K, cfg.samples, cfg.seed, k, eps)
        img = render_frame(ifs, ap.screen, size=args.size, square=args.square_screen)
        name = f"frame_{t:g}.ppm"
        write_ppm(out / name, img)
        rows.append(row)
        frames.append({"scale": t, "file": name, "level": row.level,
                       "sha256": hashlib.sha256((out / name).read_bytes()).hexdigest()})
    write_csv(out / "trace.csv", TRACE_COLUMNS, _trace_rows(rows))
    rep = _base_report(cfg, raw, args, "zoom")
    rep.update(address=where, epsilon=eps, frames=frames, square_screen=args.square_screen,
               separation=conditions.check_separation(ifs).as_dict())
    write_json(out / "report.json", rep)
    return EXIT_OK


def run_checks(cfg: RunConfig, ifs, weights) -> list:
    reports = [
        conditions.check_separation(ifs),
        conditions.not_on_a_line(ifs, seed=cfg.seed),
        conditions.check_projection_sufficient(ifs, weights=weights),
        conditions.check_lyapunov_distinct(ifs, weights),
    ]
    if ifs.is_diagonal:
        reports.append(conditions.check_carpet(ifs, weights))
    else:
        reports += [conditions.check_pinching(ifs), conditions.check_twisting(ifs)]
    if cfg.line_region is not None:
        reports.append(conditions.check_line_condition(ifs, cfg.line_region))
    return reports


def cmd_check(cfg, raw, args, out) -> int:
    ifs, weights = cfg.ifs(), cfg.bernoulli()
    reports = run_checks(cfg, ifs, weights)
    bound = conditions.forbidden_measure_bound(weights, ifs.m, cfg.K, 20)
    write_csv(out / "trace.csv", ("name", "verdict", "label", "witness"),
              [(r.name, r.verdict, r.label, r.witness) for r in reports])
    rep = _base_report(cfg, raw, args, "analyze check")
    rep.update(reports=[r.as_dict() for r in reports],
               forbidden_bound={"k": 20, "K": cfg.K, "value": bound},
               delta_lb=ifs.delta_lb, L_est=ifs.L_est)
    write_json(out / "report.json", rep)
    figures.plot_covers(ifs, out / "covers.png", title=cfg.name)
    failing = [r.name for r in reports if r.name in GATING and r.verdict == conditions.FAIL]
    if failing:
        print(f"condition check failed: {', '.join(failing)}", file=sys.stderr)
        return EXIT_CHECK
    return EXIT_OK


def cmd_lyapunov(cfg, raw, args, out) -> int:
    ifs, weights = cfg.ifs(), cfg.bernoulli()
    est = lyapunov_estimate(ifs, weights, args.n, args.trials, seed=cfg.seed,
                            threads=args.threads)
    closed = carpet_lyapunov(ifs, weights) if ifs.is_diagonal else None
    # a carpet's closed form lists the horizontal and vertical sums; the
    # estimator returns them ordered, so compare sorted
    cf = sorted(closed) if closed else (None, None)
    write_csv(out / "trace.csv", ("quantity", "estimate", "std_error", "closed_form"),
              [("lambda_1", est.lambda1, est.se1, cf[0]),
               ("lambda_2", est.lambda2, est.se2, cf[1])])
    write_csv(out / "trials.csv", ("trial", "lambda_1", "lambda_2"),
              [(k, float(a), float(b)) for k, (a, b) in enumerate(est.samples)])
    rep = _base_report(cfg, raw, args, "analyze lyapunov")
    rep.update(n=args.n, trials=args.trials,
               estimate={"lambda_1": est.lambda1, "lambda_2": est.lambda2,
                         "se_1": est.se1, "se_2": est.se2},
               closed_form=None if closed is None else
               {"horizontal": closed[0], "vertical": closed[1]})
    write_json(out / "report.json", rep)
    figures.plot_lyapunov(est.samples, out / "lyapunov.png", closed)
    return EXIT_OK


def cmd_tangent(cfg, raw, args, out) -> int:
    ifs = cfg.ifs()
    addr, where = _address_report(ifs, cfg)
    res = modified_tangent(ifs, addr, cfg.scales, K=cfg.K, samples=cfg.samples,
                           seed=cfg.seed, min_scale=cfg.min_scale)
    write_csv(out / "trace.csv", TRACE_COLUMNS, _trace_rows(res.scale_trace))
    rep = _base_report(cfg, raw, args, "analyze tangent")
    rep.update(address=where, kind=res.kind, fiber_set=res.fiber_set, segment=res.segment,
               porosity_est=res.porosity_est, perfect_heuristic=res.perfect_heuristic,
               D=res.D, error=res.error, epsilon=epsilon_bound(ifs, cfg.K),
               final_pattern=None if res.final_pattern is None else
               {"is_pattern": res.final_pattern.is_pattern,
                "intervals": res.final_pattern.intervals,
                "witness": res.final_pattern.witness})
    write_json(out / "report.json", rep)
    if res.sceneries:
        figures.plot_tangent(res.scale_trace, res.sceneries, out / "tangent.png")
    if res.error:
        print(f"error[screens]: {res.error}", file=sys.stderr)
        return EXIT_ERROR
    return EXIT_OK


ANALYZE = {"check": cmd_check, "lyapunov": cmd_lyapunov, "tangent": cmd_tangent}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True,
                        help="config JSON path or bundled fixture name")
    common.add_argument("--seed", type=int, help="override the config seed")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--k", type=int, dest="K", help="override the config K")
    common.add_argument("--samples", type=int, help="override the config sample count")
    common.add_argument("--threads", type=int, default=1,
                        help="worker threads; outputs do not depend on it")

    p = argparse.ArgumentParser(prog="tangent-lens", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    z = sub.add_parser("zoom", parents=[common], help="render the screens of a zoom")
    z.add_argument("--square-screen", action=argparse.BooleanOptionalAction, default=True,
                   help="square screens (default) or the round ball B(0,1)")
    z.add_argument("--size", type=int, default=400, help="frame side in pixels")
    a = sub.add_parser("analyze", parents=[common], help="condition checks and estimates")
    a.add_argument("which", choices=sorted(ANALYZE))
    a.add_argument("--n", type=int, default=10_000, help="word length for lyapunov")
    a.add_argument("--trials", type=int, default=200, help="trials for lyapunov")
    return p


def _error_code(exc: BaseException) -> str:
    """Name of the innermost tangent_lens module on the traceback."""
    code = "cli"
    for fr in traceback.extract_tb(exc.__traceback__):
        path = Path(fr.filename)
        if path.parent.name == "tangent_lens":
            code = path.stem
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg, raw = load_config(args.config)
        for key in ("seed", "K", "samples"):
            val = getattr(args, key)
            if val is not None:
                setattr(cfg, key, val)
        if args.K is not None and args.K < 0 or args.samples is not None and args.samples < 1:
            raise DomainError("--k must be >= 0 and --samples >= 1")
        if args.threads < 1:
            raise DomainError("--threads must be >= 1")
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        if args.command == "zoom":
            return cmd_zoom(cfg, raw, args, out)
        return ANALYZE[args.which](cfg, raw, args, out)
    except (DomainError, OSError, ValueError, RuntimeError) as exc:
        print(f"error[{_error_code(exc)}]: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
