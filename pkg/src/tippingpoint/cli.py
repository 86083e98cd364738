"""Command-line front end: ``tippingpoint <command> [options]``.

Commands
--------
simulate   write one simulated trial as a dataset CSV
summarize  scenario summaries (mean observed HR, significance, dropout) as CSV
fit        Cox hazard ratio and per-arm parametric fits of a dataset
km         Kaplan-Meier (or reverse Kaplan-Meier) curves by arm
plan       recommend analyses from the dropout imbalance
tip        tipping-point sweep with anchors
anchors    plausibility anchors only

Errors are reported on stderr as one line, ``error: <Type>: <message>``,
with exit status 1.
"""

from __future__ import annotations

import argparse
import os
import sys

from . import io
from .analysis import (anchor_hr, find_tipping_point, j2r_delta_from_data,
                       kappa_event_rate_anchor, run_sweep)
from .config import ConfigError, GridSection, RunConfig, default_grid
from .imputation import select_imputable
from .planning import plan, plan_dataset
from .simulation import simulate_trial, summarize_scenario
from .survival import EstimationError, cox_fit, fit_exponential, fit_weibull, km_fit, reverse_km

ARM_NAMES = {0: "control", 1: "experimental"}


def _kv(out, **items):
    for k, v in items.items():
        if isinstance(v, float):
            v = repr(v)
        print(f"{k}={v}", file=out)


def _load_config(args):
    cfg = RunConfig.load(args.config) if getattr(args, "config", None) else RunConfig()
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    if getattr(args, "workers", None) is not None:
        cfg.workers = args.workers
    if getattr(args, "cutoff", None) is not None:
        cfg.cutoff = args.cutoff
    for name in ("method", "m", "direction"):
        value = getattr(args, name, None)
        if value is not None:
            setattr(cfg.imputation, name, value)
    if getattr(args, "arm", None) is not None:
        cfg.selection.target_arm = args.arm
    if getattr(args, "window", None) is not None:
        cfg.selection.early_window = args.window
    if getattr(args, "criterion", None) is not None:
        cfg.criterion = args.criterion
    if getattr(args, "grid", None) is not None:
        cfg.grid = [float(v) for v in args.grid.split(",") if v.strip()]
    for name in ("scenario", "n_trials", "trial"):
        value = getattr(args, name, None)
        if value is not None:
            setattr(cfg.simulation, name, value)
    cfg.validate()
    return cfg


def _dataset(args, cfg):
    path = getattr(args, "dataset", None) or cfg.dataset
    if not path:
        raise ConfigError("no dataset given")
    return io.read_dataset(path, cutoff=cfg.cutoff)


def cmd_simulate(args, out):
    cfg = _load_config(args)
    sim = cfg.simulation_config()
    data = simulate_trial(sim, cfg.simulation.trial)
    path = args.output or cfg.output.dataset_csv
    if path:
        io.write_dataset(data, path)
    _kv(out, n=len(data), events=int(data.event.sum()),
        dropout_control=data.dropout_rate(0), dropout_experimental=data.dropout_rate(1))


def cmd_summarize(args, out):
    cfg = _load_config(args)
    scenarios = args.scenarios or ([cfg.simulation.scenario] if cfg.simulation.scenario else [])
    if not scenarios:
        raise ConfigError("no scenario given (use --scenario or simulation.scenario)")
    rows = []
    for number in scenarios:
        cfg.simulation.scenario = number
        sim = cfg.simulation_config()
        rows.append((str(number), sim, summarize_scenario(sim, workers=cfg.workers)))
    path = args.output or cfg.output.table_csv
    io.write_summary_csv(rows, path if path else out)


def cmd_fit(args, out):
    cfg = _load_config(args)
    data = _dataset(args, cfg)
    est = cox_fit(data)
    _kv(out, hr=est.hr, ci_low=est.ci_low, ci_high=est.ci_high, log_hr=est.log_hr, se=est.se)
    for arm, name in ARM_NAMES.items():
        mask = data.arm == arm
        exp_fit = fit_exponential(data.time[mask], data.event[mask])
        _kv(out, **{f"{name}_exponential_rate": exp_fit.rate})
        try:
            w = fit_weibull(data.time[mask], data.event[mask])
        except EstimationError as exc:
            _kv(out, **{f"{name}_weibull": f"unavailable ({exc})"})
        else:
            _kv(out, **{f"{name}_weibull_shape": w.shape, f"{name}_weibull_rate": w.rate})


def cmd_km(args, out):
    cfg = _load_config(args)
    data = _dataset(args, cfg)
    estimator = reverse_km if args.reverse else km_fit
    curves = {ARM_NAMES[a]: estimator(data.time[data.arm == a], data.event[data.arm == a])
              for a in (0, 1)}
    path = args.output or cfg.output.km_csv
    if path:
        io.write_km_csv(curves, path)
    else:
        print("source,time,survival", file=out)
        for tag, c in curves.items():
            for t, s in zip(*io.curve_points(c)):
                print(f"{tag},{float(t)!r},{float(s)!r}", file=out)
    if args.svg or cfg.output.km_svg:
        io.write_km_svg(curves["control"], {}, args.svg or cfg.output.km_svg,
                        reference=curves["experimental"], t_max=data.cutoff,
                        title="Censoring-time KM" if args.reverse else "Kaplan-Meier by arm")


def cmd_plan(args, out):
    cfg = _load_config(args)
    if args.rates:
        rec = plan(args.rates[0], args.rates[1], cfg.tolerance)
    else:
        rec = plan_dataset(_dataset(args, cfg), cfg.tolerance)
    for line in rec.lines():
        print(line, file=out)


def _anchor_lines(data, cfg, out, delta=None):
    selection = cfg.selection_criteria()
    n_sel = int(select_imputable(data, selection).size)
    _kv(out, selected=n_sel)
    ref = cox_fit(data)
    try:
        _kv(out, j2r_delta=j2r_delta_from_data(data, selection))
    except EstimationError as exc:
        _kv(out, j2r_delta=f"unavailable ({exc})")
    if n_sel:
        _kv(out, kappa_event_rate=kappa_event_rate_anchor(data, selection))
    if delta is not None:
        _kv(out, anchor_hr=anchor_hr(delta, ref.hr))


def cmd_anchors(args, out):
    cfg = _load_config(args)
    data = _dataset(args, cfg)
    _anchor_lines(data, cfg, out, args.delta)


def cmd_tip(args, out):
    cfg = _load_config(args)
    data = _dataset(args, cfg)
    spec = cfg.imputation_spec()
    if cfg.grid is None:
        grid = default_grid(spec.method, spec.selection.target_arm)
    elif isinstance(cfg.grid, GridSection):
        grid = cfg.grid_values()
    else:
        grid = cfg.grid
    want_km = bool(cfg.output.km_csv or cfg.output.km_svg or args.km_svg)
    sweep = run_sweep(data, spec, grid, criterion=cfg.criterion_enum(), keep_km=want_km,
                      workers=cfg.workers)
    print(",".join(io.SWEEP_COLUMNS), file=out)
    for g, p in zip(sweep.grid, sweep.points):
        tipped = int(p.criterion_value(sweep.criterion) >= 1)
        print(f"{g!r},{p.pooled_hr!r},{p.ci_low!r},{p.ci_high!r},{tipped}", file=out)
    tip = find_tipping_point(sweep)
    if tip is None:
        _kv(out, tipping="none")
    else:
        lower = "none" if tip.previous is None else repr(tip.previous)
        _kv(out, tipping=tip.value, bracket=f"{lower},{tip.value!r}")
    delta = tip.value if (tip is not None and spec.method.model_based) else None
    _anchor_lines(data, cfg, out, delta)
    if cfg.output.sweep_csv:
        io.write_sweep_csv(sweep, cfg.output.sweep_csv)
    if want_km:
        arm = int(spec.selection.target_arm)
        original = km_fit(data.time[data.arm == arm], data.event[data.arm == arm])
        other = km_fit(data.time[data.arm != arm], data.event[data.arm != arm])
        pooled = {f"{g:g}": c for g, c in sweep.km.items()}
        if cfg.output.km_csv:
            curves = {"original": original, "reference": other}
            curves.update({f"imputed {k}": v for k, v in pooled.items()})
            io.write_km_csv(curves, cfg.output.km_csv)
        svg = args.km_svg or cfg.output.km_svg
        if svg:
            tipping_curve = sweep.km[tip.value] if tip is not None else None
            io.write_km_svg(original, pooled, svg, tipping=tipping_curve, reference=other,
                            t_max=data.cutoff, title=f"{spec.method.value} sweep")


def build_parser():
    parser = argparse.ArgumentParser(prog="tippingpoint",
                                     description="Tipping-point analysis for time-to-event trials.")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    def common(p, dataset=True):
        p.add_argument("--config", help="JSON run configuration")
        p.add_argument("--seed", type=int)
        p.add_argument("--workers", type=int)
        if dataset:
            p.add_argument("dataset", nargs="?", help="dataset CSV")
            p.add_argument("--cutoff", type=float, help="data cut-off (months)")

    def selection(p):
        p.add_argument("--arm", choices=["control", "experimental"])
        p.add_argument("--window", type=float, help="early-censoring window (months)")

    p = sub.add_parser("simulate", help="write one simulated trial")
    common(p, dataset=False)
    p.add_argument("--scenario", type=int, help="design cell 1-20")
    p.add_argument("--trial", type=int)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("summarize", help="scenario summary table")
    common(p, dataset=False)
    p.add_argument("--scenario", type=int, action="append", dest="scenarios")
    p.add_argument("--n-trials", type=int, dest="n_trials")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_summarize)

    p = sub.add_parser("fit", help="Cox HR and parametric fits")
    common(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("km", help="Kaplan-Meier curves by arm")
    common(p)
    p.add_argument("--reverse", action="store_true", help="estimate the censoring distribution")
    p.add_argument("-o", "--output")
    p.add_argument("--svg")
    p.set_defaults(func=cmd_km)

    p = sub.add_parser("plan", help="recommend analyses")
    common(p)
    p.add_argument("--rates", type=float, nargs=2, metavar=("CONTROL", "EXPERIMENTAL"),
                   help="declared dropout proportions instead of a dataset")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("tip", help="tipping-point sweep")
    common(p)
    selection(p)
    p.add_argument("--method", choices=["model-exponential", "model-weibull", "deterministic",
                                        "donor"])
    p.add_argument("--m", type=int, help="imputations per grid value")
    p.add_argument("--direction", choices=["worst", "best"])
    p.add_argument("--grid", help="comma-separated sensitivity values")
    p.add_argument("--criterion", choices=["upper-ci", "point"])
    p.add_argument("--km-svg", dest="km_svg")
    p.set_defaults(func=cmd_tip)

    p = sub.add_parser("anchors", help="plausibility anchors")
    common(p)
    selection(p)
    p.add_argument("--delta", type=float, help="delta to express against the other arm")
    p.set_defaults(func=cmd_anchors)
    return parser


def main(argv=None, out=None):
    out = out or sys.stdout
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args, out)
    except BrokenPipeError:
        # Downstream reader (e.g. ``head``) closed early; stay quiet.
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        return 0
    except (ValueError, OSError) as exc:
        msg = " ".join(str(exc).split())
        print(f"error: {type(exc).__name__}: {msg}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
