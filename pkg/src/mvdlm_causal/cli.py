"""Command line: ``simulate``, ``fit``, ``evaluate`` and ``report``.

On failure the process exits non-zero after printing one line of the form
``error <category>: <message>`` to stderr.
"""
import argparse
import dataclasses
import json
import os
import sys
from datetime import date, timedelta

import yaml

from . import io
from .errors import ConfigError, MVDLMError
from .pipeline import evaluate_study, fit_study
from .sim import SimConfig, simulate_panel

SIM_START = date(2020, 1, 5)


def _run_config(args):
    cfg = io.load_config(args.config) if args.config else io.config_from_dict({})
    if args.data:
        cfg.data = args.data
    if args.seed is not None:
        cfg.sampling.seed = args.seed
    if args.draws is not None:
        cfg.sampling.draws = args.draws
    if args.threads is not None:
        cfg.sampling.threads = args.threads
    if args.out is not None:
        cfg.output = args.out
    io.validate_config(cfg)
    if not cfg.data:
        raise ConfigError("no data path: set `data:` in the config or pass --data")
    return cfg


def _fit(cfg):
    Y, controls, design = io.load_panel(cfg.data, cfg)
    fit = fit_study(Y, controls, design, cfg.model_set_config(), centering=cfg.model.centering,
                    standardize=cfg.model.standardize, threads=cfg.sampling.threads)
    return Y, fit


def _evaluate(cfg, Y, fit):
    return evaluate_study(fit, Y, S=cfg.sampling.draws, seed=cfg.sampling.seed,
                          threads=cfg.sampling.threads, window=cfg.lift.window,
                          form=cfg.lift.form)


def cmd_fit(args):
    cfg = _run_config(args)
    _, fit = _fit(cfg)
    bundle = io.bundle_from(fit=fit, config=cfg, command="fit")
    io.emit_report(bundle, cfg.output)
    final = dict(zip(fit.labels, fit.weights.final.round(4).tolist()))
    print(f"fit q={len(fit.design.treated_ids)} c={len(fit.design.control_ids)} "
          f"T={fit.design.T} final weights {final} -> {cfg.output}")


def cmd_evaluate(args):
    cfg = _run_config(args)
    Y, fit = _fit(cfg)
    ev = _evaluate(cfg, Y, fit)
    bundle = io.bundle_from(evaluation=ev, config=cfg, command="evaluate")
    bundle.design = fit.design
    io.emit_report(bundle, cfg.output)
    agg = ev.lift["bma"]
    print(f"bma aggregate lift: multivariate {agg.multivariate.quantiles.round(3).tolist()}, "
          f"independent {agg.independent.quantiles.round(3).tolist()} -> {cfg.output}")


def cmd_report(args):
    cfg = _run_config(args)
    Y, fit = _fit(cfg)
    ev = _evaluate(cfg, Y, fit)
    io.emit_report(io.bundle_from(fit=fit, evaluation=ev, config=cfg, command="report"),
                   cfg.output)
    print(f"report written to {cfg.output}")


def cmd_simulate(args):
    raw = {}
    if args.config:
        with open(args.config) as fh:
            raw = (yaml.safe_load(fh) or {}).get("simulation", {})
    if args.seed is not None:
        raw["seed"] = args.seed
    known = {f.name for f in dataclasses.fields(SimConfig)}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown simulation key(s): {', '.join(sorted(unknown))}")
    sim = SimConfig(**raw)
    Y, controls, truth = simulate_panel(sim)
    out = args.out or "sim"
    os.makedirs(out, exist_ok=True)
    dates = [(SIM_START + timedelta(weeks=i)).isoformat() for i in range(sim.T + sim.k)]
    io.write_panel(os.path.join(out, "panel.csv"), dates, truth.treated_ids, Y,
                   truth.control_ids, controls.values)
    truth_doc = {
        "config": dataclasses.asdict(sim),
        "true_lift_percent": dict(zip(truth.treated_ids,
                                      [float(io.fmt(x)) for x in truth.true_lift()])),
        "residual_correlation": sim.rho,
    }
    with open(os.path.join(out, "truth.json"), "w") as fh:
        json.dump(truth_doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    run_cfg = {
        "data": "panel.csv",
        "windows": {"intervention": dates[sim.T], "evaluation": dates[sim.T + sim.m]},
    }
    usable = [p for p in io.ModelOptions().candidates if p <= min(sim.c, sim.T - 1)]
    if usable != io.ModelOptions().candidates:
        run_cfg["model"] = {"candidates": usable or [1]}
    with open(os.path.join(out, "config.yaml"), "w") as fh:
        yaml.safe_dump(run_cfg, fh, sort_keys=False)
    print(f"simulated q={sim.q} c={sim.c} T={sim.T} m={sim.m} k={sim.k} -> {out}")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="mvdlm-causal",
        description="Multivariate DLM causal forecasting with synthetic controls.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="YAML run configuration")
        p.add_argument("--seed", type=int, help="base random seed")
        p.add_argument("--draws", type=int, help="Monte Carlo draws per model")
        p.add_argument("--out", help="output directory")
        p.add_argument("--threads", type=int, help="worker threads (never changes results)")
        p.add_argument("--data", help="panel CSV (overrides the config)")
        return p

    p = sub.add_parser("simulate", help="write a synthetic panel, its truth and a run config")
    p.add_argument("--config", help="YAML with a `simulation:` mapping of generator settings")
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate)

    for name, func, helptext in (
        ("fit", cmd_fit, "fit the model set; emit log-likelihood and BMA weight tables"),
        ("evaluate", cmd_evaluate, "freeze, sample counterfactuals; emit lift and correlations"),
        ("report", cmd_report, "fit and evaluate; emit every table"),
    ):
        common(sub.add_parser(name, help=helptext)).set_defaults(func=func)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except MVDLMError as exc:
        print(f"error {exc.category}: {' '.join(str(exc).split())}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error io: {' '.join(str(exc).split())}", file=sys.stderr)
        return 3
    except yaml.YAMLError as exc:
        print(f"error config: {' '.join(str(exc).split())}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
