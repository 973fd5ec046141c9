"""Command line interface: ``lrfmp <command> ...``.

Set LRFMP_VERBOSITY to DEBUG, INFO or WARNING (default) for log output.
Failures exit with status 2 and print one JSON line ``{"error": ..., "type": ...}``
to stderr.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

from . import io
from .continuation import DEFAULT_SIGMA, ProblemSetup, synthesize_data
from .dictionary import Dictionary, manual_dictionary, starting_dictionary
from .grids import reuter_grid

log = logging.getLogger("lrfmp")


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _setup(args) -> ProblemSetup:
    return ProblemSetup(reuter_grid(args.gamma), args.sigma, io.read_data_csv(args.data))


def _write_run(out_dir, result, dictionary_meta=None) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    io.write_expansion(result.expansion, out / "expansion.txt",
                       {"reason": result.reason, **(dictionary_meta or {})})
    io.write_diagnostics_csv(result.diagnostics, out / "diagnostics.csv")


def cmd_grid(args):
    grid = reuter_grid(args.gamma)
    io.write_grid_csv(grid, args.out)
    print(f"{len(grid)} points -> {args.out}")


def cmd_dict_manual(args):
    d = manual_dictionary(args.max_degree, reuter_grid(args.gamma), _floats(args.radii))
    d.write(args.out)
    print(f"{len(d)} elements {d.counts()} -> {args.out}")


def cmd_dict_starting(args):
    d = starting_dictionary(args.max_degree, reuter_grid(args.gamma), args.radius)
    d.write(args.out)
    print(f"{len(d)} elements {d.counts()} -> {args.out}")


def cmd_synth(args):
    model = io.read_model(args.model)
    y = synthesize_data(model.terms, reuter_grid(args.gamma), args.sigma, args.noise, args.seed)
    io.write_data_csv(y, args.out)
    print(f"{len(y)} values -> {args.out}")


def _pursuit_cfg(args, **extra):
    from .pursuit import PursuitConfig

    return PursuitConfig(lambda0=args.lambda0, lambda_mode=args.lambda_mode,
                         max_iter=args.max_iter, rel_data_error_stop=args.stop_error,
                         restart_every=args.restart_every, **extra)


def cmd_run(args):
    from .pursuit import run

    d = Dictionary.read(args.dict)
    res = run(d, _setup(args), _pursuit_cfg(args, growing_dictionary=args.growing))
    _write_run(args.out_dir, res)
    print(f"{len(res.expansion)} iterations ({res.reason}), rel. data error "
          f"{res.diagnostics[-1].rel_data_error if res.diagnostics else 0.0:.6g}")


def cmd_replay(args):
    from .pursuit import PursuitConfig, run

    d = Dictionary.read(args.dict)
    meta = d.metadata
    cfg = PursuitConfig(
        lambda0=meta.get("lambda0", 1e-2) if args.lambda0 is None else args.lambda0,
        lambda_mode=meta.get("lambda_mode", "nonstationary"),
        max_iter=args.max_iter or meta.get("iterations", 3000),
        rel_data_error_stop=args.stop_error, growing_dictionary=True,
        growing_schedule=args.schedule,
    )
    res = run(d, _setup(args), cfg)
    _write_run(args.out_dir, res)
    print(f"{len(res.expansion)} iterations ({res.reason})")


def _experiment_model(cfg):
    from .experiment import random_ground_truth

    return io.read_model(cfg.model) if cfg.model else random_ground_truth(cfg.truth_seed)


def cmd_learn(args):
    from .learner import learn

    cfg = io.ExperimentConfig.read(args.config)
    model = _experiment_model(cfg)
    grid = reuter_grid(cfg.data_gamma)
    y = synthesize_data(model.terms, grid, cfg.sigma, cfg.noise_level, cfg.noise_seed)
    setup = ProblemSetup(grid, cfg.sigma, y)
    start = starting_dictionary(cfg.start_max_degree, reuter_grid(cfg.start_gamma),
                                cfg.start_radius)
    res = learn(setup, start, cfg.learn, cfg.pursuit)
    out = Path(cfg.out_dir)
    _write_run(out, res)
    res.dictionary.write(out / "learnt.dict")
    io.write_data_csv(y, out / "data.csv")
    print(f"learnt {len(res.dictionary)} elements {res.dictionary.counts()} in "
          f"{res.state.iter} iterations ({res.reason}) -> {out}")


def cmd_experiment(args):
    from .experiment import run_experiment

    cfg = io.ExperimentConfig.read(args.config)
    res = run_experiment(cfg, _experiment_model(cfg), cfg.learn_lambdas, cfg.manual_lambdas,
                         cfg.manual_modes)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    res.learnt.dictionary.write(out / "learnt.dict")
    io.write_data_csv(res.data, out / "data.csv")
    _write_run(out / "learn", res.learnt)
    _write_run(out / "replay", res.replay)
    _write_run(out / "manual", res.manual)
    with open(out / "metrics.csv", "w") as fh:
        fh.write("run,dict_size,rel_approx_error,max_abs_error,rms\n")
        sizes = {"learnt": len(res.learnt.dictionary), "manual": res.manual_size,
                 "learner": len(res.learnt.dictionary)}
        for name, (rel, mx, rms) in res.errors.items():
            fh.write(f"{name},{sizes[name]},{io.fmt(rel)},{io.fmt(mx)},{io.fmt(rms)}\n")
    with open(out / "lambda_scan.csv", "w") as fh:
        fh.write("method,lambda_mode,lambda0,iterations,rel_approx_error\n")
        for method, mode, lam, n, rel in res.table:
            fh.write(f"{method},{mode},{io.fmt(lam)},{n},{io.fmt(rel)}\n")
    print(f"learnt/manual error ratio {res.ratio:.4f} -> {out / 'metrics.csv'}")


def cmd_eval(args):
    grid = reuter_grid(args.gamma)
    terms = io.read_expansion(args.expansion)
    values = io.evaluate_field(terms, grid, args.height)
    io.write_field_csv(grid, values, args.out)
    if args.model:
        truth = io.evaluate_field(io.read_model(args.model), grid, args.height)
        rel, mx, rms = io.error_metrics(values, truth)
        line = f"{io.fmt(rel)},{io.fmt(mx)},{io.fmt(rms)}"
        if args.metrics:
            Path(args.metrics).write_text("rel_approx_error,max_abs_error,rms\n" + line + "\n")
        print(f"rel. approximation error {rel:.6g}, max {mx:.6g}, rms {rms:.6g}")
    else:
        print(f"{len(values)} values -> {args.out}")


def cmd_gradcheck(args):
    from .checks import format_table, gradient_check

    rows = gradient_check(args.seed, args.states)
    print(format_table(rows))
    if not all(r.passed for r in rows):
        raise RuntimeError("gradient check failed")


def _add_problem_args(p):
    p.add_argument("--data", required=True, help="data CSV (index,value)")
    p.add_argument("--gamma", type=int, required=True, help="data grid parameter")
    p.add_argument("--sigma", type=float, default=DEFAULT_SIGMA)
    p.add_argument("--max-iter", type=int, default=None)
    p.add_argument("--stop-error", type=float, default=1e-8)
    p.add_argument("--out-dir", default=".")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lrfmp", description=__doc__.splitlines()[0])
    ap.add_argument("--threads", type=int, default=None, help="numba worker threads")
    ap.add_argument("--seed", type=int, default=None, help="default random seed")
    # the global flags are also accepted after the subcommand
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--threads", type=int, default=argparse.SUPPRESS,
                        help="numba worker threads")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="default random seed")
    sub = ap.add_subparsers(dest="command", required=True)

    def cmd(group, name, **kw):
        return group.add_parser(name, parents=[common], **kw)

    p = cmd(sub, "grid", help="write a Reuter grid")
    p.add_argument("--gamma", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_grid)

    pd = sub.add_parser("dict", help="build dictionaries").add_subparsers(dest="kind", required=True)
    p = cmd(pd, "build-manual")
    p.add_argument("--max-degree", type=int, required=True)
    p.add_argument("--gamma", type=int, required=True)
    p.add_argument("--radii", required=True, help="comma separated, e.g. 0.75,0.85")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_dict_manual)
    p = cmd(pd, "build-starting")
    p.add_argument("--max-degree", type=int, required=True)
    p.add_argument("--gamma", type=int, required=True)
    p.add_argument("--radius", type=float, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_dict_starting)

    p = cmd(sub, "synth", help="synthesize satellite data from a model")
    p.add_argument("--model", required=True)
    p.add_argument("--gamma", type=int, required=True)
    p.add_argument("--sigma", type=float, default=DEFAULT_SIGMA)
    p.add_argument("--noise", type=float, default=0.0, help="relative to the data RMS")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = cmd(sub, "run", help="RFMP with a stored dictionary")
    p.add_argument("--dict", required=True)
    _add_problem_args(p)
    p.add_argument("--lambda0", type=float, default=1e-2)
    p.add_argument("--lambda-mode", choices=["fixed", "nonstationary"], default="fixed")
    p.add_argument("--restart-every", type=int, default=0)
    p.add_argument("--growing", action="store_true")
    p.set_defaults(func=cmd_run, max_iter=3000)

    p = cmd(sub, "replay", help="RFMP on a learnt dictionary in growing mode")
    p.add_argument("--dict", required=True)
    _add_problem_args(p)
    p.add_argument("--lambda0", type=float, default=None, help="default: from the dictionary")
    p.add_argument("--schedule", choices=["selection", "index"], default="selection")
    p.set_defaults(func=cmd_replay)

    p = cmd(sub, "learn", help="LRFMP from a JSON experiment config")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_learn)

    p = cmd(sub, "experiment", help="learn, replay and manual RFMP with metrics")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_experiment)

    p = cmd(sub, "eval", help="evaluate an expansion on a grid")
    p.add_argument("--expansion", required=True)
    p.add_argument("--gamma", type=int, required=True)
    p.add_argument("--height", type=float, default=None, help="sigma; omit for the surface")
    p.add_argument("--model", help="ground truth for error metrics")
    p.add_argument("--metrics", help="metrics CSV output")
    p.add_argument("--out", required=True, help="field CSV (lon_deg,lat_deg,value)")
    p.set_defaults(func=cmd_eval)

    p = cmd(sub, "gradcheck", help="finite-difference check of all gradients")
    p.add_argument("--states", type=int, default=100)
    p.set_defaults(func=cmd_gradcheck)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = os.environ.get("LRFMP_VERBOSITY", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    if args.seed is None:
        args.seed = 0
    if args.threads:
        import numba

        numba.set_num_threads(min(args.threads, numba.config.NUMBA_NUM_THREADS))
    try:
        args.func(args)
    except Exception as exc:  # report every failure as one parseable line
        log.debug("command failed", exc_info=True)
        print(json.dumps({"error": str(exc), "type": type(exc).__name__}), file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
