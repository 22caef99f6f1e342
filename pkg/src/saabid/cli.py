"""Command-line interface: generate, predict, tournament, sweep, report, serve."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .runner import ExperimentConfig, generate_instances, run_sweep, run_tournament, write_report


def _load_config(args) -> ExperimentConfig:
    config = ExperimentConfig.load(args.config)
    if args.seed is not None:
        raw = dict(config.raw)
        raw["seed"] = args.seed
        config = ExperimentConfig.from_dict(raw)
    return config


def _add_common(sub):
    sub.add_argument("--config", required=True, help="experiment config (YAML)")
    sub.add_argument("--seed", type=int, default=None, help="override the master seed")
    sub.add_argument("--out", default=None, help="output directory (default from config)")
    sub.add_argument("--workers", type=int, default=1, help="parallel cell workers")


def cmd_generate(args) -> int:
    config = _load_config(args)
    out = Path(args.out or config.output) / "instances"
    paths = generate_instances(config, out)
    print(f"wrote {len(paths)} instances under {out}")
    return 0


def cmd_predict(args) -> int:
    from .prediction import PredictorParams, iterate_prediction
    from .runner import _instance_seed, _load_instances

    config = _load_config(args)
    work = Path(args.out or config.output)
    work.mkdir(parents=True, exist_ok=True)
    instances = _load_instances(config, work)
    traces_dir = work / "prediction_traces"
    traces_dir.mkdir(exist_ok=True)
    for idx, (acfg, profiles) in enumerate(instances):
        params = PredictorParams(
            mc_samples=config.prediction.mc_samples,
            max_iters=config.prediction.max_iters,
            tolerance=config.prediction.tolerance,
            rng_seed=_instance_seed(config.seed, idx, 1),
        )
        p_star, trace = iterate_prediction(acfg, profiles, params)
        trace.save(traces_dir / f"trace_{idx:05d}.json")
        print(f"instance {idx}: p* = {[round(float(x), 4) for x in p_star]} "
              f"({trace.iterations} iterations, converged={trace.converged})")
    return 0


def cmd_tournament(args) -> int:
    config = _load_config(args)
    work = run_tournament(config, args.out, workers=args.workers)
    print(f"archive written to {work}")
    return 0


def cmd_sweep(args) -> int:
    config = _load_config(args)
    work = run_sweep(config, args.out, workers=args.workers)
    print(f"sweep written to {work}")
    return 0


def cmd_report(args) -> int:
    game = tuple(args.game.split(",")) if args.game else None
    if game is not None and len(game) != 2:
        print("--game needs two comma-separated strategy labels", file=sys.stderr)
        return 2
    out = write_report(args.archive, m=args.items, game=game)
    print(Path(args.archive, "report.txt").read_text(), end="")
    print(f"report written to {out}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .advisor.service import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port)
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="saabid",
        description="Simultaneous ascending auction experiments and advisor service",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="generate auction instances")
    _add_common(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("predict", help="compute closing-price predictions with traces")
    _add_common(p)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("tournament", help="run the configured strategy profiles")
    _add_common(p)
    p.set_defaults(func=cmd_tournament)

    p = sub.add_parser("sweep", help="run a hyperparameter sweep of tournaments")
    _add_common(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("report", help="aggregate an archive into metric tables")
    p.add_argument("--archive", required=True)
    p.add_argument("--items", type=int, required=True, help="items per auction (m)")
    p.add_argument("--game", default=None, help="A,B labels for an empirical game")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("serve", help="run the live advisor service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
