"""Batch experiment runner: instance generation, tournaments, sweeps, reports.

Experiments are described by a YAML config (schema documented in the
README).  Everything is derived deterministically from one master seed via
stable stream splitting, per-(profile, instance) results are persisted as
individual cell files so interrupted runs resume without recomputation, and
the assembled archive is byte-identical across reruns.
"""

from __future__ import annotations

import json
import platform
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import yaml

from . import __version__
from ._bits import SplitMix64
from .auction import AuctionConfig, BidderProfile, RoundRecord, play_out
from .analytics import EmpiricalGame, MetricsReport, build_empirical_game, compute_metrics
from .prediction import PredictorParams, iterate_prediction
from .strategies import StrategyContext, create_strategy
from .valuations import (
    GeneratorParams,
    generate_instance,
    instance_from_dict,
    instance_to_dict,
    load_instance,
)


class ConfigError(ValueError):
    """Invalid or unresolvable experiment configuration."""


@dataclass
class ExperimentConfig:
    n_bidders: int
    m_items: int
    epsilon: float
    instance_count: int
    generator: GeneratorParams | None
    instance_file: str | None
    strategies: dict[str, dict]
    profiles: list[list[str]]
    prediction: PredictorParams
    seed: int
    output: str
    sweep: dict | None = None
    raw: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        try:
            auction = doc["auction"]
            inst = doc["instances"]
            strategies = doc["strategies"]
        except KeyError as e:
            raise ConfigError(f"missing config section: {e}") from None
        gen = None
        instance_file = inst.get("file")
        if instance_file is None:
            try:
                gen = GeneratorParams(
                    v_cap=float(inst["v_cap"]),
                    b_min=float(inst["budget_min"]),
                    b_max=float(inst["budget_max"]),
                )
            except KeyError as e:
                raise ConfigError(f"instances need v_cap/budget_min/budget_max or file: {e}")
        profiles = doc.get("profiles")
        if profiles is None:
            sym = doc.get("symmetric_game")
            if sym is None:
                raise ConfigError("config needs 'profiles' or 'symmetric_game'")
            a, b = sym
            n = int(auction["n_bidders"])
            profiles = [[a] * k + [b] * (n - k) for k in range(n + 1)]
        for prof in profiles:
            if len(prof) != int(auction["n_bidders"]):
                raise ConfigError(f"profile {prof} does not match the bidder count")
            for name in prof:
                if name not in strategies:
                    raise ConfigError(f"profile references undefined strategy {name!r}")
        pred = doc.get("prediction", {})
        return cls(
            n_bidders=int(auction["n_bidders"]),
            m_items=int(auction["m_items"]),
            epsilon=float(auction["epsilon"]),
            instance_count=int(inst.get("count", 0)) if instance_file is None else 0,
            generator=gen,
            instance_file=instance_file,
            strategies={k: dict(v or {}) for k, v in strategies.items()},
            profiles=[list(p) for p in profiles],
            prediction=PredictorParams(
                mc_samples=int(pred.get("samples", 500)),
                max_iters=int(pred.get("max_iters", 100)),
                tolerance=pred.get("tolerance"),
                rng_seed=0,
            ),
            seed=int(doc.get("seed", 0)),
            output=str(doc.get("output", "out")),
            sweep=doc.get("sweep"),
            raw=doc,
        )

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        return cls.from_dict(yaml.safe_load(Path(path).read_text()))


def _instance_seed(master: int, index: int, purpose: int) -> int:
    """Stable per-instance stream: independent of the total instance count."""
    a = SplitMix64(master).next_u64()
    b = SplitMix64(a ^ (index + 1)).next_u64()
    return SplitMix64(b ^ ((purpose + 1) << 32)).next_u64()




def generate_instances(config: ExperimentConfig, out_dir: Path) -> list[Path]:
    """Write `instance_count` instance files derived from the master seed."""
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for idx in range(config.instance_count):
        acfg = AuctionConfig(
            n_bidders=config.n_bidders,
            m_items=config.m_items,
            epsilon=config.epsilon,
            rng_seed=_instance_seed(config.seed, idx, 0),
        )
        rng = np.random.default_rng(acfg.rng_seed)
        profiles = generate_instance(acfg, config.generator, rng)
        path = out_dir / f"instance_{idx:05d}.json"
        path.write_text(json.dumps(instance_to_dict(acfg, profiles), sort_keys=True))
        paths.append(path)
    return paths


def _load_instances(config: ExperimentConfig, work: Path) -> list[tuple[AuctionConfig, list[BidderProfile]]]:
    if config.instance_file is not None:
        return [load_instance(config.instance_file)]
    inst_dir = work / "instances"
    expected = [inst_dir / f"instance_{i:05d}.json" for i in range(config.instance_count)]
    if not all(p.exists() for p in expected):
        generate_instances(config, inst_dir)
    return [instance_from_dict(json.loads(p.read_text())) for p in expected]


def _needs_fixed_point(config: ExperimentConfig) -> bool:
    for params in config.strategies.values():
        name = params.get("name", "")
        pred = params.get("prediction", "fixed-point")
        if name == "SMS" or (name == "PP" and pred == "fixed-point"):
            return True
    return False


def _predict_instance(args):
    config, idx, acfg, profiles = args
    params = PredictorParams(
        mc_samples=config.prediction.mc_samples,
        max_iters=config.prediction.max_iters,
        tolerance=config.prediction.tolerance,
        rng_seed=_instance_seed(config.seed, idx, 1),
    )
    p_star, trace = iterate_prediction(acfg, profiles, params)
    return idx, p_star, trace


def precompute_predictions(config: ExperimentConfig, instances, work: Path) -> list[np.ndarray]:
    """Per-instance fixed-point predictions, computed offline and cached."""
    pred_dir = work / "predictions"
    pred_dir.mkdir(parents=True, exist_ok=True)
    out: list[np.ndarray | None] = [None] * len(instances)
    todo = []
    for idx, (acfg, profiles) in enumerate(instances):
        path = pred_dir / f"p_star_{idx:05d}.json"
        if path.exists():
            out[idx] = np.asarray(json.loads(path.read_text())["p_star"], dtype=np.float64)
        else:
            todo.append((config, idx, acfg, profiles))
    for args in todo:
        idx, p_star, trace = _predict_instance(args)
        path = pred_dir / f"p_star_{idx:05d}.json"
        path.write_text(
            json.dumps({"p_star": p_star.tolist(), "converged": trace.converged})
        )
        out[idx] = p_star
    return out  # type: ignore[return-value]


def _strategy_spec(config: ExperimentConfig, label: str) -> tuple[str, dict]:
    params = dict(config.strategies[label])
    try:
        name = params.pop("name")
    except KeyError:
        raise ConfigError(f"strategy {label!r} needs a 'name' entry") from None
    return name, params


def run_profile_cell(
    config: ExperimentConfig,
    instance_idx: int,
    acfg: AuctionConfig,
    profiles: Sequence[BidderProfile],
    p_star: np.ndarray | None,
    labels: Sequence[str],
) -> dict:
    """Play one (instance, strategy profile) cell and return its record."""
    ctx = StrategyContext(
        acfg, profiles,
        p_star=p_star,
        epe_kappa=None,
    )
    strategies = []
    for label in labels:
        name, params = _strategy_spec(config, label)
        strategies.append(create_strategy(name, ctx, params))
    trace: list[RoundRecord] = []
    # Shared across profiles on purpose: paired comparison per instance.
    seed = _instance_seed(config.seed, instance_idx, 2)
    outcome = play_out(acfg, profiles, strategies, rng=seed, trace=trace)
    eps = acfg.epsilon
    per_bidder = []
    for i in range(acfg.n_bidders):
        items = [j for j, w in enumerate(outcome.final_allocation) if w == i]
        per_bidder.append(
            {
                "strategy": labels[i],
                "utility": outcome.utilities[i],
                "items_won": len(items),
                "spend": sum(outcome.closing_ticks[j] * eps for j in items),
            }
        )
    return {
        "instance": instance_idx,
        "profile": list(labels),
        "rounds": outcome.rounds_played,
        "closing_ticks": list(outcome.closing_ticks),
        "allocation": list(outcome.final_allocation),
        "bidders": per_bidder,
        "trace": [r.to_dict() for r in trace],
    }


def _run_cell_job(args) -> tuple[str, str]:
    config, pi, idx, acfg, profiles, p_star = args
    record = run_profile_cell(config, idx, acfg, profiles, p_star, config.profiles[pi])
    return f"cell_p{pi:02d}_i{idx:05d}.json", json.dumps(record, sort_keys=True)


def run_tournament(
    config: ExperimentConfig, out_dir: str | Path | None = None, workers: int = 1
) -> Path:
    """Run every configured profile on every instance; archive per-play records.

    Re-running with an existing archive skips completed cells (resume) and
    produces a byte-identical plays file regardless of the worker count
    (cells are independent; results are assembled in sorted order).
    """
    work = Path(out_dir if out_dir is not None else config.output)
    work.mkdir(parents=True, exist_ok=True)
    instances = _load_instances(config, work)
    p_stars: list[np.ndarray | None]
    if _needs_fixed_point(config):
        p_stars = precompute_predictions(config, instances, work)
    else:
        p_stars = [None] * len(instances)

    cells_dir = work / "cells"
    cells_dir.mkdir(exist_ok=True)
    cell_jobs = []
    for pi, labels in enumerate(config.profiles):
        for idx in range(len(instances)):
            cell_jobs.append((pi, idx))
    todo = [
        (pi, idx) for pi, idx in cell_jobs
        if not (cells_dir / f"cell_p{pi:02d}_i{idx:05d}.json").exists()
    ]
    job_args = [
        (config, pi, idx, instances[idx][0], instances[idx][1], p_stars[idx])
        for pi, idx in todo
    ]
    if workers > 1 and len(job_args) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as pool:
            for name, payload in pool.map(_run_cell_job, job_args):
                (cells_dir / name).write_text(payload)
    else:
        for args in job_args:
            name, payload = _run_cell_job(args)
            (cells_dir / name).write_text(payload)

    plays_path = work / "plays.jsonl"
    with plays_path.open("w") as fh:
        for pi, idx in sorted(cell_jobs):
            cell_path = cells_dir / f"cell_p{pi:02d}_i{idx:05d}.json"
            fh.write(cell_path.read_text().strip() + "\n")

    manifest = {
        "config": config.raw,
        "seed": config.seed,
        "instances": len(instances),
        "profiles": config.profiles,
        "versions": {
            "saabid": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
        },
    }
    (work / "manifest.json").write_text(json.dumps(manifest, sort_keys=True, default=str))
    return work


def run_sweep(
    config: ExperimentConfig, out_dir: str | Path | None = None, workers: int = 1
) -> Path:
    """One tournament per grid value, sharing instances and seeds (paired)."""
    if not config.sweep:
        raise ConfigError("sweep config needs a 'sweep' section")
    target = config.sweep.get("strategy")
    parameter = config.sweep.get("parameter")
    values = config.sweep.get("values")
    if not parameter or values is None or not values:
        raise ConfigError("sweep needs 'parameter' and a non-empty 'values' list")
    work = Path(out_dir if out_dir is not None else config.output)
    work.mkdir(parents=True, exist_ok=True)
    points = []
    for value in values:
        sub_raw = json.loads(json.dumps(config.raw))
        strategies = sub_raw["strategies"]
        applied = False
        for label, params in strategies.items():
            if target is None or label == target:
                params[parameter] = value
                applied = True
        if not applied:
            raise ConfigError(f"sweep target {target!r} not found among strategies")
        sub = ExperimentConfig.from_dict(sub_raw)
        point_dir = work / f"{parameter}_{value}"
        # Shared instances/predictions: symlink-free, regenerate deterministically.
        run_tournament(sub, point_dir, workers=workers)
        points.append({"value": value, "dir": point_dir.name})
    (work / "sweep.json").write_text(
        json.dumps({"parameter": parameter, "points": points}, sort_keys=True)
    )
    return work


def load_plays(archive: str | Path) -> list[dict]:
    plays_path = Path(archive) / "plays.jsonl"
    if not plays_path.exists():
        raise ConfigError(f"no plays.jsonl under {archive}")
    return [json.loads(line) for line in plays_path.read_text().splitlines() if line]


def strategy_metrics(plays: Sequence[dict], m: int) -> dict[str, MetricsReport]:
    """Aggregate per-play samples per strategy label across all profiles."""
    groups: dict[str, tuple[list, list, list]] = {}
    for play in plays:
        for bidder in play["bidders"]:
            g = groups.setdefault(bidder["strategy"], ([], [], []))
            g[0].append(bidder["utility"])
            g[1].append(bidder["items_won"])
            g[2].append(bidder["spend"])
    return {
        label: compute_metrics(r, i, s, m) for label, (r, i, s) in sorted(groups.items())
    }


def empirical_game_from_plays(
    plays: Sequence[dict], strategy_a: str, strategy_b: str, n_players: int
) -> EmpiricalGame:
    """Assemble the symmetric two-strategy game from archived plays."""
    by_profile: dict[tuple[str, ...], list[list[float]]] = {}
    for play in plays:
        key = tuple(play["profile"])
        by_profile.setdefault(key, []).append([b["utility"] for b in play["bidders"]])

    def play_profile(profile: tuple[str, ...]):
        if profile not in by_profile:
            raise ConfigError(f"archive has no plays for profile {list(profile)}")
        return by_profile[profile]

    return build_empirical_game(strategy_a, strategy_b, n_players, play_profile)


def write_report(archive: str | Path, m: int, game: tuple[str, str] | None = None) -> Path:
    """Aggregate an archive into metric tables (and optionally a game matrix)."""
    archive = Path(archive)
    plays = load_plays(archive)
    metrics = {k: v.to_dict() for k, v in strategy_metrics(plays, m).items()}
    report: dict = {"metrics": metrics, "plays": len(plays)}
    if game is not None:
        n_players = len(plays[0]["profile"])
        eg = empirical_game_from_plays(plays, game[0], game[1], n_players)
        report["empirical_game"] = eg.to_dict()
        report["deviation_gains"] = [eg.deviation_gain(k) for k in range(n_players)]
    out = archive / "report.json"
    out.write_text(json.dumps(report, sort_keys=True, indent=2))
    lines = ["strategy  expected_utility  exposure_freq  expected_exposure  avg_price/item  ratio_items"]
    for label, row in metrics.items():
        app = "-" if row["avg_price_per_item_won"] is None else f"{row['avg_price_per_item_won']:.3f}"
        lines.append(
            f"{label:8s}  {row['expected_utility']:+16.3f}  {row['exposure_frequency']:13.3f}  "
            f"{row['expected_exposure']:17.3f}  {app:>14s}  {row['ratio_items_won']:11.3f}"
        )
    if game is not None:
        eg = report["empirical_game"]
        a, b = eg["strategy_a"], eg["strategy_b"]
        lines += ["", f"empirical game: {a} vs {b} (rows: count of {a} players)"]
        lines.append(f"{'#'+a:>6s}  {('u_'+a):>10s}  {('u_'+b):>10s}")
        for k, (ua, ub) in enumerate(eg["utilities"]):
            fa = "-" if ua is None else f"{ua:+.3f}"
            fb = "-" if ub is None else f"{ub:+.3f}"
            lines.append(f"{k:6d}  {fa:>10s}  {fb:>10s}")
    (archive / "report.txt").write_text("\n".join(lines) + "\n")
    return out
