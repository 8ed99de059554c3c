"""Run orchestration: training with checkpoints and resume, evaluation, physics curves, sweeps.

All CSV output is written with ``repr`` floats and contains no timestamps, so
reruns of the same manifest are byte-identical.
"""

from __future__ import annotations

import csv
import logging
import math
import pickle
from dataclasses import replace
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from . import nn
from .channel import los_probability
from .config import RunConfig, dump_config, resolve
from .ddpg import (EVAL_COLUMNS, LOG_COLUMNS, PRESETS, EvalReport, Trainer, WeightVector,
                   evaluate)
from .env import TRACE_COLUMNS, OBS_DIM, ACTION_DIM
from .power import harvested_power, propulsion_power

log = logging.getLogger(__name__)

MANIFEST = "manifest.cfg"
TRAIN_LOG = "training_log.csv"
RESUME = "resume.pkl"
CURVE_FILES = ("propulsion_power.csv", "harvested_power.csv", "los_probability.csv")
SWEEP_COLUMNS = ("preset", "w_dc", "w_eh", "w_ec", "seed", "avg_rate_mbps", "avg_power_w",
                 "harvested_uJ", "hovers", "status")


def _cell(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path, columns: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_cell(v) for v in row])
    return path


def read_csv(path) -> list[dict]:
    with Path(path).open(newline="") as fh:
        return list(csv.DictReader(fh))


def write_trace_csv(path, trace) -> Path:
    return write_csv(path, TRACE_COLUMNS, trace)


# ---------------------------------------------------------------- train

def checkpoint_paths(out_dir, episode: int) -> tuple[Path, Path]:
    ck = Path(out_dir) / "checkpoints"
    return ck / f"actor_ep{episode:05d}.txt", ck / f"critic_ep{episode:05d}.txt"


def _save_checkpoint(trainer: Trainer, out_dir: Path) -> None:
    actor_path, critic_path = checkpoint_paths(out_dir, trainer.episode)
    actor_path.parent.mkdir(parents=True, exist_ok=True)
    nn.save_mlp(trainer.agent.actor, actor_path)
    nn.save_mlp(trainer.agent.critic, critic_path)
    tmp = out_dir / (RESUME + ".tmp")
    with tmp.open("wb") as fh:
        pickle.dump(trainer, fh)
    tmp.replace(out_dir / RESUME)


def train_run(cfg: RunConfig, out_dir, resume: bool = False) -> Trainer:
    """Train to ``cfg.episodes``, checkpointing every ``checkpoint_every`` episodes and at the end.

    With ``resume`` the run continues from ``out_dir/resume.pkl`` (the last checkpoint)
    and keeps the episode numbering.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / MANIFEST).write_text(dump_config(cfg))
    trainer = None
    if resume and (out / RESUME).exists():
        with (out / RESUME).open("rb") as fh:
            trainer = pickle.load(fh)
        # the episode budget may grow between runs; everything else must match
        if (trainer.env_config, replace(trainer.hyper, episodes=cfg.episodes), trainer.w,
                trainer.seed) != (cfg.env, cfg.hyper, cfg.weights, cfg.seed):
            raise ValueError(f"{out / RESUME} was written by a different configuration")
        trainer.hyper = cfg.hyper
        log.info("resuming at episode %d", trainer.episode)
    if trainer is None:
        trainer = Trainer(cfg.env, cfg.hyper, cfg.weights, cfg.seed)
    every = cfg.hyper.checkpoint_every

    def on_episode(t: Trainer, row):
        log.info("episode %d return %.1f", row.episode, row.ret)
        write_csv(out / TRAIN_LOG, LOG_COLUMNS, t.log)
        if t.episode % every == 0 or t.episode == cfg.episodes:
            _save_checkpoint(t, out)

    remaining = max(cfg.episodes - trainer.episode, 0)
    trainer.run(remaining, on_episode)
    write_csv(out / TRAIN_LOG, LOG_COLUMNS, trainer.log)
    if trainer.episode == 0 or not checkpoint_paths(out, trainer.episode)[0].exists():
        _save_checkpoint(trainer, out)
    return trainer


# ----------------------------------------------------------------- eval

def load_actor(path, cfg: RunConfig) -> nn.Mlp:
    actor = nn.load_mlp(path)
    expected = [OBS_DIM, *cfg.hyper.actor_hidden, ACTION_DIM]
    if actor.sizes != expected:
        raise ValueError(f"checkpoint topology {'-'.join(map(str, actor.sizes))} does not match "
                         f"configured actor {'-'.join(map(str, expected))}")
    return actor


def write_eval_csv(path, report: EvalReport) -> Path:
    rows = [tuple(r) for r in report.rows]
    rows.append(("mean", *(report.mean(c) for c in EVAL_COLUMNS[1:])))
    rows.append(("std", *(report.std(c) for c in EVAL_COLUMNS[1:])))
    return write_csv(path, EVAL_COLUMNS, rows)


def eval_run(checkpoint, cfg: RunConfig, episodes: int, out_path) -> EvalReport:
    report = evaluate(load_actor(checkpoint, cfg), cfg.env, episodes, cfg.seed)
    write_eval_csv(out_path, report)
    return report


# --------------------------------------------------------------- curves

def write_curves(cfg: RunConfig, out_dir) -> list[Path]:
    """Propulsion power vs speed, EH transfer curve and LoS probability vs elevation."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    env = cfg.env
    speeds = np.round(np.arange(0, 201) * 0.1, 10)
    p_r = np.linspace(0.0, 100e-6, 1001)
    theta = np.round(np.arange(1, 901) * 0.1, 10)
    return [
        write_csv(out / CURVE_FILES[0], ("speed_mps", "power_w"),
                  zip(speeds, propulsion_power(speeds, env.propulsion))),
        write_csv(out / CURVE_FILES[1], ("received_uw", "harvested_uw"),
                  zip(p_r * 1e6, harvested_power(p_r, env.eh) * 1e6)),
        write_csv(out / CURVE_FILES[2], ("elevation_deg", "p_los"),
                  zip(theta, los_probability(theta, env.channel))),
    ]


# ---------------------------------------------------------------- sweep

class SweepJob(NamedTuple):
    preset: str
    weights: WeightVector
    seed: int
    values: tuple
    out_dir: str
    eval_episodes: int


class SweepRow(NamedTuple):
    preset: str
    w_dc: float
    w_eh: float
    w_ec: float
    seed: int
    avg_rate_mbps: float
    avg_power_w: float
    harvested_uJ: float
    hovers: float
    status: str


def run_sweep_job(job: SweepJob) -> SweepRow:
    w = job.weights
    try:
        cfg = resolve({**dict(job.values), "w_dc": w.w_dc, "w_eh": w.w_eh, "w_ec": w.w_ec,
                       "seed": job.seed})
        run_dir = Path(job.out_dir) / f"{job.preset}_seed{job.seed}"
        trainer = train_run(cfg, run_dir)
        report = evaluate(trainer.agent.actor, cfg.env, job.eval_episodes, cfg.seed)
        write_eval_csv(run_dir / "eval.csv", report)
        return SweepRow(job.preset, w.w_dc, w.w_eh, w.w_ec, job.seed,
                        report.mean("avg_rate_mbps"), report.mean("avg_power_w"),
                        report.mean("harvested_uJ"), report.mean("hovers"), "ok")
    except Exception as exc:  # one failed run must not sink the sweep
        log.error("sweep run %s seed %d failed: %s", job.preset, job.seed, exc)
        return SweepRow(job.preset, w.w_dc, w.w_eh, w.w_ec, job.seed, math.nan, math.nan,
                        math.nan, math.nan, f"failed: {type(exc).__name__}: {exc}")


def sweep(cfg: RunConfig, grid: dict[str, WeightVector], seeds: Sequence[int], out_dir,
          eval_episodes: int = 10, workers: int = 1) -> list[SweepRow]:
    """Train and evaluate one run per (weights, seed); writes ``comparison.csv``."""
    if not grid or not seeds:
        raise ValueError("sweep needs at least one weight vector and one seed")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    jobs = [SweepJob(name, w, s, cfg.values, str(out), eval_episodes)
            for name, w in grid.items() for s in seeds]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(run_sweep_job, jobs))
    else:
        rows = [run_sweep_job(j) for j in jobs]
    write_csv(out / "comparison.csv", SWEEP_COLUMNS, rows)
    return rows


def preset_grid(names: Sequence[str]) -> dict[str, WeightVector]:
    grid = {}
    for name in names:
        key = name.strip().lower()
        if key not in PRESETS:
            raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
        grid[key] = PRESETS[key]
    return grid


# ------------------------------------------------------------ gradcheck

def gradcheck_suite(n_nets: int = 20, seed: int = 0, max_width: int = 16) -> list[float]:
    """Backprop vs central differences on random small networks; returns each max rel error."""
    rng = np.random.default_rng(seed)
    errors = []
    for _ in range(n_nets):
        depth = int(rng.integers(1, 4))
        sizes = [int(rng.integers(1, 9))] + [int(rng.integers(1, max_width + 1))
                                             for _ in range(depth - 1)] + [int(rng.integers(1, 3))]
        acts = [str(a) for a in rng.choice(nn.ACTIVATIONS, size=len(sizes) - 1)]
        mlp = nn.init_mlp(sizes, acts, rng)
        for layer in mlp.layers:
            layer.bias[:] = rng.normal(0, 0.5, size=layer.bias.shape)
        x = rng.normal(size=(3, sizes[0]))
        errors.append(nn.gradient_check(mlp, x, rng))
    return errors
