"""Command line entry point: ``uav-moddpg {train,eval,curves,sweep,gradcheck}``.

Set ``UAV_MODDPG_LOG`` (DEBUG, INFO, WARNING, ...) to change log verbosity.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from . import harness
from .config import ConfigError, RunConfig, load_config, resolve

EXIT_OK = 0
EXIT_CONFIG = 3
EXIT_RUNTIME = 4
EXIT_SWEEP_PARTIAL = 5

GRADCHECK_TOL = 1e-4


def parse_seeds(text: str) -> list[int]:
    """``"1..5"`` -> [1, 2, 3, 4, 5]; ``"1,3,7"`` -> [1, 3, 7]."""
    seeds = []
    for part in text.split(","):
        part = part.strip()
        if ".." in part:
            lo, hi = part.split("..", 1)
            seeds.extend(range(int(lo), int(hi) + 1))
        elif part:
            seeds.append(int(part))
    if not seeds:
        raise argparse.ArgumentTypeError(f"no seeds in {text!r}")
    return seeds


def _config(path) -> RunConfig:
    return load_config(path) if path else resolve()


def _with_seed(cfg: RunConfig, seed) -> RunConfig:
    if seed is None:
        return cfg
    return resolve({**cfg.flat(), "seed": seed})


def cmd_train(args) -> int:
    cfg = _with_seed(_config(args.config), args.seed)
    trainer = harness.train_run(cfg, args.out, resume=args.resume)
    last = trainer.log[-1] if trainer.log else None
    print(f"trained {trainer.episode} episodes -> {args.out}"
          + (f" (last return {last.ret:.1f})" if last else ""))
    return EXIT_OK


def cmd_eval(args) -> int:
    cfg = _with_seed(_config(args.config), args.seed)
    out = Path(args.out) if args.out else Path(args.checkpoint).with_suffix(".eval.csv")
    report = harness.eval_run(args.checkpoint, cfg, args.episodes, out)
    print(f"avg_rate_mbps={report.mean('avg_rate_mbps'):.4f} "
          f"avg_power_w={report.mean('avg_power_w'):.3f} "
          f"harvested_uJ={report.mean('harvested_uJ'):.3f} hovers={report.mean('hovers'):.2f}"
          f" -> {out}")
    return EXIT_OK


def cmd_curves(args) -> int:
    for path in harness.write_curves(_config(args.config), args.out):
        print(path)
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _config(args.config)
    rows = harness.sweep(cfg, harness.preset_grid(args.preset.split(",")), args.seeds, args.out,
                         eval_episodes=args.eval_episodes, workers=args.workers)
    for r in rows:
        print(f"{r.preset:>6} seed {r.seed}: rate {r.avg_rate_mbps:.3f} Mbps, "
              f"power {r.avg_power_w:.2f} W, harvested {r.harvested_uJ:.2f} uJ [{r.status}]")
    return EXIT_SWEEP_PARTIAL if any(r.status != "ok" for r in rows) else EXIT_OK


def cmd_gradcheck(args) -> int:
    errors = harness.gradcheck_suite(args.nets, args.seed)
    worst = max(errors)
    print(f"{len(errors)} networks, max relative error {worst:.3e} (tolerance {GRADCHECK_TOL:g})")
    return EXIT_OK if worst < GRADCHECK_TOL else EXIT_RUNTIME


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="uav-moddpg", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="train an MODDPG agent")
    t.add_argument("--config", help="key = value config file (defaults if omitted)")
    t.add_argument("--seed", type=int)
    t.add_argument("--out", required=True, help="run directory")
    t.add_argument("--resume", action="store_true", help="continue from the last checkpoint")
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="noise-free evaluation of an actor checkpoint")
    e.add_argument("--checkpoint", required=True)
    e.add_argument("--config")
    e.add_argument("--episodes", type=int, required=True)
    e.add_argument("--seed", type=int)
    e.add_argument("--out", help="report CSV (default: next to the checkpoint)")
    e.set_defaults(func=cmd_eval)

    c = sub.add_parser("curves", help="emit propulsion, EH and LoS curves as CSV")
    c.add_argument("--config")
    c.add_argument("--out", required=True)
    c.set_defaults(func=cmd_curves)

    s = sub.add_parser("sweep", help="train + evaluate every (preset, seed) pair")
    s.add_argument("--config")
    s.add_argument("--preset", default="sodr,soec")
    s.add_argument("--seeds", type=parse_seeds, default=[1])
    s.add_argument("--out", required=True)
    s.add_argument("--eval-episodes", type=int, default=10)
    s.add_argument("--workers", type=int, default=1)
    s.set_defaults(func=cmd_sweep)

    g = sub.add_parser("gradcheck", help="finite-difference check of the backprop kernel")
    g.add_argument("--nets", type=int, default=20)
    g.add_argument("--seed", type=int, default=0)
    g.set_defaults(func=cmd_gradcheck)
    return p


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("UAV_MODDPG_LOG", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, RuntimeError, FloatingPointError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
