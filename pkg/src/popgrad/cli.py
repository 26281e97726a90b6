"""Command-line front-end: seeded multi-run experiments emitting CSV curves."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .harness import aggregate, emit_csv, parse_config
from .loop import ConfigError, run_experiment
from .nets import DivergenceError

_ALGO_NAMES = {"cem": "cem", "ddpg": "ddpg", "td3": "td3", "cem-ddpg": "cem_ddpg",
               "cem-td3": "cem_td3", "multi-td3": "multi_actor_td3"}
_BUDGET_NAMES = {"text": "per_text", "pseudocode": "per_pseudocode"}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="popgrad",
        description="Policy search with a diagonal-Gaussian cross-entropy optimizer, "
                    "off-policy actor-critic learners, and their hybrid.")
    p.add_argument("--config", type=str, default=None,
                   help="key=value configuration file; flags override it")
    p.add_argument("--algo", choices=sorted(_ALGO_NAMES), default=None)
    p.add_argument("--env", choices=["pointmass", "pendulum", "deceptive", "sphere",
                                     "rastrigin"], default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-steps", type=int, default=None)
    p.add_argument("--runs", type=int, default=1)
    p.add_argument("--pop-size", type=int, default=None)
    p.add_argument("--importance-mixing", choices=["on", "off"], default=None)
    p.add_argument("--action-noise", type=float, default=None)
    p.add_argument("--actor-nonlinearity", choices=["tanh", "relu"], default=None)
    p.add_argument("--budget-mode", choices=sorted(_BUDGET_NAMES), default=None)
    p.add_argument("--hidden-sizes", type=str, default=None,
                   help="comma-separated hidden layer widths, e.g. 32,32")
    p.add_argument("--out", type=str, default="results")
    return p


def _config_from_args(args) -> dict:
    overrides = {}
    if args.algo is not None:
        overrides["algo"] = _ALGO_NAMES[args.algo]
    if args.env is not None:
        overrides["env"] = args.env
    if args.max_steps is not None:
        overrides["max_steps"] = args.max_steps
    if args.pop_size is not None:
        overrides["pop_size"] = args.pop_size
    if args.importance_mixing is not None:
        overrides["importance_mixing"] = args.importance_mixing
    if args.action_noise is not None:
        overrides["action_noise_std"] = args.action_noise
    if args.actor_nonlinearity is not None:
        overrides["actor_nonlinearity"] = args.actor_nonlinearity
    if args.budget_mode is not None:
        overrides["gradient_budget_mode"] = _BUDGET_NAMES[args.budget_mode]
    if args.hidden_sizes is not None:
        overrides["hidden_sizes"] = args.hidden_sizes
    return overrides


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.runs < 1:
            raise ConfigError(f"runs: must be >= 1, got {args.runs}")
        base = parse_config(args.config) if args.config else parse_config({})
        merged = {**{k: getattr(base, k) for k in base.__dataclass_fields__},
                  **_config_from_args(args)}
        config = parse_config(merged)

        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        runs = []
        for r in range(args.runs):
            records = run_experiment(config, args.seed + r)
            runs.append(records)
            emit_csv(records, out_dir / f"run_{r:03d}.csv")
        curve = aggregate(runs)
        emit_csv(curve, out_dir / "aggregate.csv")
        final = curve.mean[-1]
        print(f"{config.algo} on {config.env}: {args.runs} run(s), "
              f"final mean return {final:.4f} at {int(curve.steps[-1])} steps "
              f"-> {out_dir}")
        return 0
    except (ConfigError, DivergenceError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
