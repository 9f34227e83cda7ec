"""Command-line entry point.

Subcommands: train, eval, baseline, oracle, validate. Every run is
deterministic per (config, seed): the same invocation writes byte-identical
artifacts. Exit codes: 0 success, 1 usage error, 2 config error, 3 runtime
error.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys

from . import __version__
from .config import RunConfig, config_hash, load_config
from .errors import ParseError, QnetrlError, ValidationError

_FLOAT9 = "{:.9g}".format


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qnetrl",
        description="Quantum-network offloading: simulation, training, evaluation.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="TOML run configuration (defaults apply if omitted)")
        p.add_argument("--seed", type=int, help="root seed, overrides the config's")
        p.add_argument("--out", help="output path (falls back to output.metrics)")

    p_train = sub.add_parser("train", help="train the multi-agent policy, write metrics CSV")
    common(p_train)
    p_train.add_argument("--episodes", type=int, help="override training.episodes")
    p_train.add_argument("--checkpoint", help="write trained policy here (falls back to output.checkpoint)")

    p_eval = sub.add_parser("eval", help="evaluate a policy, write per-episode cost CSV")
    common(p_eval)
    p_eval.add_argument("--policy", required=True,
                        help="checkpoint path or one of: random, greedy, all-local, all-cloud")

    p_base = sub.add_parser("baseline", help="evaluate a named baseline policy")
    common(p_base)
    p_base.add_argument("--name", required=True,
                        choices=["random", "greedy", "all-local", "all-cloud"])

    p_oracle = sub.add_parser("oracle", help="exhaustive stationary-action search (small instances)")
    common(p_oracle)
    p_oracle.add_argument("--grid", type=int, default=11,
                          help="fraction grid points over [0, 1] (default 11)")
    p_oracle.add_argument("--scenarios", type=int, default=8,
                          help="scenario count for the sample average (default 8)")

    p_val = sub.add_parser("validate", help="check a config, list every violation")
    common(p_val)
    return parser


def _load(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    return cfg


def _out_path(args, cfg: RunConfig):
    return args.out or cfg.output.metrics or None


def _metadata_lines(cfg: RunConfig, extra=()):
    lines = [
        f"# config_hash={config_hash(cfg)}",
        f"# seed={cfg.seed}",
        f"# version={__version__}",
    ]
    lines.extend(extra)
    return lines


def _write_lines(path, lines):
    from .errors import IoError

    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def _cost_report(path, cfg, label, mean, per_episode):
    lines = _metadata_lines(cfg, [
        f"# policy={label}",
        f"# mean_cost={_FLOAT9(mean)}",
        "episode,cost",
    ])
    lines.extend(f"{i},{_FLOAT9(c)}" for i, c in enumerate(per_episode, start=1))
    _write_lines(path, lines)


def _resolve_policy(spec_str: str, cfg: RunConfig):
    from .baselines import BASELINE_NAMES, baseline_policy
    from .checkpoint import load_policy
    from .env import observation_scale

    name = spec_str.lower().replace("_", "-")
    if name in BASELINE_NAMES or name in ("local", "cloud", "alllocal", "allcloud"):
        return baseline_policy(name, cfg), name
    return load_policy(spec_str, obs_scale=observation_scale(cfg)), spec_str


def _cmd_train(args) -> int:
    from .marl import train
    from .metrics import emit_metrics

    cfg = _load(args)
    if args.episodes is not None:
        if args.episodes < 0:
            print("usage error: --episodes must be >= 0", file=sys.stderr)
            return 1
        cfg = dataclasses.replace(
            cfg, training=dataclasses.replace(cfg.training, episodes=args.episodes))
    out = _out_path(args, cfg)
    if out is None:
        print("usage error: train needs --out or output.metrics", file=sys.stderr)
        return 1
    result = train(cfg)
    emit_metrics(result.trace, out, cfg, cfg.seed)
    checkpoint_path = args.checkpoint or cfg.output.checkpoint or None
    if checkpoint_path:
        from .checkpoint import save_checkpoint

        save_checkpoint(result.learners, checkpoint_path)
    if result.trace.rows:
        window = result.trace.final_window_mean(0.1)
        print(f"trained {len(result.trace.rows)} episodes, "
              f"final-window mean cost {window:.6g}, metrics -> {out}")
    else:
        print(f"trained 0 episodes, metrics -> {out}")
    return 0


def _cmd_eval(args) -> int:
    from .marl import evaluate

    cfg = _load(args)
    out = _out_path(args, cfg)
    if out is None:
        print("usage error: eval needs --out or output.metrics", file=sys.stderr)
        return 1
    policy, label = _resolve_policy(args.policy, cfg)
    episodes = cfg.training.eval_episodes
    mean, per_episode = evaluate(cfg, policy, episodes, cfg.seed)
    _cost_report(out, cfg, label, mean, per_episode)
    print(f"{label}: mean per-step cost {mean:.6g} over {episodes} episodes -> {out}")
    return 0


def _cmd_baseline(args) -> int:
    from .baselines import baseline_policy
    from .marl import evaluate

    cfg = _load(args)
    out = _out_path(args, cfg)
    if out is None:
        print("usage error: baseline needs --out or output.metrics", file=sys.stderr)
        return 1
    policy = baseline_policy(args.name, cfg)
    episodes = cfg.training.eval_episodes
    mean, per_episode = evaluate(cfg, policy, episodes, cfg.seed)
    _cost_report(out, cfg, args.name, mean, per_episode)
    print(f"{args.name}: mean per-step cost {mean:.6g} over {episodes} episodes -> {out}")
    return 0


def _cmd_oracle(args) -> int:
    from .stochastic import exhaustive_oracle, sample_scenarios

    cfg = _load(args)
    out = _out_path(args, cfg)
    if out is None:
        print("usage error: oracle needs --out or output.metrics", file=sys.stderr)
        return 1
    if args.grid < 2:
        print("usage error: --grid must be >= 2", file=sys.stderr)
        return 1
    if args.scenarios < 1:
        print("usage error: --scenarios must be >= 1", file=sys.stderr)
        return 1
    grid = [i / (args.grid - 1) for i in range(args.grid)]
    scenarios = sample_scenarios(cfg, args.scenarios, cfg.seed)
    result = exhaustive_oracle(cfg, grid, scenarios)
    lines = _metadata_lines(cfg, [
        f"# expected_cost={_FLOAT9(result.expected_cost)}",
        f"# standard_error={_FLOAT9(result.standard_error)}",
        f"# candidates={result.candidates}",
        "agent,target,fraction",
    ])
    lines.extend(f"{a},{act.target},{_FLOAT9(act.fraction)}"
                 for a, act in result.actions.items())
    _write_lines(out, lines)
    print(f"oracle: expected cost {result.expected_cost:.6g} "
          f"over {result.candidates} candidates -> {out}")
    return 0


def _cmd_validate(args) -> int:
    try:
        cfg = load_config(args.config) if args.config else RunConfig()
    except ValidationError as exc:
        for fld, constraint in exc.violations:
            print(f"{fld}: {constraint}", file=sys.stderr)
        return 2
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return 2
    print(f"ok: config hash {config_hash(cfg)}")
    return 0


_COMMANDS = {
    "train": _cmd_train,
    "eval": _cmd_eval,
    "baseline": _cmd_baseline,
    "oracle": _cmd_oracle,
    "validate": _cmd_validate,
}


def run_cli(argv=None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse already printed usage/help
        return 0 if not exc.code else 1
    try:
        return _COMMANDS[args.command](args)
    except (ParseError, ValidationError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except QnetrlError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


def main():
    sys.exit(run_cli())
