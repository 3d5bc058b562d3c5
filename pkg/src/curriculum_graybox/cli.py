"""Command line entry point: ``evaluate``, ``optimize``, ``report``,
``enumerate`` and ``generate``.

Exit status is 0 on success, 1 on an unexpected internal error and 2 when the
user input (config, curriculum literal, algorithm name, budget) is at fault.
"""
from __future__ import annotations

import argparse
import json
import sys
import traceback
from pathlib import Path

from .curriculum import InfeasibleCurriculum, count_feasible
from .harness import (ALGORITHMS, ConfigError, Experiment, build_report, format_report,
                      load_config, write_generated_experiment)

EXIT_OK, EXIT_INTERNAL, EXIT_USER = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def parse_curriculum(text: str):
    try:
        value = json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"curriculum must be a JSON list of task ids, got {text!r}") from exc
    if not isinstance(value, list) or not all(isinstance(v, int) and not isinstance(v, bool)
                                              for v in value):
        raise UsageError(f"curriculum must be a JSON list of integers, got {text!r}")
    return value


def cmd_evaluate(args) -> int:
    exp = Experiment(load_config(args.config))
    res = exp.evaluate(parse_curriculum(args.curriculum))
    ret = res.per_episode_returns
    print(f"curriculum {list(res.curriculum)}")
    print(f"regret {res.regret:.12g}")
    print(f"merit {res.merit:.12g}")
    print(f"returns mean {ret.mean():.6f} min {ret.min():.6f} max {ret.max():.6f} "
          f"last {ret[:, -1].mean():.6f}")
    print(f"repetitions {ret.shape[0]} episodes {ret.shape[1]}")
    return EXIT_OK


def cmd_optimize(args) -> int:
    if args.algo not in ALGORITHMS:
        raise ConfigError(f"unknown algorithm {args.algo!r}; choose from {', '.join(ALGORITHMS)}")
    if args.budget is not None and args.budget <= 0:
        raise ConfigError(f"budget must be positive, got {args.budget}")
    exp = Experiment(load_config(args.config))
    res = exp.run(args.algo, args.budget)
    print(f"{args.algo} best {list(res.best.curriculum)} regret {res.best.value:.12g} "
          f"evaluations {res.evaluations}")
    return EXIT_OK


def cmd_report(args) -> int:
    d = Path(args.dir)
    if not d.is_dir():
        raise ConfigError(f"not a directory: {d}")
    report = build_report(d)
    (d / "report.json").write_text(json.dumps(report, indent=1, sort_keys=True) + "\n",
                                   encoding="utf-8")
    sys.stdout.write(format_report(report))
    for w in report["warnings"]:
        print(f"warning: {w}", file=sys.stderr)
    return EXIT_OK


def cmd_enumerate(args) -> int:
    cfg = load_config(args.config)
    print(count_feasible(len(cfg.task_files), cfg.L))
    return EXIT_OK


def cmd_generate(args) -> int:
    path = write_generated_experiment(args.out, args.seed, n=args.n, L=args.L,
                                      episodes=args.episodes, repetitions=args.repetitions)
    print(path)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="curriculum-graybox",
                description="Curriculum evaluation and gray-box curriculum search.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    e = sub.add_parser("evaluate", help="regret of one curriculum")
    e.add_argument("--config", required=True)
    e.add_argument("--curriculum", required=True, help='JSON list, e.g. "[2, 0]"')
    e.set_defaults(func=cmd_evaluate)

    o = sub.add_parser("optimize", help="run one search algorithm")
    o.add_argument("--config", required=True)
    o.add_argument("--algo", required=True, help="one of " + ", ".join(ALGORITHMS))
    o.add_argument("--budget", type=int)
    o.set_defaults(func=cmd_optimize)

    r = sub.add_parser("report", help="tabulate the traces in a run directory")
    r.add_argument("--dir", required=True)
    r.set_defaults(func=cmd_report)

    n = sub.add_parser("enumerate", help="print the number of feasible curricula")
    n.add_argument("--config", required=True)
    n.set_defaults(func=cmd_enumerate)

    g = sub.add_parser("generate", help="write random task maps and a config")
    g.add_argument("--out", required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--n", type=int, default=5)
    g.add_argument("--L", type=int, default=3)
    g.add_argument("--episodes", type=int, default=100)
    g.add_argument("--repetitions", type=int, default=3)
    g.set_defaults(func=cmd_generate)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except (UsageError, ConfigError, InfeasibleCurriculum) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USER
    except Exception:  # noqa: BLE001
        traceback.print_exc()
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
