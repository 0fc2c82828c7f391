"""Command-line front end: a thin client over the library and service."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .dataset import dedup, ingest, record_to_json, split
from .engine import Environment, Evaluator, Limits
from .errors import EvalError
from .extraction import CompletionRecord
from .grpo import TrainConfig, train_toy
from .parser import LexError, ParseError, parse_program
from .reports import default_tokenizer, evaluate_corpus, render_table, report_to_json, token_reduction
from .scoring import RewardConfig, reward_config_from_file
from .service import serve_stdio, serve_tcp
from .values import value_to_text

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INPUT = 2
EXIT_INTERNAL = 3


class UsageError(Exception):
    pass


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _limits_from(args) -> Limits:
    kwargs = {}
    if getattr(args, "limits_steps", None):
        kwargs["max_steps"] = args.limits_steps
    if getattr(args, "limits_ms", None):
        kwargs["wall_clock_budget_ms"] = args.limits_ms
    return Limits(**kwargs)


def _reward_config_from(args) -> RewardConfig:
    if getattr(args, "reward_config", None):
        try:
            return reward_config_from_file(args.reward_config)
        except (OSError, ValueError, json.JSONDecodeError) as err:
            raise InputError(f"bad reward config: {err}")
    return RewardConfig()


def _add_common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--limits-steps", type=int, help="evaluation step budget")
    p.add_argument("--limits-ms", type=int, help="evaluation wall clock budget (ms)")
    p.add_argument("--reward-config", help="JSON file with reward weights")
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="neurosym", description="Symbolic mini-language engine and scoring tools")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("repl", help="interactive engine")
    _add_common_flags(p)

    p = sub.add_parser("run", help="evaluate a program file")
    p.add_argument("file")
    _add_common_flags(p)

    p = sub.add_parser("score", help="stdin requests to stdout responses, one-shot")
    p.add_argument("--workers", type=int)
    _add_common_flags(p)

    p = sub.add_parser("serve", help="persistent scoring service")
    p.add_argument("--port", type=int, help="serve on a local TCP port instead of stdio")
    p.add_argument("--workers", type=int)
    _add_common_flags(p)

    p = sub.add_parser("eval", help="classify a completion corpus and emit the category report")
    p.add_argument("--dataset", required=True)
    p.add_argument("--completions", required=True)
    p.add_argument("--json-out", help="write the machine-readable report here")
    _add_common_flags(p)

    p = sub.add_parser("train-toy", help="run the toy GRPO training loop")
    p.add_argument("--config", help="JSON file with training configuration")
    p.add_argument("--out", default="train_history.jsonl")
    _add_common_flags(p)

    p = sub.add_parser("compare-tokens", help="token-efficiency comparison of two program corpora")
    p.add_argument("--a", required=True, help="directory of programs (candidate)")
    p.add_argument("--b", required=True, help="directory of programs (reference)")
    _add_common_flags(p)

    p = sub.add_parser("split", help="assign train/test splits to a dataset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--ratio", default="500:1")
    p.add_argument("--out", help="output JSONL path (default stdout)")
    p.add_argument("--dedup", action="store_true", help="de-duplicate prompts before splitting")
    _add_common_flags(p)

    return parser


def _cmd_repl(args) -> int:
    limits = _limits_from(args)
    env = Environment()
    print("neurosym repl; empty line or Ctrl-D to quit")
    while True:
        try:
            line = input("in>  ")
        except EOFError:
            return EXIT_OK
        if not line.strip():
            return EXIT_OK
        try:
            value = Evaluator(env, limits).run(parse_program(line))
            print("out> " + value_to_text(value))
        except (LexError, ParseError, EvalError) as err:
            print(f"err> {err}")


def _cmd_run(args) -> int:
    limits = _limits_from(args)
    try:
        source = Path(args.file).read_text(encoding="utf-8")
    except OSError as err:
        raise InputError(str(err))
    try:
        value = Evaluator(limits=limits).run(parse_program(source))
    except (LexError, ParseError, EvalError) as err:
        raise InputError(str(err))
    print(value_to_text(value))
    return EXIT_OK


def _cmd_score(args) -> int:
    serve_stdio(_reward_config_from(args), _limits_from(args), getattr(args, "workers", None))
    return EXIT_OK


def _cmd_serve(args) -> int:
    reward_config = _reward_config_from(args)
    limits = _limits_from(args)
    if args.port:
        server = serve_tcp(args.port, reward_config, limits, args.workers)
        try:
            server.serve_forever()
        except KeyboardInterrupt:
            server.shutdown()
        return EXIT_OK
    serve_stdio(reward_config, limits, args.workers)
    return EXIT_OK


def _load_completions(path) -> dict[str, CompletionRecord]:
    completions: dict[str, CompletionRecord] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                record = CompletionRecord(
                    id=str(obj["id"]),
                    prompt_id=str(obj.get("prompt_id", obj["id"])),
                    completion_text=str(obj["completion"]),
                    prompt_token_len=int(obj.get("prompt_token_len", 0)),
                    output_token_len=int(obj.get("output_token_len", 0)),
                )
            except (json.JSONDecodeError, KeyError, ValueError) as err:
                raise InputError(f"completions line {lineno}: {err}")
            completions[record.id] = record
    return completions


def _cmd_eval(args) -> int:
    report = ingest(args.dataset)
    if report.errors:
        for lineno, reason in report.errors:
            print(f"dataset line {lineno}: {reason}", file=sys.stderr)
        raise InputError(f"{len(report.errors)} malformed dataset lines")
    completions = _load_completions(args.completions)
    corpus = evaluate_corpus(report.records, completions, _limits_from(args), _reward_config_from(args))
    print(render_table(corpus))
    if args.json_out:
        Path(args.json_out).write_text(report_to_json(corpus), encoding="utf-8")
    return EXIT_OK


def _cmd_train_toy(args) -> int:
    config = TrainConfig(seed=args.seed)
    if args.config:
        try:
            with open(args.config, "r", encoding="utf-8") as fh:
                config = TrainConfig(**json.load(fh))
        except (OSError, TypeError, ValueError, json.JSONDecodeError) as err:
            raise InputError(f"bad training config: {err}")
    history = train_toy(config=config, reward_config=_reward_config_from(args))
    history.write_jsonl(args.out)
    final = history.epochs[-1]
    print(f"epochs={len(history.epochs)} final_mean_reward={final.mean_reward:.4f} "
          f"max_achievable={history.max_achievable:.2f} history={args.out}")
    return EXIT_OK


def _read_corpus(directory) -> list[str]:
    root = Path(directory)
    if not root.is_dir():
        raise InputError(f"not a directory: {directory}")
    programs = [p.read_text(encoding="utf-8") for p in sorted(root.iterdir()) if p.is_file()]
    if not programs:
        raise InputError(f"no files in {directory}")
    return programs


def _cmd_compare_tokens(args) -> int:
    reduction = token_reduction(_read_corpus(args.a), _read_corpus(args.b), default_tokenizer)
    print(f"token_reduction={reduction:.2f}%")
    return EXIT_OK


def _cmd_split(args) -> int:
    try:
        train_part, test_part = (int(x) for x in args.ratio.split(":"))
    except ValueError:
        raise UsageError(f"bad ratio {args.ratio!r}, expected like 500:1")
    report = ingest(args.dataset)
    if report.errors:
        raise InputError(f"{len(report.errors)} malformed dataset lines")
    records = report.records
    if args.dedup:
        records, removed_pct = dedup(records)
        print(f"dedup removed {removed_pct:.2f}%", file=sys.stderr)
    assigned = split(records, (train_part, test_part), args.seed)
    out = open(args.out, "w", encoding="utf-8") if args.out else sys.stdout
    try:
        for r in assigned:
            out.write(record_to_json(r) + "\n")
    finally:
        if args.out:
            out.close()
    n_test = sum(1 for r in assigned if r.split == "test")
    print(f"train={len(assigned) - n_test} test={n_test}", file=sys.stderr)
    return EXIT_OK


_COMMANDS = {
    "repl": _cmd_repl,
    "run": _cmd_run,
    "score": _cmd_score,
    "serve": _cmd_serve,
    "eval": _cmd_eval,
    "train-toy": _cmd_train_toy,
    "compare-tokens": _cmd_compare_tokens,
    "split": _cmd_split,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except UsageError as err:
        print(f"usage error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except InputError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as err:  # internal failure
        print(f"internal error: {err}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
