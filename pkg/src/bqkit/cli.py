"""Command-line entry point: parse, ground, episodes, translate, solve, qtable, policy, check.

Exit codes: 0 success, 2 input error, 3 resource cap or unsupported export,
4 failed correctness check.  JSON is the machine format; text output is for
humans.  All output is byte-deterministic for a given input and flag set.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation

from .crosscheck import check_q_agreement, run_checks
from .errors import BqkitError, CapExceededError, CorrectnessError, NonTightProgramError
from .parser import parse_theory
from .program import NormalProgram, emit_program_text, parse_program_text
from .qvalues import QLEARNING, SARSA, extract_policy, policy_to_json, q_direct, q_online_fold
from .semantics import enumerate_episodes, episodes_to_jsonl
from .solver import (
    DEFAULT_MODEL_CAP,
    DEFAULT_NAIVE_ATOM_CAP,
    DEFAULT_SCALE,
    answer_sets_to_jsonl,
    enumerate_answer_sets,
    extract_episode,
    tightness_check,
)
from .semantics import DEFAULT_NODE_CAP, DEFAULT_STATE_ATOM_CAP
from .sat import clark_completion, emit_dimacs
from .theory import ActionTheory, ground_theory, pretty_print, validate_theory
from .translate import TranslateOptions, translate, translation_report

ENV_PREFIX = "BQKIT_"


@dataclass
class RunConfig:
    path: str
    mode: str = QLEARNING
    output_format: str = "json"
    method: str = "auto"
    require_goal: bool = False
    strict_initial: bool = False
    bare: bool = False
    enforce_exec: bool | None = None
    horizon: int | None = None
    discount: Decimal | None = None
    scale: Decimal = DEFAULT_SCALE
    max_atoms: int = DEFAULT_STATE_ATOM_CAP
    max_nodes: int = DEFAULT_NODE_CAP
    max_models: int = DEFAULT_MODEL_CAP
    max_naive_atoms: int = DEFAULT_NAIVE_ATOM_CAP

    def translate_options(self) -> TranslateOptions:
        # --bare drops the encoding guards unless --enforce-exec asks otherwise.
        if self.bare:
            enforce = False if self.enforce_exec is None else self.enforce_exec
            return TranslateOptions.bare(
                enforce_exec=enforce,
                require_goal=self.require_goal,
                strict_initial=self.strict_initial,
            )
        enforce = True if self.enforce_exec is None else self.enforce_exec
        return TranslateOptions(
            enforce_exec=enforce,
            require_goal=self.require_goal,
            strict_initial=self.strict_initial,
        )


def _env_int(name: str, default: int) -> int:
    value = os.environ.get(ENV_PREFIX + name)
    return int(value) if value else default


def build_arg_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bqkit", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, fmt_default: str = "json") -> None:
        p.add_argument("path", help="theory file (.bq), program file (.lp), or - for stdin")
        p.add_argument("--format", dest="output_format", choices=("json", "text"), default=fmt_default)
        p.add_argument("--mode", choices=(QLEARNING, SARSA), default=QLEARNING)
        p.add_argument("--method", choices=("auto", "naive", "sat"), default="auto")
        p.add_argument("--require-goal", action="store_true", help="keep only goal-reaching episodes")
        p.add_argument("--strict-initial", action="store_true", help="reject undeclared initial completions")
        p.add_argument("--bare", action="store_true", help="bare encoding: no executability guard, plain reward rules, no repeated static rules")
        p.add_argument("--enforce-exec", action=argparse.BooleanOptionalAction, default=None)
        p.add_argument("--horizon", type=int, default=None, help="override the declared horizon")
        p.add_argument("--discount", default=None, help="override the declared discount factor")
        p.add_argument("--scale", default=None, help="fixed-point scale for the value layer (default 0.000001)")
        p.add_argument("--max-atoms", type=int, default=_env_int("MAX_ATOMS", DEFAULT_STATE_ATOM_CAP))
        p.add_argument("--max-nodes", type=int, default=_env_int("MAX_NODES", DEFAULT_NODE_CAP))
        p.add_argument("--max-models", type=int, default=_env_int("MAX_MODELS", DEFAULT_MODEL_CAP))
        p.add_argument("--max-naive-atoms", type=int, default=_env_int("MAX_NAIVE_ATOMS", DEFAULT_NAIVE_ATOM_CAP))

    common(sub.add_parser("parse", help="parse and validate; print the canonical theory"), "text")
    common(sub.add_parser("ground", help="ground the theory; print the canonical ground form"), "text")
    common(sub.add_parser("episodes", help="enumerate episodes with initial-pair values"))
    p_translate = sub.add_parser("translate", help="emit the logic program or its completion CNF")
    common(p_translate, "text")
    p_translate.add_argument("--target", choices=("asp", "dimacs"), default="asp")
    p_translate.add_argument("--report", action="store_true", help="emit the translation provenance report instead")
    common(sub.add_parser("solve", help="enumerate answer sets (theories are translated first)"))
    common(sub.add_parser("qtable", help="value tables from both routes, compared"))
    common(sub.add_parser("policy", help="greedy policy from the off-policy table"))
    common(sub.add_parser("check", help="run all correspondence checks"), "text")
    return parser


def _read_input(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    with open(path, "r", encoding="utf-8") as handle:
        return handle.read()


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    discount = None
    if args.discount is not None:
        try:
            discount = Decimal(args.discount)
        except InvalidOperation:
            raise BqkitError(f"invalid discount override: {args.discount!r}")
        if not Decimal(0) < discount < Decimal(1):
            raise BqkitError(f"discount override must lie strictly between 0 and 1, got {discount}")
    horizon = args.horizon
    if horizon is not None and horizon < 0:
        raise BqkitError(f"horizon override must be non-negative, got {horizon}")
    scale = DEFAULT_SCALE
    if args.scale is not None:
        try:
            scale = Decimal(args.scale)
        except InvalidOperation:
            raise BqkitError(f"invalid scale: {args.scale!r}")
        if scale <= 0:
            raise BqkitError("scale must be positive")
    return RunConfig(
        path=args.path,
        mode=args.mode,
        output_format=args.output_format,
        method=args.method,
        require_goal=args.require_goal,
        strict_initial=args.strict_initial,
        bare=args.bare,
        enforce_exec=args.enforce_exec,
        horizon=horizon,
        discount=discount,
        scale=scale,
        max_atoms=args.max_atoms,
        max_nodes=args.max_nodes,
        max_models=args.max_models,
        max_naive_atoms=args.max_naive_atoms,
    )


def _load_theory(config: RunConfig, stderr) -> ActionTheory:
    text = _read_input(config.path)
    theory = parse_theory(text)
    report = validate_theory(theory)
    for line in report.lines():
        print(line, file=stderr)
    if not report.ok:
        raise BqkitError("theory validation failed")
    theory = theory.with_overrides(gamma=config.discount, horizon=config.horizon)
    return theory


def _load_ground_theory(config: RunConfig, stderr) -> ActionTheory:
    ground = ground_theory(_load_theory(config, stderr))
    report = validate_theory(ground)
    if not report.ok:
        for line in report.lines():
            print(line, file=stderr)
        raise BqkitError("ground theory validation failed")
    return ground


def _is_program_input(config: RunConfig) -> bool:
    return config.path.endswith(".lp")


def cmd_parse(config: RunConfig, stdout, stderr) -> int:
    theory = _load_theory(config, stderr)
    text = pretty_print(theory)
    if config.output_format == "json":
        print(json.dumps({"theory": text}, separators=(", ", ": ")), file=stdout)
    else:
        stdout.write(text)
    return 0


def cmd_ground(config: RunConfig, stdout, stderr) -> int:
    ground = _load_ground_theory(config, stderr)
    text = pretty_print(ground)
    if config.output_format == "json":
        print(json.dumps({"theory": text}, separators=(", ", ": ")), file=stdout)
    else:
        stdout.write(text)
    return 0


def cmd_episodes(config: RunConfig, stdout, stderr) -> int:
    theory = _load_ground_theory(config, stderr)
    episodes = enumerate_episodes(
        theory, require_goal=config.require_goal, max_nodes=config.max_nodes, max_atoms=config.max_atoms
    )
    gamma = float(theory.gamma)
    if config.output_format == "json":
        lines = []
        for episode in episodes:
            obj = episode.to_json_obj()
            obj["q0"] = q_online_fold(episode.rewards, gamma)
            lines.append(json.dumps(obj, separators=(", ", ": ")))
        stdout.write("\n".join(lines) + ("\n" if lines else ""))
    else:
        print(f"episodes: {len(episodes)}", file=stdout)
        for episode in episodes:
            trace = " ".join(f"{a}:{r!r}" for a, r in episode.trace())
            print(f"  from {episode.states[0]}: {trace} (q0={q_online_fold(episode.rewards, gamma)!r})", file=stdout)
    return 0


def cmd_translate(config: RunConfig, stdout, stderr, target: str, report: bool) -> int:
    theory = _load_ground_theory(config, stderr)
    program = translate(theory, config.translate_options())
    if report:
        obj = translation_report(theory, program).to_json_obj()
        print(json.dumps(obj, separators=(", ", ": ")), file=stdout)
        return 0
    if target == "asp":
        stdout.write(emit_program_text(program))
        return 0
    tightness = tightness_check(program)
    if not tightness.is_tight:
        cycle = " -> ".join(str(a) for a in tightness.cycle)
        raise NonTightProgramError(
            f"completion CNF export requires an acyclic positive dependency graph; cycle: {cycle}"
        )
    stdout.write(emit_dimacs(clark_completion(program)))
    return 0


def _program_for_solving(config: RunConfig, stderr) -> NormalProgram:
    if _is_program_input(config):
        return parse_program_text(_read_input(config.path))
    theory = _load_ground_theory(config, stderr)
    return translate(theory, config.translate_options())


def cmd_solve(config: RunConfig, stdout, stderr) -> int:
    program = _program_for_solving(config, stderr)
    answer_sets = enumerate_answer_sets(
        program,
        method=config.method,
        max_naive_atoms=config.max_naive_atoms,
        max_models=config.max_models,
        scale=config.scale,
    )
    if config.output_format == "json":
        stdout.write(answer_sets_to_jsonl(answer_sets))
    else:
        print(f"answer sets: {len(answer_sets)}", file=stdout)
        for answer_set in answer_sets:
            atoms = ", ".join(str(a) for a in answer_set.sorted_atoms())
            print("  {" + atoms + "}", file=stdout)
    return 0


def cmd_qtable(config: RunConfig, stdout, stderr) -> int:
    theory = _load_ground_theory(config, stderr)
    episodes = enumerate_episodes(
        theory, require_goal=config.require_goal, max_nodes=config.max_nodes, max_atoms=config.max_atoms
    )
    outcome = check_q_agreement(
        theory, config.translate_options(), method=config.method, scale=config.scale
    )
    obj: dict = {"agreement": outcome.to_json_obj()}
    if episodes:
        table = q_direct(episodes, float(theory.gamma), config.mode, include_start_anchored=config.bare)
        obj["direct"] = table.to_json_obj()
        program = translate(theory, config.translate_options())
        answer_sets = enumerate_answer_sets(
            program, method=config.method, max_models=config.max_models, scale=config.scale
        )
        obj["fold"] = [
            {
                "trace": [{"time": s.time, "action": s.action, "reward": s.reward_value()} for s in a.trace],
                "q_atoms": [str(q) for q in a.q_atoms()],
            }
            for a in answer_sets
        ]
    else:
        obj["direct"] = None
        obj["fold"] = []
        print("warning: no episodes; tables are empty", file=stderr)
    if config.output_format == "json":
        print(json.dumps(obj, separators=(", ", ": ")), file=stdout)
    else:
        for line in outcome.lines():
            print(line, file=stdout)
    if not outcome.passed:
        raise CorrectnessError("value tables from the two routes disagree")
    return 0


def cmd_policy(config: RunConfig, stdout, stderr) -> int:
    theory = _load_ground_theory(config, stderr)
    episodes = enumerate_episodes(
        theory, require_goal=config.require_goal, max_nodes=config.max_nodes, max_atoms=config.max_atoms
    )
    if not episodes:
        print("warning: no episodes; the policy is empty", file=stderr)
        print("[]" if config.output_format == "json" else "policy: empty", file=stdout)
        return 0
    table = q_direct(episodes, float(theory.gamma), QLEARNING)
    policy = extract_policy(table)
    if config.output_format == "json":
        print(policy_to_json(policy), file=stdout)
    else:
        for state, action in policy.choice.items():
            print(f"{state} -> {action}", file=stdout)
    return 0


def cmd_check(config: RunConfig, stdout, stderr) -> int:
    theory = _load_ground_theory(config, stderr)
    outcomes = run_checks(
        theory,
        config.translate_options(),
        method=config.method,
        max_naive_atoms=config.max_naive_atoms,
        max_models=config.max_models,
        scale=config.scale,
    )
    all_passed = all(outcome.passed for outcome in outcomes)
    if config.output_format == "json":
        obj = {"checks": [o.to_json_obj() for o in outcomes], "passed": all_passed}
        print(json.dumps(obj, separators=(", ", ": ")), file=stdout)
    else:
        for outcome in outcomes:
            for line in outcome.lines():
                print(line, file=stdout)
        print(f"result: {'PASS' if all_passed else 'FAIL'}", file=stdout)
    if not all_passed:
        raise CorrectnessError("correspondence checks failed")
    return 0


def main(argv: list[str] | None = None, stdout=None, stderr=None) -> int:
    stdout = stdout if stdout is not None else sys.stdout
    stderr = stderr if stderr is not None else sys.stderr
    parser = build_arg_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0
    try:
        config = _config_from_args(args)
        if args.command == "parse":
            return cmd_parse(config, stdout, stderr)
        if args.command == "ground":
            return cmd_ground(config, stdout, stderr)
        if args.command == "episodes":
            return cmd_episodes(config, stdout, stderr)
        if args.command == "translate":
            return cmd_translate(config, stdout, stderr, args.target, args.report)
        if args.command == "solve":
            return cmd_solve(config, stdout, stderr)
        if args.command == "qtable":
            return cmd_qtable(config, stdout, stderr)
        if args.command == "policy":
            return cmd_policy(config, stdout, stderr)
        if args.command == "check":
            return cmd_check(config, stdout, stderr)
        raise AssertionError(f"unhandled command {args.command}")
    except (CapExceededError, NonTightProgramError) as exc:
        print(f"error: {exc}", file=stderr)
        return 3
    except CorrectnessError as exc:
        print(f"error: {exc}", file=stderr)
        return 4
    except (BqkitError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
