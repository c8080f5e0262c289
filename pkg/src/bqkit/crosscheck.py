"""Cross-checks between independent computation routes.

Three checks, each comparing two routes that share no code path beyond the
theory itself: episode enumeration against answer-set traces, direct value
estimation against the per-answer-set value fold, and naive against SAT-path
answer-set enumeration.  A failing check carries printable counterexamples.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from decimal import Decimal

from .errors import MalformedTraceError
from .program import NormalProgram
from .qvalues import QLEARNING, SARSA, canonical_episodes, q_direct
from .semantics import Episode, enumerate_episodes
from .solver import (
    DEFAULT_MODEL_CAP,
    DEFAULT_NAIVE_ATOM_CAP,
    DEFAULT_SCALE,
    AnswerSet,
    enumerate_answer_sets,
    extract_episode,
    is_answer_set,
)
from .theory import ActionTheory
from .translate import TranslateOptions, translate

Q_TOLERANCE = 1e-9


@dataclass
class CheckOutcome:
    name: str
    passed: bool
    details: dict[str, object] = field(default_factory=dict)
    counterexamples: list[str] = field(default_factory=list)
    note: str = ""

    def lines(self) -> list[str]:
        status = "PASS" if self.passed else "FAIL"
        detail = ", ".join(f"{k}={v}" for k, v in sorted(self.details.items()))
        out = [f"check {self.name}: {status}" + (f" ({detail})" if detail else "")]
        if self.note:
            out.append(f"  note: {self.note}")
        for example in self.counterexamples:
            out.append(f"  counterexample: {example}")
        return out

    def to_json_obj(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "details": {k: v for k, v in sorted(self.details.items())},
            "counterexamples": list(self.counterexamples),
            "note": self.note,
        }


def _trace_text(trace: tuple[tuple[str, float], ...]) -> str:
    return " ".join(f"{action}:{reward!r}" for action, reward in trace) or "(empty)"


def check_episode_correspondence(
    theory: ActionTheory,
    options: TranslateOptions = TranslateOptions(),
    method: str = "auto",
    max_counterexamples: int = 5,
    max_models: int = DEFAULT_MODEL_CAP,
) -> CheckOutcome:
    """Episodes and answer sets must induce the same multiset of action/reward traces.

    Also re-derives an episode from every answer set and requires it to be a
    member of the enumerated episode set.
    """
    episodes = enumerate_episodes(theory, require_goal=options.require_goal)
    program = translate(theory, options)
    answer_sets = enumerate_answer_sets(program, method=method, max_models=max_models)
    episode_traces = Counter(e.trace() for e in episodes)
    answer_traces = Counter(a.trace_pairs() for a in answer_sets)
    counterexamples: list[str] = []

    only_episodes = episode_traces - answer_traces
    only_answers = answer_traces - episode_traces
    for trace, count in sorted(only_episodes.items()):
        counterexamples.append(f"episode trace without matching answer set (x{count}): {_trace_text(trace)}")
    for trace, count in sorted(only_answers.items()):
        counterexamples.append(f"answer-set trace without matching episode (x{count}): {_trace_text(trace)}")

    episode_set = set(episodes)
    for answer_set in answer_sets:
        try:
            episode = extract_episode(answer_set, theory)
        except MalformedTraceError as exc:
            counterexamples.append(f"answer set with unreconstructable episode: {exc}")
            continue
        if episode not in episode_set:
            counterexamples.append(
                f"reconstructed sequence is not an episode: {_trace_text(episode.trace())}"
            )
    del counterexamples[max_counterexamples:]
    passed = episode_traces == answer_traces and not counterexamples
    return CheckOutcome(
        name="episodes-vs-answer-sets",
        passed=passed,
        details={"episodes": len(episodes), "answer_sets": len(answer_sets)},
        counterexamples=counterexamples,
    )


def _initial_pair_key(theory: ActionTheory, answer_set: AnswerSet) -> tuple[str, str] | None:
    if not answer_set.trace:
        return None
    episode = extract_episode(answer_set, theory)
    return (episode.states[0].text(), str(episode.actions[0]))


def check_q_agreement(
    theory: ActionTheory,
    options: TranslateOptions = TranslateOptions(),
    method: str = "auto",
    tolerance: float | None = None,
    scale: Decimal = DEFAULT_SCALE,
    max_counterexamples: int = 5,
) -> CheckOutcome:
    """Initial-pair values from the answer-set fold must match the direct estimates.

    Off-policy: the maximum final value atom over the answer sets of each
    initial pair equals the direct maximum discounted tail.  On-policy: each
    answer set's final value equals its matched episode's discounted return.
    """
    if tolerance is None:
        tolerance = theory.horizon * float(scale) + Q_TOLERANCE
    episodes = enumerate_episodes(theory, require_goal=options.require_goal)
    program = translate(theory, options)
    answer_sets = enumerate_answer_sets(program, method=method, scale=scale)
    counterexamples: list[str] = []
    max_delta = 0.0
    if episodes:
        direct_q = q_direct(episodes, float(theory.gamma), QLEARNING)
        direct_initial = {
            (key.state.text(), str(key.action)): value
            for key, value in direct_q.initial_entries().items()
        }
        pipeline_max: dict[tuple[str, str], float] = {}
        stray: list[AnswerSet] = []
        for answer_set in answer_sets:
            try:
                pair = _initial_pair_key(theory, answer_set)
            except MalformedTraceError as exc:
                stray.append(answer_set)
                counterexamples.append(f"answer set without a well-formed episode: {exc}")
                continue
            final = answer_set.final_q()
            if pair is None or final is None:
                continue
            value = final[2]
            if pair not in pipeline_max or value > pipeline_max[pair]:
                pipeline_max[pair] = value
        if set(pipeline_max) != set(direct_initial):
            missing = sorted(set(direct_initial) ^ set(pipeline_max))
            counterexamples.append(f"initial-pair key mismatch: {missing[:3]}")
        for pair in sorted(set(pipeline_max) & set(direct_initial)):
            delta = abs(pipeline_max[pair] - direct_initial[pair])
            max_delta = max(max_delta, delta)
            if delta > tolerance:
                counterexamples.append(
                    f"off-policy value mismatch at {pair}: fold={pipeline_max[pair]!r} direct={direct_initial[pair]!r}"
                )

        # On-policy: per answer set, the final value equals the matched episode's return.
        sarsa = q_direct(episodes, float(theory.gamma), SARSA)
        ordered = canonical_episodes(episodes)
        returns = {e: sarsa.episode_values[_episode_initial_key(e)][i] for i, e in enumerate(ordered)}
        for answer_set in answer_sets:
            final = answer_set.final_q()
            if final is None or answer_set in stray:
                continue
            episode = extract_episode(answer_set, theory)
            expected = returns.get(episode)
            if expected is None:
                counterexamples.append(
                    f"answer-set sequence is not an enumerated episode: {_trace_text(episode.trace())}"
                )
                continue
            delta = abs(final[2] - expected)
            max_delta = max(max_delta, delta)
            if delta > tolerance:
                counterexamples.append(
                    f"on-policy value mismatch for trace {_trace_text(episode.trace())}: "
                    f"fold={final[2]!r} direct={expected!r}"
                )
    del counterexamples[max_counterexamples:]
    return CheckOutcome(
        name="q-agreement",
        passed=not counterexamples,
        details={"episodes": len(episodes), "max_delta": f"{max_delta:.3e}", "tolerance": f"{tolerance:.3e}"},
        counterexamples=counterexamples,
    )


def _episode_initial_key(episode: Episode):
    from .qvalues import QKey

    return QKey(episode.states[0], episode.actions[0], 0)


def check_solver_agreement(
    program: NormalProgram,
    max_naive_atoms: int = DEFAULT_NAIVE_ATOM_CAP,
    max_models: int = DEFAULT_MODEL_CAP,
    max_counterexamples: int = 5,
) -> CheckOutcome:
    """Naive and SAT enumeration must agree; past the naive cap, fall back to self-checks.

    Large programs cannot be brute-forced, so there the SAT-path sets are each
    re-verified with the reduct test instead of a full two-route comparison.
    """
    num_atoms = program.index().num_atoms
    sat_sets = enumerate_answer_sets(program, method="sat", max_models=max_models)
    if num_atoms > max_naive_atoms:
        stable = all(is_answer_set(program, a.atoms) for a in sat_sets)
        return CheckOutcome(
            name="naive-vs-sat",
            passed=stable,
            details={"answer_sets": len(sat_sets), "atoms": num_atoms},
            note=f"{num_atoms} atoms exceed the naive cap {max_naive_atoms}; "
            "SAT-path sets verified with the reduct test only",
        )
    naive_sets = enumerate_answer_sets(program, method="naive", max_naive_atoms=max_naive_atoms, max_models=max_models)
    naive_atoms = {a.atoms for a in naive_sets}
    sat_atoms = {a.atoms for a in sat_sets}
    counterexamples = []
    for atoms in sorted(naive_atoms - sat_atoms, key=lambda s: sorted(map(str, s))):
        counterexamples.append("naive-only answer set: {" + ", ".join(sorted(map(str, atoms))) + "}")
    for atoms in sorted(sat_atoms - naive_atoms, key=lambda s: sorted(map(str, s))):
        counterexamples.append("SAT-only model: {" + ", ".join(sorted(map(str, atoms))) + "}")
    del counterexamples[max_counterexamples:]
    return CheckOutcome(
        name="naive-vs-sat",
        passed=naive_atoms == sat_atoms and len(naive_sets) == len(sat_sets),
        details={"naive": len(naive_sets), "sat": len(sat_sets), "atoms": num_atoms},
        counterexamples=counterexamples,
    )


def run_checks(
    theory: ActionTheory,
    options: TranslateOptions = TranslateOptions(),
    method: str = "auto",
    max_naive_atoms: int = DEFAULT_NAIVE_ATOM_CAP,
    max_models: int = DEFAULT_MODEL_CAP,
    scale: Decimal = DEFAULT_SCALE,
) -> list[CheckOutcome]:
    program = translate(theory, options)
    return [
        check_episode_correspondence(theory, options, method=method, max_models=max_models),
        check_q_agreement(theory, options, method=method, scale=scale),
        check_solver_agreement(program, max_naive_atoms=max_naive_atoms, max_models=max_models),
    ]
