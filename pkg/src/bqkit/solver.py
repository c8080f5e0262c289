"""Answer-set solving for ground normal programs, plus the value layer.

Two enumeration paths are provided and must agree: a naive path that tests
candidate interpretations with the reduct definition, and a SAT path that
enumerates completion models, checks each for stability, and refines the CNF
with loop clauses when an unfounded positive cycle is detected.  Answer sets
of translated theories additionally carry an action/reward trace and the
fixed-point value accumulation per step.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from decimal import Decimal
from fractions import Fraction

from .errors import CapExceededError, MalformedTraceError, StateError
from .program import (
    FuncTerm,
    GroundAtom,
    NormalProgram,
    ProgramIndex,
    ProgramRule,
    Provenance,
    TermArg,
    term_arg_text,
    term_to_atom,
    term_to_literal,
)
from .sat import CnfFormula, SatSolver, clark_completion
from .semantics import Episode, WorldState, make_state
from .theory import ActionTheory, Literal, ground_fluent_atoms

DEFAULT_NAIVE_ATOM_CAP = 22
DEFAULT_MODEL_CAP = 100_000
DEFAULT_SCALE = Decimal("0.000001")


# -- stable-model core -------------------------------------------------------


def reduct(program: NormalProgram, candidate) -> NormalProgram:
    """Positive program: drop rules whose negative body meets the candidate, strip the rest."""
    candidate = frozenset(candidate)
    kept = [
        ProgramRule(rule.head, rule.positive, (), provenance=rule.provenance)
        for rule in program.rules
        if not (set(rule.negative) & candidate)
    ]
    return NormalProgram(tuple(kept), horizon=program.horizon, gamma=program.gamma)


def _least_model_ids(index: ProgramIndex, candidate_ids: frozenset[int]) -> frozenset[int]:
    """Least model of the reduct w.r.t. the candidate, over defining rules only."""
    remaining: dict[int, int] = {}
    derived: set[int] = set()
    queue: list[int] = []

    def derive(atom_id: int) -> None:
        if atom_id not in derived:
            derived.add(atom_id)
            queue.append(atom_id)

    active: set[int] = set()
    for ri, (head, positive, negative) in enumerate(index.rules):
        if head is None or any(b in candidate_ids for b in negative):
            continue
        active.add(ri)
        remaining[ri] = len(positive)
        if not positive:
            derive(head)
    while queue:
        atom_id = queue.pop()
        for ri in index.pos_occurrences.get(atom_id, ()):
            if ri not in active:
                continue
            remaining[ri] -= 1
            if remaining[ri] == 0:
                derive(index.rules[ri][0])
    return frozenset(derived)


def _violates_constraint(index: ProgramIndex, candidate_ids: frozenset[int]) -> bool:
    for head, positive, negative in index.rules:
        if head is None and all(b in candidate_ids for b in positive) and not (set(negative) & candidate_ids):
            return True
    return False


def least_model(program: NormalProgram) -> frozenset[GroundAtom]:
    """Least model of a positive program (negative bodies must be empty)."""
    if any(rule.negative for rule in program.rules):
        raise ValueError("least_model is defined for positive programs only")
    index = program.index()
    return index.atoms_of(_least_model_ids(index, frozenset()))


def is_answer_set(program: NormalProgram, candidate) -> bool:
    """True iff the candidate equals the least model of its reduct and violates no constraint."""
    index = program.index()
    candidate_ids = index.ids_of(candidate)
    if _violates_constraint(index, candidate_ids):
        return False
    return _least_model_ids(index, candidate_ids) == candidate_ids


# -- tightness and loop clauses ----------------------------------------------


@dataclass(frozen=True)
class TightnessResult:
    is_tight: bool
    cycle: tuple[GroundAtom, ...] = ()

    def __bool__(self) -> bool:
        return self.is_tight


def _positive_dependencies(index: ProgramIndex) -> dict[int, set[int]]:
    graph: dict[int, set[int]] = {}
    for head, positive, _negative in index.rules:
        if head is None:
            continue
        graph.setdefault(head, set()).update(positive)
    return graph


def tightness_check(program: NormalProgram) -> TightnessResult:
    """Acyclicity of the head -> positive-body dependency graph, with a cycle witness."""
    index = program.index()
    graph = _positive_dependencies(index)
    color: dict[int, int] = {}
    stack_path: list[int] = []

    def visit(node: int) -> tuple[int, ...] | None:
        color[node] = 1
        stack_path.append(node)
        for succ in sorted(graph.get(node, ())):
            state = color.get(succ, 0)
            if state == 1:
                cycle = stack_path[stack_path.index(succ) :]
                return tuple(cycle)
            if state == 0:
                found = visit(succ)
                if found is not None:
                    return found
        stack_path.pop()
        color[node] = 2
        return None

    for node in sorted(graph):
        if color.get(node, 0) == 0:
            cycle = visit(node)
            if cycle is not None:
                return TightnessResult(False, tuple(index.atoms[a - 1] for a in cycle))
    return TightnessResult(True)


def _sccs(nodes: set[int], graph: dict[int, set[int]]) -> list[list[int]]:
    """Tarjan's algorithm restricted to `nodes`, iterative, deterministic order."""
    index_of: dict[int, int] = {}
    low: dict[int, int] = {}
    on_stack: set[int] = set()
    stack: list[int] = []
    result: list[list[int]] = []
    counter = itertools.count()

    for root in sorted(nodes):
        if root in index_of:
            continue
        work = [(root, iter(sorted(graph.get(root, ()) & nodes)))]
        index_of[root] = low[root] = next(counter)
        stack.append(root)
        on_stack.add(root)
        while work:
            node, successors = work[-1]
            advanced = False
            for succ in successors:
                if succ not in index_of:
                    index_of[succ] = low[succ] = next(counter)
                    stack.append(succ)
                    on_stack.add(succ)
                    work.append((succ, iter(sorted(graph.get(succ, ()) & nodes))))
                    advanced = True
                    break
                if succ in on_stack:
                    low[node] = min(low[node], index_of[succ])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[node])
            if low[node] == index_of[node]:
                component = []
                while True:
                    member = stack.pop()
                    on_stack.discard(member)
                    component.append(member)
                    if member == node:
                        break
                result.append(sorted(component))
    return result


def loop_formulas(program: NormalProgram, cnf: CnfFormula, model: list[int]) -> list[tuple[int, ...]] | None:
    """Stability gate for one completion model.

    Returns None when the model is an answer set.  Otherwise returns clauses
    that eliminate it: the loop formula of a violated unfounded cycle when one
    is found, or a blocking clause over the program atoms as a safe fallback.
    """
    index = program.index()
    true_ids = frozenset(var for atom, var in cnf.atom_vars.items() if model[var] > 0)
    lm = _least_model_ids(index, true_ids)
    if not _violates_constraint(index, true_ids) and lm == true_ids:
        return None
    unfounded = set(true_ids - lm)
    graph = _positive_dependencies(index)
    for component in _sccs(unfounded, graph):
        members = set(component)
        cyclic = len(component) > 1 or component[0] in graph.get(component[0], ())
        if not cyclic:
            continue
        supports: list[int] = []
        supported = False
        for atom_id in component:
            for ri in index.head_rules.get(atom_id, ()):
                _head, positive, _negative = index.rules[ri]
                if set(positive) & members:
                    continue  # internal rule, no external support
                rep = cnf.body_reps[ri]
                if rep is None:
                    supported = True  # a fact supports the loop
                    break
                supports.append(rep)
                if model[abs(rep)] * (1 if rep > 0 else -1) > 0:
                    supported = True
                    break
            if supported:
                break
        if supported:
            continue
        ordered = sorted(dict.fromkeys(supports))
        return [tuple([-atom_id] + ordered) for atom_id in component]
    blocking = tuple(-var if model[var] > 0 else var for _atom, var in sorted(cnf.atom_vars.items(), key=lambda kv: kv[1]))
    return [blocking]


# -- enumeration --------------------------------------------------------------


def _definite_consequences(index: ProgramIndex) -> frozenset[int]:
    """Atoms derived by negation-free rules alone; contained in every answer set."""
    remaining = {}
    derived: set[int] = set()
    queue: list[int] = []
    active = set()
    for ri, (head, positive, negative) in enumerate(index.rules):
        if head is None or negative:
            continue
        active.add(ri)
        remaining[ri] = len(positive)
        if not positive:
            if head not in derived:
                derived.add(head)
                queue.append(head)
    while queue:
        atom_id = queue.pop()
        for ri in index.pos_occurrences.get(atom_id, ()):
            if ri not in active:
                continue
            remaining[ri] -= 1
            if remaining[ri] == 0:
                head = index.rules[ri][0]
                if head not in derived:
                    derived.add(head)
                    queue.append(head)
    return frozenset(derived)


def _enumerate_naive(
    program: NormalProgram, max_atoms: int, max_models: int
) -> list[frozenset[GroundAtom]]:
    index = program.index()
    if index.num_atoms > max_atoms:
        raise CapExceededError(
            f"herbrand base has {index.num_atoms} atoms, exceeding the naive-path cap {max_atoms}"
        )
    forced = _definite_consequences(index)
    head_atoms = sorted(index.head_rules)
    free = [a for a in head_atoms if a not in forced]
    results: list[frozenset[GroundAtom]] = []
    for values in itertools.product((False, True), repeat=len(free)):
        candidate = frozenset(forced) | frozenset(a for a, keep in zip(free, values) if keep)
        if _violates_constraint(index, candidate):
            continue
        if _least_model_ids(index, candidate) == candidate:
            results.append(index.atoms_of(candidate))
            if len(results) > max_models:
                raise CapExceededError(f"more than {max_models} answer sets")
    return results


def _enumerate_sat(program: NormalProgram, max_models: int) -> list[frozenset[GroundAtom]]:
    index = program.index()
    cnf = clark_completion(program)
    tight = tightness_check(program).is_tight
    solver = SatSolver(cnf.num_vars, cnf.clauses)
    atom_var_order = sorted(cnf.atom_vars.items(), key=lambda kv: kv[1])
    results: list[frozenset[GroundAtom]] = []
    while True:
        model = solver.solve()
        if model is None:
            return results
        if tight:
            extra = None
        else:
            extra = loop_formulas(program, cnf, model)
        if extra is None:
            atoms = frozenset(atom for atom, var in cnf.atom_vars.items() if model[var] > 0)
            if not is_answer_set(program, atoms):  # reduct self-check
                raise AssertionError("completion model failed the stability self-check")
            results.append(atoms)
            if len(results) > max_models:
                raise CapExceededError(f"more than {max_models} answer sets")
            solver.add_clause(tuple(-var if model[var] > 0 else var for _a, var in atom_var_order))
        else:
            for clause in extra:
                solver.add_clause(clause)


# -- answer sets with traces and values ---------------------------------------


@dataclass(frozen=True)
class TraceStep:
    time: int
    action: str
    reward: Decimal | None

    def reward_value(self) -> float:
        return 0.0 if self.reward is None else float(self.reward)


@dataclass
class AnswerSet:
    atoms: frozenset[GroundAtom]
    trace: tuple[TraceStep, ...] = ()
    q_values: dict[tuple[str, int], int] = field(default_factory=dict)
    scale: Decimal = DEFAULT_SCALE
    notes: tuple[str, ...] = ()

    def sorted_atoms(self) -> tuple[GroundAtom, ...]:
        return tuple(sorted(self.atoms, key=GroundAtom.sort_key))

    def sort_key(self) -> tuple:
        return tuple(str(a) for a in self.sorted_atoms())

    def trace_pairs(self) -> tuple[tuple[str, float], ...]:
        return tuple((step.action, step.reward_value()) for step in self.trace)

    def q_float(self, action: str, time: int) -> float:
        return self.q_values[(action, time)] * float(self.scale)

    def final_q(self) -> tuple[str, int, float] | None:
        if not self.trace:
            return None
        last = self.trace[-1]
        return (last.action, last.time + 1, self.q_float(last.action, last.time + 1))

    def q_atoms(self) -> tuple[GroundAtom, ...]:
        out = []
        for (action, time), scaled in sorted(self.q_values.items(), key=lambda kv: (kv[0][1], kv[0][0])):
            value = Decimal(scaled) * self.scale
            out.append(GroundAtom("q", (value, action, time)))
        return tuple(out)

    def to_json_obj(self) -> dict:
        return {
            "atoms": [str(a) for a in self.sorted_atoms()],
            "trace": [
                {"time": s.time, "action": s.action, "reward": None if s.reward is None else float(s.reward)}
                for s in self.trace
            ],
            "q_values": [
                {"action": action, "time": time, "scaled": scaled, "value": self.q_float(action, time)}
                for (action, time), scaled in sorted(self.q_values.items(), key=lambda kv: (kv[0][1], kv[0][0]))
            ],
            "notes": list(self.notes),
        }


def extract_trace(atoms: frozenset[GroundAtom], horizon: int) -> tuple[TraceStep, ...]:
    """Read the occ/reward atoms into one step per time point; fail on malformed shapes."""
    occ: dict[int, list[str]] = {}
    rewards: dict[int, list[tuple[Decimal, str]]] = {}
    for atom in sorted(atoms, key=GroundAtom.sort_key):
        if atom.predicate == "occ" and len(atom.args) == 2 and isinstance(atom.args[1], int):
            occ.setdefault(atom.args[1], []).append(term_arg_text(atom.args[0]))
        elif atom.predicate == "reward" and len(atom.args) == 3 and isinstance(atom.args[2], int):
            value = atom.args[0]
            if not isinstance(value, Decimal):
                value = Decimal(value) if isinstance(value, int) else None
            if value is None:
                raise MalformedTraceError(f"non-numeric reward term in {atom}")
            rewards.setdefault(atom.args[2], []).append((value, term_arg_text(atom.args[1])))
    steps = []
    for t in range(horizon):
        actions = occ.get(t, [])
        if len(actions) != 1:
            raise MalformedTraceError(f"expected exactly one action occurrence at time {t}, found {len(actions)}")
        action = actions[0]
        given = rewards.get(t + 1, [])
        for _value, for_action in given:
            if for_action != action:
                raise MalformedTraceError(f"reward for {for_action} at time {t + 1} but {action} occurred")
        values = sorted({value for value, _a in given})
        if len(values) > 1:
            raise MalformedTraceError(f"multiple distinct rewards at time {t + 1}: {[str(v) for v in values]}")
        steps.append(TraceStep(t, action, values[0] if values else None))
    return tuple(steps)


def evaluate_q_layer(
    program: NormalProgram,
    atoms: frozenset[GroundAtom],
    gamma: Decimal | None = None,
    scale: Decimal = DEFAULT_SCALE,
) -> tuple[dict[tuple[str, int], int], tuple[str, ...]]:
    """Fold the trace rewards into fixed-point value atoms.

    Seeds every action with value 0 at time 0, then accumulates
    round(r * gamma^t / scale) per step in scaled integers.  A step whose
    action occurred and was executable but produced no reward atom is
    reported and treated as reward 0.
    """
    gamma = program.gamma if gamma is None else gamma
    if gamma is None:
        return {}, ()
    gamma_exact = Fraction(gamma)
    scale_exact = Fraction(scale)
    trace = extract_trace(atoms, program.horizon)
    exec_atoms = {(term_arg_text(a.args[0]), a.args[1]) for a in atoms if a.predicate == "exec" and len(a.args) == 2}

    q_values: dict[tuple[str, int], int] = {}
    for rule in program.rules:
        if rule.head is not None and rule.head.predicate == "action" and rule.is_fact:
            q_values[(term_arg_text(rule.head.args[0]), 0)] = 0
    notes: list[str] = []
    accumulated = 0
    power = Fraction(1)
    for step in trace:
        if step.reward is None:
            if (step.action, step.time) in exec_atoms:
                notes.append(f"no reward atom for executable {step.action} at time {step.time + 1}; using 0")
            contribution = Fraction(0)
        else:
            contribution = Fraction(step.reward) * power
        accumulated += round(contribution / scale_exact)
        q_values[(step.action, step.time + 1)] = accumulated
        power *= gamma_exact
    return q_values, tuple(notes)


def enumerate_answer_sets(
    program: NormalProgram,
    method: str = "auto",
    max_naive_atoms: int = DEFAULT_NAIVE_ATOM_CAP,
    max_models: int = DEFAULT_MODEL_CAP,
    scale: Decimal = DEFAULT_SCALE,
) -> tuple[AnswerSet, ...]:
    """Complete, duplicate-free answer sets with traces and value layers.

    `method` is "naive", "sat", or "auto" (naive when the Herbrand base fits
    under the naive cap).  Both paths produce identical collections.
    """
    index = program.index()
    if method == "auto":
        method = "naive" if index.num_atoms <= max_naive_atoms else "sat"
    if method == "naive":
        raw = _enumerate_naive(program, max_naive_atoms, max_models)
    elif method == "sat":
        raw = _enumerate_sat(program, max_models)
    else:
        raise ValueError(f"unknown method {method!r}")
    answer_sets = []
    for atoms in raw:
        q_values, notes = evaluate_q_layer(program, atoms, scale=scale)
        trace = extract_trace(atoms, program.horizon)
        answer_sets.append(AnswerSet(atoms=atoms, trace=trace, q_values=q_values, scale=scale, notes=notes))
    return tuple(sorted(answer_sets, key=AnswerSet.sort_key))


def extract_episode(answer_set: AnswerSet | frozenset[GroundAtom], theory: ActionTheory) -> Episode:
    """Rebuild the episode encoded by an answer set of the theory's translation.

    States come from the holds/2 atoms per time point and must satisfy the
    world-state invariants; actions and rewards come from the trace.
    """
    atoms = answer_set.atoms if isinstance(answer_set, AnswerSet) else answer_set
    n = theory.horizon
    universe = set(ground_fluent_atoms(theory))
    per_time: dict[int, set[Literal]] = {t: set() for t in range(n + 1)}
    for atom in atoms:
        if atom.predicate != "holds" or len(atom.args) != 2 or not isinstance(atom.args[1], int):
            continue
        time = atom.args[1]
        if time not in per_time:
            raise MalformedTraceError(f"holds atom outside the horizon: {atom}")
        literal = term_to_literal(atom.args[0])
        if literal.atom not in universe:
            raise MalformedTraceError(f"holds atom over unknown fluent: {atom}")
        per_time[time].add(literal)
    try:
        states = tuple(make_state(theory, per_time[t]) for t in range(n + 1))
    except StateError as exc:
        raise MalformedTraceError(f"state reconstruction failed: {exc}") from exc
    trace = extract_trace(atoms, n) if not isinstance(answer_set, AnswerSet) else answer_set.trace
    actions = tuple(term_to_atom(_parse_action_term(step.action)) for step in trace)
    rewards = tuple(step.reward_value() for step in trace)
    return Episode(states, actions, rewards)


def _parse_action_term(text: str) -> TermArg:
    from .program import parse_program_text  # local import to reuse the term grammar

    program = parse_program_text(f"probe({text}).")
    return program.rules[0].head.args[0]


def answer_sets_to_jsonl(answer_sets) -> str:
    import json

    lines = [json.dumps(a.to_json_obj(), separators=(", ", ": ")) for a in answer_sets]
    return "\n".join(lines) + ("\n" if lines else "")
