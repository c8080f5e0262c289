"""Translation of a ground theory into a ground normal logic program.

The program's answer sets correspond to the theory's episodes: time-indexed
holds/2 atoms carry the state trajectory, occ/2 atoms the chosen actions and
reward/3 atoms the collected rewards.  The real-valued accumulation layer is
kept schematic (see QSchema) and evaluated per answer set by the solver.
"""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass, field
from decimal import Decimal

from .errors import GroundingError
from .program import (
    FuncTerm,
    GroundAtom,
    NormalProgram,
    ProgramRule,
    Provenance,
    QSchema,
    TermArg,
    atom_to_term,
    literal_to_term,
)
from .semantics import WorldState, initial_world_states
from .theory import ActionTheory, Literal, ground_action_atoms, ground_fluent_atoms

# Core rule categories; each corresponds to one clause family of the encoding.
CAT_ACTION_FACT = "action_fact"
CAT_LITERAL_POS = "literal_pos"
CAT_LITERAL_NEG = "literal_neg"
CAT_CONTRARY_FWD = "contrary_fwd"
CAT_CONTRARY_REV = "contrary_rev"
CAT_INITIAL_FACT = "initial_fact"
CAT_INITIAL_CHOICE_POS = "initial_choice_pos"
CAT_INITIAL_CHOICE_NEG = "initial_choice_neg"
CAT_EXEC = "executability"
CAT_EFFECT = "effect"
CAT_REWARD = "reward"
CAT_Q_STEP = "q_step"
CAT_INERTIA = "inertia"
CAT_CONFLICT = "conflict_constraint"
CAT_OCC_CHOICE = "occ_choice"
CAT_OCC_BLOCK = "occ_block"
CAT_GOAL = "goal_probe"

CORE_CATEGORIES = (
    CAT_ACTION_FACT,
    CAT_LITERAL_POS,
    CAT_LITERAL_NEG,
    CAT_CONTRARY_FWD,
    CAT_CONTRARY_REV,
    CAT_INITIAL_FACT,
    CAT_INITIAL_CHOICE_POS,
    CAT_INITIAL_CHOICE_NEG,
    CAT_EXEC,
    CAT_EFFECT,
    CAT_REWARD,
    CAT_Q_STEP,
    CAT_INERTIA,
    CAT_CONFLICT,
    CAT_OCC_CHOICE,
    CAT_OCC_BLOCK,
    CAT_GOAL,
)

# Auxiliary categories beyond the core encoding.
CAT_WORLD_ATOM = "world_atom"
CAT_STATIC = "static_rule"
CAT_EXEC_ENFORCE = "exec_enforce"
CAT_GOAL_ENFORCE = "goal_enforce"
CAT_STRICT_INITIAL = "strict_initial"
CAT_FACTOR = "factor_fact"


@dataclass(frozen=True)
class TranslateOptions:
    """Switches between the faithful default encoding and the bare one.

    enforce_exec adds `:- occ(A,T), not exec(A,T).` so non-executable actions
    cannot occur as silent no-ops.  include_static re-emits the static laws at
    every time step so successor states stay closed.  reward_with_condition
    restricts a reward rule to the states where its causal law fires.  The
    bare mode switches all three off and so reproduces the no-frills encoding.
    """

    enforce_exec: bool = True
    include_static: bool = True
    reward_with_condition: bool = True
    require_goal: bool = False
    strict_initial: bool = False

    @classmethod
    def bare(cls, **overrides) -> "TranslateOptions":
        base = dict(enforce_exec=False, include_static=False, reward_with_condition=False)
        base.update(overrides)
        return cls(**base)


def _holds(term: TermArg, time: int) -> GroundAtom:
    return GroundAtom("holds", (term, time))


def _holds_all(literals, time: int) -> tuple[GroundAtom, ...]:
    return tuple(_holds(literal_to_term(lit), time) for lit in literals)


def translate(theory: ActionTheory, options: TranslateOptions = TranslateOptions()) -> NormalProgram:
    """Emit the ground program for a ground theory."""
    if not theory.is_ground:
        raise GroundingError("translation requires a ground theory")
    n = theory.horizon
    rules: list[ProgramRule] = []

    def emit(head, positive=(), negative=(), category=CAT_ACTION_FACT, detail=""):
        rules.append(ProgramRule(head, tuple(positive), tuple(negative), Provenance(category, detail)))

    fluent_atoms = ground_fluent_atoms(theory)
    action_atoms = ground_action_atoms(theory)
    action_terms = [atom_to_term(a) for a in action_atoms]

    for term in action_terms:
        emit(GroundAtom("action", (term,)), category=CAT_ACTION_FACT, detail=str(term))

    for fluent in fluent_atoms:
        f = atom_to_term(fluent)
        nf = FuncTerm("neg", (f,))
        atom_fact = GroundAtom("atom", (f,))
        emit(atom_fact, category=CAT_WORLD_ATOM, detail=str(f))
        emit(GroundAtom("literal", (f,)), positive=[atom_fact], category=CAT_LITERAL_POS)
        emit(GroundAtom("literal", (nf,)), positive=[atom_fact], category=CAT_LITERAL_NEG)
        emit(GroundAtom("contrary", (f, nf)), positive=[atom_fact], category=CAT_CONTRARY_FWD)
        emit(GroundAtom("contrary", (nf, f)), positive=[atom_fact], category=CAT_CONTRARY_REV)

    completions = initial_world_states(theory)
    shared = frozenset.intersection(*(s.literals for s in completions))
    contested_atoms = sorted(
        {lit.atom for s in completions for lit in s.literals if lit not in shared},
        key=lambda a: a.sort_key(),
    )
    for lit in sorted(shared, key=Literal.sort_key):
        emit(_holds(literal_to_term(lit), 0), category=CAT_INITIAL_FACT, detail=str(lit))
    for atom in contested_atoms:
        t_pos = literal_to_term(Literal(atom, True))
        t_neg = literal_to_term(Literal(atom, False))
        emit(_holds(t_pos, 0), negative=[_holds(t_neg, 0)], category=CAT_INITIAL_CHOICE_POS, detail=str(atom))
        emit(_holds(t_neg, 0), negative=[_holds(t_pos, 0)], category=CAT_INITIAL_CHOICE_NEG, detail=str(atom))

    discrepancies: list[str] = []
    if options.strict_initial and contested_atoms:
        wanted = set(completions)
        for values in itertools.product((True, False), repeat=len(contested_atoms)):
            chosen = [Literal(a, v) for a, v in zip(contested_atoms, values)]
            candidate = frozenset(shared) | frozenset(chosen)
            if any(lit.complement() in candidate for lit in candidate):
                continue
            state = WorldState(candidate)
            if state in wanted:
                continue
            discrepancies.append(state.text())
            emit(None, positive=_holds_all(chosen, 0), category=CAT_STRICT_INITIAL, detail=state.text())

    for law in sorted(theory.executability_laws, key=lambda l: str(l.action)):
        a = atom_to_term(law.action)
        for t in range(n):
            emit(
                GroundAtom("exec", (a, t)),
                positive=_holds_all(law.condition.sorted(), t),
                category=CAT_EXEC,
                detail=str(law.action),
            )

    schemas: list[QSchema] = []
    for law in sorted(theory.causal_laws, key=lambda l: (str(l.action), tuple(str(x) for x in l.effects.sorted()))):
        a = atom_to_term(law.action)
        condition = law.condition.sorted()
        for t in range(n):
            occ_exec = (GroundAtom("occ", (a, t)), GroundAtom("exec", (a, t)))
            for lit in law.effects.sorted():
                emit(
                    _holds(literal_to_term(lit), t + 1),
                    positive=occ_exec + _holds_all(condition, t),
                    category=CAT_EFFECT,
                    detail=f"{law.action} -> {lit}",
                )
            reward_body = occ_exec + (_holds_all(condition, t) if options.reward_with_condition else ())
            emit(
                GroundAtom("reward", (law.reward, a, t + 1)),
                positive=reward_body,
                category=CAT_REWARD,
                detail=str(law.action),
            )
        schemas.append(
            QSchema(
                action=a,
                reward=law.reward,
                condition=tuple(literal_to_term(l) for l in condition),
                effects=tuple(literal_to_term(l) for l in law.effects.sorted()),
            )
        )

    for fluent in fluent_atoms:
        f = atom_to_term(fluent)
        nf = FuncTerm("neg", (f,))
        for lit_term, contrary_term in ((f, nf), (nf, f)):
            for t in range(n):
                emit(
                    _holds(lit_term, t + 1),
                    positive=[_holds(lit_term, t), GroundAtom("contrary", (lit_term, contrary_term))],
                    negative=[_holds(contrary_term, t + 1)],
                    category=CAT_INERTIA,
                    detail=str(lit_term),
                )
        for t in range(n + 1):
            emit(None, positive=[_holds(f, t), _holds(nf, t)], category=CAT_CONFLICT, detail=str(f))

    for i, term in enumerate(action_terms):
        for t in range(n):
            emit(
                GroundAtom("occ", (term, t)),
                positive=[GroundAtom("action", (term,))],
                negative=[GroundAtom("abocc", (term, t))],
                category=CAT_OCC_CHOICE,
                detail=str(term),
            )
        for j, other in enumerate(action_terms):
            if i == j:
                continue
            for t in range(n):
                emit(
                    GroundAtom("abocc", (term, t)),
                    positive=[
                        GroundAtom("action", (term,)),
                        GroundAtom("action", (other,)),
                        GroundAtom("occ", (other, t)),
                    ],
                    category=CAT_OCC_BLOCK,
                    detail=f"{term} vs {other}",
                )

    if options.enforce_exec:
        for term in action_terms:
            for t in range(n):
                emit(
                    None,
                    positive=[GroundAtom("occ", (term, t))],
                    negative=[GroundAtom("exec", (term, t))],
                    category=CAT_EXEC_ENFORCE,
                    detail=str(term),
                )

    if options.include_static:
        for law in sorted(theory.static_laws, key=lambda l: str(l.head)):
            for t in range(n + 1):
                emit(
                    _holds(literal_to_term(law.head), t),
                    positive=_holds_all(law.condition.sorted(), t),
                    category=CAT_STATIC,
                    detail=str(law.head),
                )

    goal_atom = GroundAtom("goal")
    if theory.goal.literals:
        goal_times = [n] if options.require_goal else list(range(n + 1))
        for t in goal_times:
            emit(goal_atom, positive=_holds_all(theory.goal.sorted(), t), category=CAT_GOAL, detail=f"t={t}")
    elif options.require_goal:
        emit(goal_atom, category=CAT_GOAL, detail="empty goal")
    if options.require_goal:
        emit(None, negative=[goal_atom], category=CAT_GOAL_ENFORCE)

    emit(GroundAtom("factor", (theory.gamma,)), category=CAT_FACTOR)

    return NormalProgram(
        rules=tuple(rules),
        horizon=n,
        gamma=theory.gamma,
        q_schemas=tuple(schemas),
        initial_discrepancies=tuple(discrepancies),
    )


@dataclass
class TranslationReport:
    counts: dict[str, int]
    rule_lines: list[tuple[str, str, str]] = field(default_factory=list)
    initial_discrepancies: tuple[str, ...] = ()

    def to_json_obj(self) -> dict:
        return {
            "counts": dict(sorted(self.counts.items())),
            "rules": [{"category": c, "detail": d, "text": t} for t, c, d in self.rule_lines],
            "initial_discrepancies": list(self.initial_discrepancies),
        }


def translation_report(theory: ActionTheory, program: NormalProgram) -> TranslationReport:
    """Per-category rule counts plus a rule-by-rule provenance listing."""
    counts: Counter[str] = Counter(rule.provenance.category for rule in program.rules)
    counts[CAT_Q_STEP] += len(program.q_schemas)
    lines = [(rule.text(), rule.provenance.category, rule.provenance.detail) for rule in program.rules]
    lines.sort()
    return TranslationReport(
        counts=dict(counts),
        rule_lines=lines,
        initial_discrepancies=program.initial_discrepancies,
    )
