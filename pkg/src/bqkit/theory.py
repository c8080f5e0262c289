"""Data model for action theories: literals, laws, grounding, validation, printing.

A theory describes a deterministic, finite-horizon decision problem:
a set of possible initial states, executability laws, static laws
(indirect effects), causal laws with rewards, an optional goal formula,
a discount factor and an episode horizon.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from decimal import Decimal
from typing import Iterable, Iterator, Mapping

from .errors import GroundingError

Constant = int | str


@dataclass(frozen=True)
class Var:
    """Variable placeholder; its type is inferred from declared signatures."""

    name: str

    def __str__(self) -> str:
        return self.name


Term = Constant | Var

COMPARISON_OPS = ("<", ">", "!=", "=")


def term_text(term: Term) -> str:
    return str(term)


def _term_sort_key(term: Term) -> tuple:
    if isinstance(term, int):
        return (0, term, "")
    return (1, 0, str(term))


@dataclass(frozen=True)
class Atom:
    """A named atom with constant or variable arguments.

    Serves both fluent atoms and action atoms; the two namespaces are kept
    apart by the theory's declarations.
    """

    name: str
    args: tuple[Term, ...] = ()

    def __str__(self) -> str:
        if not self.args:
            return self.name
        return f"{self.name}({','.join(term_text(a) for a in self.args)})"

    @property
    def is_ground(self) -> bool:
        return not any(isinstance(a, Var) for a in self.args)

    def variables(self) -> frozenset[Var]:
        return frozenset(a for a in self.args if isinstance(a, Var))

    def substitute(self, binding: Mapping[Var, Constant]) -> "Atom":
        if self.is_ground:
            return self
        return Atom(self.name, tuple(binding.get(a, a) if isinstance(a, Var) else a for a in self.args))

    def sort_key(self) -> tuple:
        return (self.name, len(self.args), tuple(_term_sort_key(a) for a in self.args))


@dataclass(frozen=True)
class Literal:
    """A fluent atom or its negation."""

    atom: Atom
    positive: bool = True

    def __str__(self) -> str:
        return str(self.atom) if self.positive else f"-{self.atom}"

    def complement(self) -> "Literal":
        return Literal(self.atom, not self.positive)

    @property
    def is_ground(self) -> bool:
        return self.atom.is_ground

    def variables(self) -> frozenset[Var]:
        return self.atom.variables()

    def substitute(self, binding: Mapping[Var, Constant]) -> "Literal":
        return Literal(self.atom.substitute(binding), self.positive)

    def sort_key(self) -> tuple:
        return self.atom.sort_key() + ((0,) if self.positive else (1,))


def pos(name: str, *args: Term) -> Literal:
    return Literal(Atom(name, tuple(args)), True)


def neg(name: str, *args: Term) -> Literal:
    return Literal(Atom(name, tuple(args)), False)


@dataclass(frozen=True)
class ConjunctiveFormula:
    """A set of literals read conjunctively; the empty set denotes true."""

    literals: frozenset[Literal] = frozenset()

    @classmethod
    def of(cls, *literals: Literal) -> "ConjunctiveFormula":
        return cls(frozenset(literals))

    def __iter__(self) -> Iterator[Literal]:
        return iter(self.sorted())

    def __len__(self) -> int:
        return len(self.literals)

    def sorted(self) -> tuple[Literal, ...]:
        return tuple(sorted(self.literals, key=Literal.sort_key))

    @property
    def is_consistent(self) -> bool:
        return not any(lit.complement() in self.literals for lit in self.literals)

    @property
    def is_ground(self) -> bool:
        return all(lit.is_ground for lit in self.literals)

    def variables(self) -> frozenset[Var]:
        out: set[Var] = set()
        for lit in self.literals:
            out |= lit.variables()
        return frozenset(out)

    def substitute(self, binding: Mapping[Var, Constant]) -> "ConjunctiveFormula":
        return ConjunctiveFormula(frozenset(lit.substitute(binding) for lit in self.literals))

    def holds_in(self, literals: frozenset[Literal]) -> bool:
        return self.literals <= literals


@dataclass(frozen=True)
class Comparison:
    """Built-in comparison between two terms, resolved at grounding time."""

    op: str
    lhs: Term
    rhs: Term

    def __str__(self) -> str:
        return f"{term_text(self.lhs)} {self.op} {term_text(self.rhs)}"

    def variables(self) -> frozenset[Var]:
        return frozenset(t for t in (self.lhs, self.rhs) if isinstance(t, Var))

    def evaluate(self, binding: Mapping[Var, Constant]) -> bool:
        lhs = binding[self.lhs] if isinstance(self.lhs, Var) else self.lhs
        rhs = binding[self.rhs] if isinstance(self.rhs, Var) else self.rhs
        if self.op == "=":
            return lhs == rhs
        if self.op == "!=":
            return lhs != rhs
        if not isinstance(lhs, int) or not isinstance(rhs, int):
            raise GroundingError(f"ordered comparison on non-numeric constants: {lhs} {self.op} {rhs}")
        return lhs < rhs if self.op == "<" else lhs > rhs


@dataclass(frozen=True)
class CausalLaw:
    """`action causes effects : reward if condition` plus grounding-time comparisons."""

    action: Atom
    effects: ConjunctiveFormula
    reward: Decimal
    condition: ConjunctiveFormula = ConjunctiveFormula()
    comparisons: frozenset[Comparison] = frozenset()
    pos: tuple[int, int] | None = field(default=None, compare=False)


@dataclass(frozen=True)
class ExecutabilityLaw:
    """`executable action if condition` plus grounding-time comparisons."""

    action: Atom
    condition: ConjunctiveFormula = ConjunctiveFormula()
    comparisons: frozenset[Comparison] = frozenset()
    pos: tuple[int, int] | None = field(default=None, compare=False)


@dataclass(frozen=True)
class StaticLaw:
    """`static head if condition`: head holds in every state containing the condition."""

    head: Literal
    condition: ConjunctiveFormula = ConjunctiveFormula()
    comparisons: frozenset[Comparison] = frozenset()
    pos: tuple[int, int] | None = field(default=None, compare=False)


Law = CausalLaw | ExecutabilityLaw | StaticLaw


@dataclass(frozen=True, eq=True)
class ActionTheory:
    """A full theory; collections compare order-insensitively."""

    domains: dict[str, tuple[Constant, ...]]
    fluent_decls: dict[str, tuple[str, ...]]
    action_decls: dict[str, tuple[str, ...]]
    initial_states: frozenset[ConjunctiveFormula]
    causal_laws: frozenset[CausalLaw]
    executability_laws: frozenset[ExecutabilityLaw]
    static_laws: frozenset[StaticLaw]
    goal: ConjunctiveFormula
    gamma: Decimal
    horizon: int

    @property
    def is_ground(self) -> bool:
        for law in self.laws():
            if _law_variables(law) or law.comparisons:
                return False
        return True

    def laws(self) -> Iterator[Law]:
        yield from self.causal_laws
        yield from self.executability_laws
        yield from self.static_laws

    def with_overrides(self, gamma: Decimal | None = None, horizon: int | None = None) -> "ActionTheory":
        out = self
        if gamma is not None:
            out = replace(out, gamma=gamma)
        if horizon is not None:
            out = replace(out, horizon=horizon)
        return out


def format_decimal(value: Decimal) -> str:
    """Canonical decimal text: no exponent, minimal fraction, always a decimal point."""
    if value == 0:
        return "0.0"
    text = format(value, "f")
    if "." in text:
        text = text.rstrip("0").rstrip(".")
    if "." not in text:
        text += ".0"
    return text


def ground_fluent_atoms(theory: ActionTheory) -> tuple[Atom, ...]:
    """All ground fluent atoms, in canonical order."""
    return _instantiate_decls(theory, theory.fluent_decls)


def ground_action_atoms(theory: ActionTheory) -> tuple[Atom, ...]:
    """All declared ground action atoms, in canonical order."""
    return _instantiate_decls(theory, theory.action_decls)


def _instantiate_decls(theory: ActionTheory, decls: Mapping[str, tuple[str, ...]]) -> tuple[Atom, ...]:
    out = []
    for name in sorted(decls):
        types = decls[name]
        pools = []
        for tname in types:
            if tname not in theory.domains:
                raise GroundingError(f"unknown type name: {tname}")
            pools.append(theory.domains[tname])
        for combo in itertools.product(*pools):
            out.append(Atom(name, combo))
    return tuple(sorted(out, key=Atom.sort_key))


def _law_variables(law: Law) -> frozenset[Var]:
    out: set[Var] = set()
    if isinstance(law, (CausalLaw, ExecutabilityLaw)):
        out |= law.action.variables()
    if isinstance(law, CausalLaw):
        out |= law.effects.variables()
    if isinstance(law, StaticLaw):
        out |= law.head.variables()
    out |= law.condition.variables()
    return frozenset(out)


def _atoms_with_signatures(theory: ActionTheory, law: Law) -> list[tuple[Atom, tuple[str, ...]]]:
    pairs: list[tuple[Atom, tuple[str, ...]]] = []

    def add(atom: Atom, decls: Mapping[str, tuple[str, ...]], kind: str) -> None:
        if atom.name not in decls:
            raise GroundingError(f"undeclared {kind} name: {atom.name}")
        sig = decls[atom.name]
        if len(sig) != len(atom.args):
            raise GroundingError(f"{kind} {atom.name} used with arity {len(atom.args)}, declared {len(sig)}")
        pairs.append((atom, sig))

    if isinstance(law, (CausalLaw, ExecutabilityLaw)):
        add(law.action, theory.action_decls, "action")
    if isinstance(law, CausalLaw):
        for lit in law.effects.literals:
            add(lit.atom, theory.fluent_decls, "fluent")
    if isinstance(law, StaticLaw):
        add(law.head.atom, theory.fluent_decls, "fluent")
    for lit in law.condition.literals:
        add(lit.atom, theory.fluent_decls, "fluent")
    return pairs


def _infer_variable_types(theory: ActionTheory, law: Law) -> dict[Var, str]:
    types: dict[Var, str] = {}
    for atom, sig in _atoms_with_signatures(theory, law):
        for arg, tname in zip(atom.args, sig):
            if not isinstance(arg, Var):
                continue
            seen = types.get(arg)
            if seen is not None and seen != tname:
                raise GroundingError(f"variable {arg.name} used with conflicting types {seen} and {tname}")
            types[arg] = tname
    return types


def _ground_law(theory: ActionTheory, law: Law) -> list[Law]:
    var_types = _infer_variable_types(theory, law)
    comparison_vars: set[Var] = set()
    for comp in law.comparisons:
        comparison_vars |= comp.variables()
    loose = comparison_vars - set(var_types)
    if loose:
        names = ", ".join(sorted(v.name for v in loose))
        raise GroundingError(f"unbounded variable (appears only in a comparison): {names}")
    if not var_types and not law.comparisons:
        return [law]

    names = sorted(var_types, key=lambda v: v.name)
    pools = []
    for var in names:
        domain = theory.domains.get(var_types[var])
        if domain is None:
            raise GroundingError(f"unknown type name: {var_types[var]}")
        if not domain:
            raise GroundingError(f"empty domain: {var_types[var]}")
        pools.append(domain)

    instances: list[Law] = []
    for combo in itertools.product(*pools):
        binding = dict(zip(names, combo))
        if not all(comp.evaluate(binding) for comp in law.comparisons):
            continue
        if isinstance(law, CausalLaw):
            instances.append(
                CausalLaw(
                    law.action.substitute(binding),
                    law.effects.substitute(binding),
                    law.reward,
                    law.condition.substitute(binding),
                    pos=law.pos,
                )
            )
        elif isinstance(law, ExecutabilityLaw):
            instances.append(
                ExecutabilityLaw(law.action.substitute(binding), law.condition.substitute(binding), pos=law.pos)
            )
        else:
            instances.append(
                StaticLaw(law.head.substitute(binding), law.condition.substitute(binding), pos=law.pos)
            )
    return instances


def ground_theory(theory: ActionTheory) -> ActionTheory:
    """Replace every law by all its instances under type-respecting substitutions.

    Comparisons are evaluated during instantiation and instances with false
    comparisons are dropped; the result contains no variables and no
    comparisons. Grounding a ground theory returns an equal theory.
    """
    causal = frozenset(itertools.chain.from_iterable(_ground_law(theory, law) for law in theory.causal_laws))
    executability = frozenset(
        itertools.chain.from_iterable(_ground_law(theory, law) for law in theory.executability_laws)
    )
    static = frozenset(itertools.chain.from_iterable(_ground_law(theory, law) for law in theory.static_laws))
    return replace(theory, causal_laws=causal, executability_laws=executability, static_laws=static)


@dataclass(frozen=True)
class Violation:
    code: str
    message: str

    def __str__(self) -> str:
        return f"{self.code}: {self.message}"


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)
    warnings: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def lines(self) -> list[str]:
        out = [f"error {v}" for v in self.violations]
        out += [f"warning {w}" for w in self.warnings]
        return out


RESERVED_FUNCTOR = "neg"


def validate_theory(theory: ActionTheory) -> ValidationReport:
    """Structural checks on a theory; applies to ground and unground theories alike."""
    report = ValidationReport()
    err = lambda code, msg: report.violations.append(Violation(code, msg))
    warn = lambda code, msg: report.warnings.append(Violation(code, msg))

    if not (Decimal(0) < theory.gamma < Decimal(1)):
        err("discount-out-of-range", f"discount must lie strictly between 0 and 1, got {theory.gamma}")
    if theory.horizon < 1:
        err("horizon-out-of-range", f"horizon must be at least 1, got {theory.horizon}")
    if not theory.initial_states:
        err("no-initial-states", "at least one initial state description is required")
    for formula in sorted(theory.initial_states, key=lambda f: _formula_text(f)):
        if not formula.is_consistent:
            err("inconsistent-initial", f"inconsistent initial description {{ {_formula_text(formula)} }}")
    if not theory.goal.is_consistent:
        warn("inconsistent-goal", "goal formula contains a complementary pair and is unsatisfiable")

    for name in sorted(set(theory.fluent_decls) | set(theory.action_decls)):
        if name == RESERVED_FUNCTOR:
            err("reserved-name", f"'{RESERVED_FUNCTOR}' is reserved for reified negative literals")

    def check_atom(atom: Atom, decls: Mapping[str, tuple[str, ...]], kind: str, where: str) -> None:
        sig = decls.get(atom.name)
        if sig is None:
            err("undeclared-name", f"{kind} {atom.name} in {where} is not declared")
            return
        if len(sig) != len(atom.args):
            err("arity-mismatch", f"{kind} {atom} in {where} declared with arity {len(sig)}")
            return
        for arg, tname in zip(atom.args, sig):
            if isinstance(arg, Var):
                continue
            domain = theory.domains.get(tname)
            if domain is not None and arg not in domain:
                err("constant-outside-domain", f"constant {arg} in {where} does not belong to domain {tname}")

    def check_formula(formula: ConjunctiveFormula, where: str) -> None:
        for lit in formula.sorted():
            check_atom(lit.atom, theory.fluent_decls, "fluent", where)

    for formula in theory.initial_states:
        check_formula(formula, "initial description")
    check_formula(theory.goal, "goal")

    for law in sorted(theory.causal_laws, key=lambda l: str(l.action)):
        where = f"causal law for {law.action}"
        check_atom(law.action, theory.action_decls, "action", where)
        check_formula(law.effects, where)
        check_formula(law.condition, where)
        loose = law.effects.variables() - (law.action.variables() | law.condition.variables())
        if loose:
            names = ", ".join(sorted(v.name for v in loose))
            err("effect-variable-scope", f"{where}: effect variables {names} appear in neither action nor condition")
    for law in sorted(theory.executability_laws, key=lambda l: str(l.action)):
        where = f"executability law for {law.action}"
        check_atom(law.action, theory.action_decls, "action", where)
        check_formula(law.condition, where)
        comp_vars: set[Var] = set()
        for comp in law.comparisons:
            comp_vars |= comp.variables()
        loose = law.action.variables() - (law.condition.variables() | comp_vars)
        if loose:
            names = ", ".join(sorted(v.name for v in loose))
            err("action-variable-scope", f"{where}: action variables {names} do not appear in the condition")
    for law in sorted(theory.static_laws, key=lambda l: str(l.head)):
        where = f"static law for {law.head}"
        check_atom(law.head.atom, theory.fluent_decls, "fluent", where)
        check_formula(law.condition, where)

    covered = {law.action for law in theory.executability_laws}
    covered_names = {a.name for a in covered}
    for law in sorted(theory.causal_laws, key=lambda l: str(l.action)):
        hit = law.action in covered if law.action.is_ground and theory.is_ground else law.action.name in covered_names
        if not hit:
            warn("no-executability-law", f"action {law.action} has causal laws but no executability law")

    return report


def _formula_text(formula: ConjunctiveFormula, comparisons: Iterable[Comparison] = ()) -> str:
    parts = [str(lit) for lit in formula.sorted()]
    parts += sorted(str(c) for c in comparisons)
    return ", ".join(parts)


def _braced(formula: ConjunctiveFormula) -> str:
    if not formula.literals:
        return "{}"
    return "{ " + _formula_text(formula) + " }"


def _condition_text(formula: ConjunctiveFormula, comparisons: Iterable[Comparison]) -> str:
    text = _formula_text(formula, comparisons)
    return text if text else "{}"


def _law_text(law: Law) -> str:
    if isinstance(law, CausalLaw):
        effects = _formula_text(law.effects) if law.effects.literals else "{}"
        return (
            f"{law.action} causes {effects} : {format_decimal(law.reward)}"
            f" if {_condition_text(law.condition, law.comparisons)}."
        )
    if isinstance(law, ExecutabilityLaw):
        return f"executable {law.action} if {_condition_text(law.condition, law.comparisons)}."
    return f"static {law.head} if {_condition_text(law.condition, law.comparisons)}."


_LAW_KIND_ORDER = {CausalLaw: "causal", ExecutabilityLaw: "executable", StaticLaw: "static"}


def pretty_print(theory: ActionTheory) -> str:
    """Canonical text form; parsing it yields an equal theory."""
    lines: list[str] = []
    for name in sorted(theory.domains):
        values = ", ".join(term_text(v) for v in theory.domains[name])
        lines.append(f"domain {name} = {{{values}}}.")
    for name in sorted(theory.fluent_decls):
        types = theory.fluent_decls[name]
        lines.append(f"fluent {name}({','.join(types)})." if types else f"fluent {name}.")
    for name in sorted(theory.action_decls):
        types = theory.action_decls[name]
        lines.append(f"action {name}({','.join(types)})." if types else f"action {name}.")

    laws = sorted(theory.laws(), key=lambda l: (_LAW_KIND_ORDER[type(l)], _law_text(l)))
    lines += [_law_text(law) for law in laws]

    descriptions = sorted((_braced(f) for f in theory.initial_states))
    lines.append("initially " + " | ".join(descriptions) + ".")
    if theory.goal.literals:
        lines.append(f"goal {_braced(theory.goal)}.")
    lines.append(f"horizon {theory.horizon}.")
    lines.append(f"discount {format_decimal(theory.gamma)}.")
    return "\n".join(lines) + "\n"
