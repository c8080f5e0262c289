"""Ground normal logic programs: atoms, rules, text form, and indexing.

Rules have the shape `head :- b1, ..., bk, not c1, ..., not cm.`; a missing
head makes the rule a constraint.  Negative fluent literals are reified as
`neg(...)` terms so that `holds/2` stays first order.  The text form is the
".lp" interchange format: deterministic, reparseable, facts first, then
rules ordered by time step and predicate.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from decimal import Decimal
from typing import Iterable, Iterator

from .errors import BqParseError
from .theory import Atom, Constant, Literal, format_decimal

NEG_FUNCTOR = "neg"


@dataclass(frozen=True)
class FuncTerm:
    """A compound term, e.g. up(2) or neg(opened)."""

    name: str
    args: tuple["TermArg", ...] = ()

    def __str__(self) -> str:
        if not self.args:
            return self.name
        return f"{self.name}({','.join(term_arg_text(a) for a in self.args)})"


TermArg = int | str | Decimal | FuncTerm


def term_arg_text(arg: TermArg) -> str:
    if isinstance(arg, Decimal):
        return format_decimal(arg)
    return str(arg)


@dataclass(frozen=True)
class GroundAtom:
    """A predicate applied to ground terms."""

    predicate: str
    args: tuple[TermArg, ...] = ()

    def __str__(self) -> str:
        if not self.args:
            return self.predicate
        return f"{self.predicate}({','.join(term_arg_text(a) for a in self.args)})"

    def sort_key(self) -> tuple:
        return (self.predicate, len(self.args), tuple(term_arg_text(a) for a in self.args))


@dataclass(frozen=True)
class Provenance:
    """Which translation category produced a rule, and from which source law."""

    category: str
    detail: str = ""


UNTAGGED = Provenance("untagged")


@dataclass(frozen=True)
class ProgramRule:
    head: GroundAtom | None
    positive: tuple[GroundAtom, ...] = ()
    negative: tuple[GroundAtom, ...] = ()
    provenance: Provenance = field(default=UNTAGGED, compare=False)

    @property
    def is_fact(self) -> bool:
        return self.head is not None and not self.positive and not self.negative

    @property
    def is_constraint(self) -> bool:
        return self.head is None

    def text(self) -> str:
        body = [str(a) for a in self.positive] + [f"not {a}" for a in self.negative]
        if self.head is None:
            return ":- " + ", ".join(body) + "."
        if not body:
            return f"{self.head}."
        return f"{self.head} :- " + ", ".join(body) + "."

    def atoms(self) -> Iterator[GroundAtom]:
        if self.head is not None:
            yield self.head
        yield from self.positive
        yield from self.negative


# Argument positions carrying a time index, per predicate.
_TIME_ARG = {"holds": 1, "occ": 1, "exec": 1, "abocc": 1, "reward": 2, "q": 2}


def _rule_time(rule: ProgramRule) -> int:
    times = [
        atom.args[index]
        for atom in rule.atoms()
        for index in (_TIME_ARG.get(atom.predicate),)
        if index is not None and len(atom.args) > index and isinstance(atom.args[index], int)
    ]
    return max(times, default=-1)


@dataclass(frozen=True)
class QSchema:
    """Schematic value-accumulation rule attached to one causal law.

    The accumulated value term ranges over the reals, so these rules are not
    grounded; they are evaluated per answer set as a stratified fold."""

    action: TermArg
    reward: Decimal
    condition: tuple[TermArg, ...]
    effects: tuple[TermArg, ...]


@dataclass
class NormalProgram:
    rules: tuple[ProgramRule, ...]
    horizon: int
    gamma: Decimal | None = None
    q_schemas: tuple[QSchema, ...] = ()
    initial_discrepancies: tuple[str, ...] = ()
    _index: "ProgramIndex | None" = field(default=None, compare=False, repr=False)

    def atoms(self) -> tuple[GroundAtom, ...]:
        seen = {atom for rule in self.rules for atom in rule.atoms()}
        return tuple(sorted(seen, key=GroundAtom.sort_key))

    def structural_key(self) -> tuple:
        return tuple(sorted(r.text() for r in self.rules))

    def index(self) -> "ProgramIndex":
        if self._index is None:
            self._index = ProgramIndex(self)
        return self._index


def _sorted_rules(program: NormalProgram) -> list[ProgramRule]:
    def key(rule: ProgramRule) -> tuple:
        head_pred = rule.head.predicate if rule.head is not None else "~constraint"
        return (0 if rule.is_fact else 1, _rule_time(rule), head_pred, rule.text())

    return sorted(program.rules, key=key)


def emit_program_text(program: NormalProgram) -> str:
    """Deterministic ".lp" text: facts first, then rules by time step and predicate."""
    return "\n".join(rule.text() for rule in _sorted_rules(program)) + "\n"


_LP_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>%[^\n]*)
  | (?P<arrow>:-)
  | (?P<decimal>-?\d+\.\d+)
  | (?P<int>-?\d+)
  | (?P<name>[a-zA-Z_][A-Za-z0-9_]*)
  | (?P<sym>[.,()])
    """,
    re.VERBOSE,
)


def _lp_tokens(text: str) -> list[tuple[str, object, int]]:
    tokens = []
    line = 1
    index = 0
    while index < len(text):
        match = _LP_TOKEN_RE.match(text, index)
        if match is None:
            raise BqParseError(f"unexpected character {text[index]!r} in program text", line, 0)
        lexeme = match.group(0)
        kind = match.lastgroup
        if kind == "arrow":
            tokens.append(("ARROW", ":-", line))
        elif kind == "decimal":
            tokens.append(("NUM", Decimal(lexeme), line))
        elif kind == "int":
            tokens.append(("NUM", int(lexeme), line))
        elif kind == "name":
            tokens.append(("NAME", lexeme, line))
        elif kind == "sym":
            tokens.append((lexeme, lexeme, line))
        line += lexeme.count("\n")
        index = match.end()
    tokens.append(("EOF", None, line))
    return tokens


class _LpParser:
    def __init__(self, text: str):
        self.tokens = _lp_tokens(text)
        self.index = 0

    def peek(self):
        return self.tokens[self.index]

    def advance(self):
        tok = self.tokens[self.index]
        self.index += 1
        return tok

    def expect(self, kind: str):
        tok = self.advance()
        if tok[0] != kind:
            raise BqParseError(f"expected {kind}, got {tok[1]!r} in program text", tok[2], 0)
        return tok

    def term(self) -> TermArg:
        tok = self.advance()
        if tok[0] == "NUM":
            return tok[1]
        if tok[0] != "NAME":
            raise BqParseError(f"expected a term, got {tok[1]!r}", tok[2], 0)
        name = tok[1]
        if self.peek()[0] != "(":
            return name
        self.advance()
        args = [self.term()]
        while self.peek()[0] == ",":
            self.advance()
            args.append(self.term())
        self.expect(")")
        return FuncTerm(name, tuple(args))

    def atom(self) -> GroundAtom:
        tok = self.expect("NAME")
        name = tok[1]
        if self.peek()[0] != "(":
            return GroundAtom(name)
        self.advance()
        args = [self.term()]
        while self.peek()[0] == ",":
            self.advance()
            args.append(self.term())
        self.expect(")")
        return GroundAtom(name, tuple(args))

    def rule(self) -> ProgramRule:
        head: GroundAtom | None = None
        if self.peek()[0] == "ARROW":
            self.advance()
        else:
            head = self.atom()
            if self.peek()[0] == ".":
                self.advance()
                return ProgramRule(head, provenance=Provenance("parsed"))
            self.expect("ARROW")
        positive: list[GroundAtom] = []
        negative: list[GroundAtom] = []
        while True:
            tok = self.peek()
            if tok[0] == "NAME" and tok[1] == "not":
                self.advance()
                negative.append(self.atom())
            else:
                positive.append(self.atom())
            if self.peek()[0] == ",":
                self.advance()
                continue
            break
        self.expect(".")
        return ProgramRule(head, tuple(positive), tuple(negative), provenance=Provenance("parsed"))

    def program(self) -> NormalProgram:
        rules = []
        while self.peek()[0] != "EOF":
            rules.append(self.rule())
        gamma = None
        horizon = 0
        for rule in rules:
            for atom in rule.atoms():
                if atom.predicate == "factor" and atom.args and isinstance(atom.args[0], Decimal):
                    gamma = atom.args[0]
                if atom.predicate == "holds" and len(atom.args) == 2 and isinstance(atom.args[1], int):
                    horizon = max(horizon, atom.args[1])
        return NormalProgram(tuple(rules), horizon=horizon, gamma=gamma)


def parse_program_text(text: str) -> NormalProgram:
    """Parse ".lp" text; the horizon is recovered from the largest holds/2 time index."""
    return _LpParser(text).program()


class ProgramIndex:
    """Interned view of a program: atom ids, rule id triples, occurrence lists."""

    def __init__(self, program: NormalProgram):
        atoms = program.atoms()
        self.atoms = atoms
        self.atom_ids: dict[GroundAtom, int] = {atom: i + 1 for i, atom in enumerate(atoms)}
        self.num_atoms = len(atoms)
        self.rules: list[tuple[int | None, tuple[int, ...], tuple[int, ...]]] = []
        for rule in program.rules:
            head = self.atom_ids[rule.head] if rule.head is not None else None
            positive = tuple(self.atom_ids[a] for a in rule.positive)
            negative = tuple(self.atom_ids[a] for a in rule.negative)
            self.rules.append((head, positive, negative))
        self.head_rules: dict[int, list[int]] = {}
        self.pos_occurrences: dict[int, list[int]] = {}
        for ri, (head, positive, _negative) in enumerate(self.rules):
            if head is not None:
                self.head_rules.setdefault(head, []).append(ri)
            for b in positive:
                self.pos_occurrences.setdefault(b, []).append(ri)

    def ids_of(self, atoms: Iterable[GroundAtom]) -> frozenset[int]:
        return frozenset(self.atom_ids[a] for a in atoms)

    def atoms_of(self, ids: Iterable[int]) -> frozenset[GroundAtom]:
        return frozenset(self.atoms[i - 1] for i in ids)


def literal_to_term(literal: Literal) -> TermArg:
    """Reify a fluent literal: positive stays first order, negative wraps in neg(...)."""
    inner = atom_to_term(literal.atom)
    return inner if literal.positive else FuncTerm(NEG_FUNCTOR, (inner,))


def atom_to_term(atom: Atom) -> TermArg:
    if not atom.args:
        return atom.name
    args: list[TermArg] = []
    for arg in atom.args:
        if not isinstance(arg, (int, str)):
            raise ValueError(f"non-ground atom {atom} cannot be reified")
        args.append(arg)
    return FuncTerm(atom.name, tuple(args))


def term_to_literal(term: TermArg) -> Literal:
    if isinstance(term, FuncTerm) and term.name == NEG_FUNCTOR:
        if len(term.args) != 1:
            raise ValueError(f"malformed negative literal term {term}")
        return Literal(term_to_atom(term.args[0]), False)
    return Literal(term_to_atom(term), True)


def term_to_atom(term: TermArg) -> Atom:
    if isinstance(term, str):
        return Atom(term)
    if isinstance(term, FuncTerm):
        args: list[Constant] = []
        for arg in term.args:
            if not isinstance(arg, (int, str)):
                raise ValueError(f"unexpected argument {arg!r} in term {term}")
            args.append(arg)
        return Atom(term.name, tuple(args))
    raise ValueError(f"term {term!r} does not denote an atom")
