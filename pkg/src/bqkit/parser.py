"""Recursive-descent parser for the `.bq` theory format.

Statements end with ".".  "%" starts a comment running to end of line.
Lowercase identifiers and integers are constants, uppercase identifiers are
variables.  "-" prefixes a negative literal.  "{}" is the empty formula.
Alternative initial descriptions are separated by "|".
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from decimal import Decimal

from .errors import BqParseError
from .theory import (
    ActionTheory,
    Atom,
    Comparison,
    ConjunctiveFormula,
    Constant,
    Literal,
    Term,
    Var,
)

KEYWORDS = frozenset(
    {"domain", "fluent", "action", "initially", "executable", "static", "causes", "if", "goal", "horizon", "discount"}
)

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>%[^\n]*)
  | (?P<decimal>-?\d+\.\d+)
  | (?P<int>-?\d+)
  | (?P<name>[a-z][A-Za-z0-9_]*)
  | (?P<var>[A-Z][A-Za-z0-9_]*)
  | (?P<sym>\.\.|!=|[.,(){}|:=<>-])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str
    value: object
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    line, col = 1, 1
    index = 0
    while index < len(text):
        match = _TOKEN_RE.match(text, index)
        if match is None:
            raise BqParseError(f"unexpected character {text[index]!r}", line, col)
        lexeme = match.group(0)
        kind = match.lastgroup
        if kind == "decimal":
            tokens.append(Token("DECIMAL", Decimal(lexeme), line, col))
        elif kind == "int":
            tokens.append(Token("INT", int(lexeme), line, col))
        elif kind == "name":
            tokens.append(Token("NAME", lexeme, line, col))
        elif kind == "var":
            tokens.append(Token("VAR", lexeme, line, col))
        elif kind == "sym":
            tokens.append(Token(lexeme, lexeme, line, col))
        newlines = lexeme.count("\n")
        if newlines:
            line += newlines
            col = len(lexeme) - lexeme.rfind("\n")
        else:
            col += len(lexeme)
        index = match.end()
    tokens.append(Token("EOF", None, line, col))
    return tokens


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.index = 0
        self.domains: dict[str, tuple[Constant, ...]] = {}
        self.fluent_decls: dict[str, tuple[str, ...]] = {}
        self.action_decls: dict[str, tuple[str, ...]] = {}
        self.initial_states: list[ConjunctiveFormula] | None = None
        self.causal_laws: list = []
        self.executability_laws: list = []
        self.static_laws: list = []
        self.goal: ConjunctiveFormula | None = None
        self.horizon: int | None = None
        self.gamma: Decimal | None = None

    # -- token helpers ------------------------------------------------------

    def peek(self) -> Token:
        return self.tokens[self.index]

    def advance(self) -> Token:
        tok = self.tokens[self.index]
        self.index += 1
        return tok

    def fail(self, message: str, tok: Token | None = None) -> BqParseError:
        tok = tok or self.peek()
        return BqParseError(message, tok.line, tok.col)

    def expect(self, kind: str, what: str | None = None) -> Token:
        tok = self.advance()
        if tok.kind != kind:
            raise self.fail(f"expected {what or kind}, got {tok.value!r}", tok)
        return tok

    def at_keyword(self, word: str) -> bool:
        tok = self.peek()
        return tok.kind == "NAME" and tok.value == word

    def expect_keyword(self, word: str) -> Token:
        tok = self.advance()
        if tok.kind != "NAME" or tok.value != word:
            raise self.fail(f"expected '{word}', got {tok.value!r}", tok)
        return tok

    # -- grammar ------------------------------------------------------------

    def parse(self) -> ActionTheory:
        while self.peek().kind != "EOF":
            self.statement()
        missing = []
        if self.initial_states is None:
            missing.append("initially")
        if self.horizon is None:
            missing.append("horizon")
        if self.gamma is None:
            missing.append("discount")
        if missing:
            raise self.fail(f"missing required statement(s): {', '.join(missing)}")
        return ActionTheory(
            domains=self.domains,
            fluent_decls=self.fluent_decls,
            action_decls=self.action_decls,
            initial_states=frozenset(self.initial_states),
            causal_laws=frozenset(self.causal_laws),
            executability_laws=frozenset(self.executability_laws),
            static_laws=frozenset(self.static_laws),
            goal=self.goal if self.goal is not None else ConjunctiveFormula(),
            gamma=self.gamma,
            horizon=self.horizon,
        )

    def statement(self) -> None:
        tok = self.peek()
        if tok.kind != "NAME" and not (tok.kind == "-" or tok.kind in ("INT", "DECIMAL")):
            raise self.fail(f"expected a statement, got {tok.value!r}", tok)
        word = tok.value
        if word == "domain":
            self.domain_statement()
        elif word in ("fluent", "action"):
            self.decl_statement(word)
        elif word == "initially":
            self.initially_statement()
        elif word == "executable":
            self.executable_statement()
        elif word == "static":
            self.static_statement()
        elif word == "goal":
            self.goal_statement()
        elif word == "horizon":
            self.horizon_statement()
        elif word == "discount":
            self.discount_statement()
        else:
            self.causal_statement()

    def domain_statement(self) -> None:
        self.expect_keyword("domain")
        name_tok = self.expect("NAME", "domain name")
        name = name_tok.value
        if name in self.domains:
            raise self.fail(f"duplicate declaration of domain {name}", name_tok)
        self.expect("=")
        values: list[Constant] = []
        if self.peek().kind == "INT":
            low = self.advance().value
            self.expect("..")
            high = self.expect("INT", "range end").value
            if high < low:
                raise self.fail(f"empty range {low}..{high}", name_tok)
            values = list(range(low, high + 1))
        else:
            self.expect("{")
            while self.peek().kind != "}":
                tok = self.advance()
                if tok.kind not in ("INT", "NAME"):
                    raise self.fail("domain values must be integers or lowercase names", tok)
                if tok.value in values:
                    raise self.fail(f"duplicate domain value {tok.value}", tok)
                values.append(tok.value)
                if self.peek().kind == ",":
                    self.advance()
            self.expect("}")
        self.expect(".")
        self.domains[name] = tuple(values)

    def decl_statement(self, kind: str) -> None:
        self.expect_keyword(kind)
        name_tok = self.advance()
        if name_tok.kind != "NAME":
            raise self.fail(f"expected {kind} name", name_tok)
        name = name_tok.value
        if name in KEYWORDS:
            raise self.fail(f"{name!r} is a reserved word", name_tok)
        if name in self.fluent_decls or name in self.action_decls:
            raise self.fail(f"duplicate declaration of {name}", name_tok)
        types: list[str] = []
        if self.peek().kind == "(":
            self.advance()
            while True:
                tok = self.expect("NAME", "type name")
                if tok.value not in self.domains:
                    raise self.fail(f"unknown type name: {tok.value}", tok)
                types.append(tok.value)
                if self.peek().kind == ",":
                    self.advance()
                    continue
                break
            self.expect(")")
        self.expect(".")
        target = self.fluent_decls if kind == "fluent" else self.action_decls
        target[name] = tuple(types)

    def initially_statement(self) -> None:
        start = self.expect_keyword("initially")
        if self.initial_states is not None:
            raise self.fail("duplicate initially statement", start)
        descriptions = [self.braced_formula(allow_vars=False)]
        while self.peek().kind == "|":
            self.advance()
            descriptions.append(self.braced_formula(allow_vars=False))
        self.expect(".")
        self.initial_states = descriptions

    def executable_statement(self) -> None:
        from .theory import ExecutabilityLaw

        self.expect_keyword("executable")
        action = self.atom()
        self.expect_keyword("if")
        condition, comparisons = self.condition_list()
        tok = self.expect(".")
        self.executability_laws.append(
            ExecutabilityLaw(action, condition, frozenset(comparisons), pos=(tok.line, tok.col))
        )

    def static_statement(self) -> None:
        from .theory import StaticLaw

        self.expect_keyword("static")
        head = self.literal()
        self.expect_keyword("if")
        condition, comparisons = self.condition_list()
        tok = self.expect(".")
        self.static_laws.append(StaticLaw(head, condition, frozenset(comparisons), pos=(tok.line, tok.col)))

    def causal_statement(self) -> None:
        from .theory import CausalLaw

        action = self.atom()
        self.expect_keyword("causes")
        effects = self.effect_list()
        reward = Decimal(0)
        if self.peek().kind == ":":
            self.advance()
            tok = self.advance()
            if tok.kind not in ("DECIMAL", "INT"):
                raise self.fail("expected a reward number", tok)
            reward = tok.value if isinstance(tok.value, Decimal) else Decimal(tok.value)
        condition = ConjunctiveFormula()
        comparisons: list[Comparison] = []
        if self.at_keyword("if"):
            self.advance()
            condition, comparisons = self.condition_list()
        tok = self.expect(".")
        self.causal_laws.append(
            CausalLaw(action, effects, reward, condition, frozenset(comparisons), pos=(tok.line, tok.col))
        )

    def goal_statement(self) -> None:
        start = self.expect_keyword("goal")
        if self.goal is not None:
            raise self.fail("duplicate goal statement", start)
        self.goal = self.braced_formula(allow_vars=False)
        self.expect(".")

    def horizon_statement(self) -> None:
        start = self.expect_keyword("horizon")
        if self.horizon is not None:
            raise self.fail("duplicate horizon statement", start)
        tok = self.expect("INT", "horizon length")
        if tok.value < 0:
            raise self.fail("horizon must be non-negative", tok)
        self.horizon = tok.value
        self.expect(".")

    def discount_statement(self) -> None:
        start = self.expect_keyword("discount")
        if self.gamma is not None:
            raise self.fail("duplicate discount statement", start)
        tok = self.advance()
        if tok.kind not in ("DECIMAL", "INT"):
            raise self.fail("expected a discount number", tok)
        self.gamma = tok.value if isinstance(tok.value, Decimal) else Decimal(tok.value)
        self.expect(".")

    # -- formula pieces -----------------------------------------------------

    def term(self) -> Term:
        tok = self.advance()
        if tok.kind == "INT":
            return tok.value
        if tok.kind == "NAME":
            return tok.value
        if tok.kind == "VAR":
            return Var(tok.value)
        raise self.fail("expected a constant or variable", tok)

    def atom(self) -> Atom:
        tok = self.expect("NAME", "an atom name")
        name = tok.value
        if name in KEYWORDS:
            raise self.fail(f"{name!r} is a reserved word", tok)
        args: list[Term] = []
        if self.peek().kind == "(":
            self.advance()
            while True:
                args.append(self.term())
                if self.peek().kind == ",":
                    self.advance()
                    continue
                break
            self.expect(")")
        return Atom(name, tuple(args))

    def literal(self) -> Literal:
        if self.peek().kind == "-":
            self.advance()
            return Literal(self.atom(), False)
        return Literal(self.atom(), True)

    def braced_formula(self, allow_vars: bool) -> ConjunctiveFormula:
        self.expect("{")
        literals: list[Literal] = []
        while self.peek().kind != "}":
            tok = self.peek()
            lit = self.literal()
            if not allow_vars and not lit.is_ground:
                raise self.fail("variables are not allowed here", tok)
            literals.append(lit)
            if self.peek().kind == ",":
                self.advance()
        self.expect("}")
        return ConjunctiveFormula(frozenset(literals))

    def condition_list(self) -> tuple[ConjunctiveFormula, list[Comparison]]:
        """Literals and comparisons; either `{}`, `{ items }` or a bare item list."""
        braced = False
        if self.peek().kind == "{":
            self.advance()
            if self.peek().kind == "}":
                self.advance()
                return ConjunctiveFormula(), []
            braced = True
        literals: list[Literal] = []
        comparisons: list[Comparison] = []
        while True:
            item = self.condition_item()
            if isinstance(item, Literal):
                literals.append(item)
            else:
                comparisons.append(item)
            if self.peek().kind == ",":
                self.advance()
                continue
            break
        if braced:
            self.expect("}")
        return ConjunctiveFormula(frozenset(literals)), comparisons

    def condition_item(self) -> Literal | Comparison:
        tok = self.peek()
        if tok.kind == "-":
            return self.literal()
        if tok.kind in ("VAR", "INT"):
            lhs = self.term()
            return self.comparison_tail(lhs)
        if tok.kind == "NAME":
            nxt = self.tokens[self.index + 1]
            if nxt.kind in ("<", ">", "!=", "="):
                lhs = self.term()
                return self.comparison_tail(lhs)
            return self.literal()
        raise self.fail("expected a literal or comparison", tok)

    def comparison_tail(self, lhs: Term) -> Comparison:
        tok = self.advance()
        if tok.kind not in ("<", ">", "!=", "="):
            raise self.fail("expected a comparison operator", tok)
        rhs = self.term()
        return Comparison(tok.kind, lhs, rhs)

    def effect_list(self) -> ConjunctiveFormula:
        if self.peek().kind == "{":
            self.advance()
            literals: list[Literal] = []
            while self.peek().kind != "}":
                literals.append(self.literal())
                if self.peek().kind == ",":
                    self.advance()
            self.expect("}")
            return ConjunctiveFormula(frozenset(literals))
        literals = [self.literal()]
        # A bare effect list ends where ':' (reward), 'if', or '.' begins.
        while self.peek().kind == ",":
            self.advance()
            literals.append(self.literal())
        return ConjunctiveFormula(frozenset(literals))


def parse_theory(source_text: str) -> ActionTheory:
    """Parse theory text into an (unground, unvalidated) theory."""
    return _Parser(tokenize(source_text)).parse()
