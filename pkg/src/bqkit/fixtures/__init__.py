"""Bundled example theories and logic programs."""

from __future__ import annotations

from importlib import resources

from ..parser import parse_theory
from ..program import NormalProgram, parse_program_text
from ..theory import ActionTheory, ground_theory

THEORY_FIXTURES = ("elevator2", "gridworld3", "tiny", "nontight_pair")
PROGRAM_FIXTURES = (
    "even_loop",
    "no_stable",
    "pos_cycle",
    "fact_constraint",
    "choice_constraint",
    "chain",
    "self_support",
    "neg_cycle3",
)


def fixture_text(name: str) -> str:
    suffix = ".bq" if name in THEORY_FIXTURES else ".lp"
    return resources.files(__package__).joinpath(name + suffix).read_text(encoding="utf-8")


def load_theory(name: str, ground: bool = True) -> ActionTheory:
    theory = parse_theory(fixture_text(name))
    return ground_theory(theory) if ground else theory


def load_program(name: str) -> NormalProgram:
    return parse_program_text(fixture_text(name))
