"""Parsing, grounding, validation and the canonical text round trip."""

from __future__ import annotations

from decimal import Decimal

import pytest
from hypothesis import given, strategies as st

from bqkit.errors import BqParseError, GroundingError
from bqkit.parser import parse_theory
from bqkit.theory import (
    Atom,
    CausalLaw,
    ConjunctiveFormula,
    Literal,
    ground_theory,
    neg,
    pos,
    pretty_print,
    validate_theory,
)

MINIMAL_TAIL = "initially { lamp }.\nhorizon 1.\ndiscount 0.5.\n"


def make(source: str) -> object:
    return parse_theory(source)


def test_parse_causal_law_shape():
    theory = make("fluent opened.\naction close.\nclose causes -opened : 1.0 if opened.\n"
                  "executable close if {}.\ninitially { opened }.\nhorizon 1.\ndiscount 0.9.\n")
    (law,) = theory.causal_laws
    assert law.action == Atom("close")
    assert law.effects == ConjunctiveFormula.of(neg("opened"))
    assert law.reward == Decimal("1.0")
    assert law.condition == ConjunctiveFormula.of(pos("opened"))


def test_parse_initial_description_size():
    theory = make(
        "domain floor = 1..3.\nfluent on(floor).\nfluent opened.\nfluent current(floor).\n"
        "action close.\nclose causes -opened : 1.0 if opened.\nexecutable close if {}.\n"
        "initially { on(1), -opened, current(3) }.\nhorizon 1.\ndiscount 0.9.\n"
    )
    assert len(theory.initial_states) == 1
    (description,) = theory.initial_states
    assert description == ConjunctiveFormula.of(pos("on", 1), neg("opened"), pos("current", 3))


def test_parse_empty_executability_condition():
    theory = make("fluent lamp.\naction wait.\nexecutable wait if {}.\n" + MINIMAL_TAIL)
    (law,) = theory.executability_laws
    assert law.condition == ConjunctiveFormula()


def test_parse_alternative_initial_descriptions():
    theory = make("fluent lamp.\naction wait.\nexecutable wait if {}.\n"
                  "initially { lamp } | { -lamp }.\nhorizon 1.\ndiscount 0.5.\n")
    assert len(theory.initial_states) == 2


@pytest.mark.parametrize(
    "source, fragment",
    [
        ("fluent lamp\n" + MINIMAL_TAIL, "expected"),
        ("fluent lamp.\nfluent lamp.\n" + MINIMAL_TAIL, "duplicate"),
        ("fluent on(floor).\n" + MINIMAL_TAIL, "unknown type"),
        ("fluent lamp.\nhorizon 1.\ndiscount 0.5.\n", "missing required"),
        ("fluent lamp.\ninitially { on(X) }.\nhorizon 1.\ndiscount 0.5.\n", "variables are not allowed"),
    ],
)
def test_parse_errors(source, fragment):
    with pytest.raises(BqParseError) as err:
        make(source)
    assert fragment in str(err.value)


def test_parse_error_carries_position():
    with pytest.raises(BqParseError) as err:
        make("fluent lamp.\nfluent lamp.\n" + MINIMAL_TAIL)
    assert err.value.line == 2


def test_ground_keeps_true_comparisons_only(elevator_unground, elevator):
    ups = {law for law in elevator.executability_laws if law.action.name == "up"}
    assert {str(law.action) for law in ups} == {"up(2)"}
    (law,) = ups
    assert law.condition == ConjunctiveFormula.of(pos("current", 1))


def test_ground_law_without_variables_unchanged():
    theory = make("fluent lamp.\naction wait.\nwait causes lamp : 0.5 if -lamp.\n"
                  "executable wait if {}.\n" + MINIMAL_TAIL)
    assert ground_theory(theory).causal_laws == theory.causal_laws


def test_ground_static_law_instances(elevator):
    instances = {f"{law.head} if {', '.join(map(str, law.condition.sorted()))}" for law in elevator.static_laws}
    assert instances == {"current(1) if -current(2)", "current(2) if -current(1)"}


def test_ground_is_idempotent(elevator, gridworld, tiny):
    for theory in (elevator, gridworld, tiny):
        assert ground_theory(theory) == theory


def test_ground_rejects_comparison_only_variables():
    theory = make("domain floor = 1..2.\nfluent on(floor).\naction wait.\n"
                  "executable wait if on(1), N != 1.\ninitially { on(1), on(2) }.\nhorizon 1.\ndiscount 0.5.\n")
    with pytest.raises(GroundingError, match="unbounded variable"):
        ground_theory(theory)


def test_ground_instance_variables_empty(elevator):
    for law in elevator.laws():
        assert not law.comparisons
        if isinstance(law, CausalLaw):
            assert not law.effects.variables() and not law.action.variables()
        assert not law.condition.variables()


def test_validate_elevator_clean(elevator_unground):
    report = validate_theory(elevator_unground)
    assert report.ok
    assert not report.warnings


def test_validate_discount_out_of_range(tiny):
    report = validate_theory(tiny.with_overrides(gamma=Decimal("1.0")))
    assert any(v.code == "discount-out-of-range" for v in report.violations)


def test_validate_inconsistent_initial():
    theory = make("fluent opened.\naction wait.\nexecutable wait if {}.\n"
                  "initially { opened, -opened }.\nhorizon 1.\ndiscount 0.5.\n")
    report = validate_theory(theory)
    assert any(v.code == "inconsistent-initial" for v in report.violations)


def test_validate_flags_missing_executability():
    theory = make("fluent lamp.\naction wait.\nwait causes lamp : 1.0 if -lamp.\n" + MINIMAL_TAIL)
    report = validate_theory(theory)
    assert report.ok
    assert any(w.code == "no-executability-law" for w in report.warnings)


def test_validate_constant_outside_domain():
    theory = make("domain floor = 1..2.\nfluent on(floor).\naction wait.\nexecutable wait if on(3).\n"
                  "initially { on(1) }.\nhorizon 1.\ndiscount 0.5.\n")
    report = validate_theory(theory)
    assert any(v.code == "constant-outside-domain" for v in report.violations)


def test_validate_scope_rules():
    theory = make("domain floor = 1..2.\nfluent on(floor).\naction push(floor).\n"
                  "push(N) causes on(M) : 1.0 if on(N).\nexecutable push(N) if {}.\n"
                  "initially { on(1), on(2) }.\nhorizon 1.\ndiscount 0.5.\n")
    report = validate_theory(theory)
    codes = {v.code for v in report.violations}
    assert "effect-variable-scope" in codes
    assert "action-variable-scope" in codes


def test_roundtrip_fixtures(elevator, gridworld, tiny, nontight_pair):
    for theory in (elevator, gridworld, tiny, nontight_pair):
        assert parse_theory(pretty_print(theory)) == theory


def test_roundtrip_unground(elevator_unground):
    assert parse_theory(pretty_print(elevator_unground)) == elevator_unground


@given(st.booleans())
def test_literal_complement_involution(positive):
    literal = Literal(Atom("on", (1,)), positive)
    assert literal.complement().complement() == literal
