"""Closure, state enumeration, transitions, and episode enumeration."""

from __future__ import annotations

import itertools

import pytest
from hypothesis import given, strategies as st

from bqkit.errors import (
    ConflictingEffectsError,
    CapExceededError,
    InconsistentSuccessorError,
    MultipleRewardsError,
    NotExecutableError,
    StateError,
)
from bqkit.parser import parse_theory
from bqkit.semantics import (
    Episode,
    WorldState,
    closure,
    enumerate_episodes,
    enumerate_states,
    episodes_to_jsonl,
    executable_actions,
    initial_world_states,
    is_closed,
    is_consistent,
    make_state,
    transition,
)
from bqkit.theory import Atom, Literal, ground_theory, neg, pos


def state_of(*literals) -> WorldState:
    return WorldState(frozenset(literals))


def theory(source: str, ground: bool = True):
    parsed = parse_theory(source)
    return ground_theory(parsed) if ground else parsed


# A two-floor lift variant without static laws: moving explicitly clears the
# other current(...) flag, so every transition stays a plain effects+inertia step.
EXPLICIT_LIFT = """
domain floor = 1..2.
fluent on(floor).
fluent current(floor).
fluent opened.
action up(floor).
action down(floor).
action close.
up(N) causes current(N), -current(M), -on(N), opened : 1.0 if on(N), -opened, M != N.
down(N) causes current(N), -current(M), -on(N), opened : 1.0 if on(N), -opened, M != N.
close causes -opened : 1.0 if opened.
executable up(N) if current(M), M < N.
executable down(N) if current(M), M > N.
executable close if {}.
initially { on(1), on(2), -opened, current(1), -current(2) }.
goal { -on(1), -on(2) }.
horizon 2.
discount 0.9.
"""


def test_closure_no_static_laws_is_identity(tiny):
    literals = {pos("lamp")}
    assert closure(tiny, literals) == frozenset(literals)


def test_closure_single_application(elevator):
    result = closure(elevator, {neg("current", 1)})
    assert result == frozenset({neg("current", 1), pos("current", 2)})


def test_closure_inconsistent_fixpoint_returned(elevator):
    result = closure(elevator, {neg("current", 1), neg("current", 2)})
    assert result == frozenset(
        {neg("current", 1), neg("current", 2), pos("current", 1), pos("current", 2)}
    )
    assert not is_consistent(result)


@given(
    st.sets(
        st.tuples(st.integers(min_value=1, max_value=4), st.booleans()).map(
            lambda t: Literal(Atom("f", (t[0],)), t[1])
        ),
        max_size=8,
    ),
    st.sets(
        st.tuples(st.integers(min_value=1, max_value=4), st.booleans()).map(
            lambda t: Literal(Atom("f", (t[0],)), t[1])
        ),
        max_size=4,
    ),
)
def test_closure_monotone_and_idempotent(base, extra):
    source = (
        "domain idx = 1..4.\nfluent f(idx).\naction wait.\nexecutable wait if {}.\n"
        "static f(1) if -f(2).\nstatic f(3) if f(1), -f(4).\nstatic f(2) if f(3).\n"
        "initially { f(1) }.\nhorizon 1.\ndiscount 0.5.\n"
    )
    t = theory(source)
    small = closure(t, base)
    large = closure(t, base | extra)
    assert small <= large
    assert closure(t, small) == small


def test_enumerate_states_single_atom(tiny):
    states = enumerate_states(tiny)
    assert len(states) == 2


def test_enumerate_states_static_filter():
    t = theory("fluent a.\nfluent b.\naction wait.\nexecutable wait if {}.\nstatic a if b.\n"
               "initially { a }.\nhorizon 1.\ndiscount 0.5.\n")
    states = enumerate_states(t)
    texts = {s.text() for s in states}
    assert texts == {"a, b", "a, -b", "-a, -b"}


def test_enumerate_states_elevator_matches_brute_force(elevator):
    atoms = sorted({law.head.atom for law in elevator.static_laws} |
                   {lit.atom for s in elevator.initial_states for lit in s.literals},
                   key=Atom.sort_key)
    # Independent brute force over every assignment of the five atoms.
    names = [Atom("current", (1,)), Atom("current", (2,)), Atom("on", (1,)), Atom("on", (2,)), Atom("opened", ())]
    count = 0
    for values in itertools.product((True, False), repeat=5):
        literals = frozenset(Literal(a, v) for a, v in zip(names, values))
        ok = True
        if neg("current", 1) in literals and pos("current", 2) not in literals:
            ok = False
        if neg("current", 2) in literals and pos("current", 1) not in literals:
            ok = False
        if ok:
            count += 1
    assert len(enumerate_states(elevator)) == count == 24


def test_enumerate_states_cap(gridworld):
    with pytest.raises(CapExceededError):
        enumerate_states(gridworld, max_atoms=4)


def test_make_state_rejects_bad_sets(tiny):
    with pytest.raises(StateError):
        make_state(tiny, [])
    with pytest.raises(StateError):
        make_state(tiny, [pos("lamp"), neg("lamp")])


def test_executable_actions(elevator):
    (state_a, state_b) = initial_world_states(elevator)
    assert [str(a) for a in executable_actions(elevator, state_a)] == ["close", "down(1)", "up(2)"]
    assert [str(a) for a in executable_actions(elevator, state_b)] == ["close", "up(2)"]


def test_executable_requires_some_law():
    t = theory("fluent lamp.\naction wait.\naction stuck.\nexecutable wait if {}.\n"
               "initially { lamp }.\nhorizon 1.\ndiscount 0.5.\n")
    (state,) = initial_world_states(t)
    assert [str(a) for a in executable_actions(t, state)] == ["wait"]


def test_transition_explicit_lift_example():
    t = theory(EXPLICIT_LIFT)
    state = state_of(pos("current", 1), neg("current", 2), pos("on", 2), neg("on", 1), neg("opened"))
    step = transition(t, state, Atom("up", (2,)))
    assert step.target == state_of(pos("current", 2), neg("current", 1), neg("on", 2), neg("on", 1), pos("opened"))
    assert step.reward == 1.0


def test_transition_close_toggles_door_only(elevator):
    state = state_of(pos("current", 1), pos("current", 2), pos("on", 1), neg("on", 2), pos("opened"))
    step = transition(elevator, state, Atom("close"))
    assert step.target.literals == (state.literals - {pos("opened")}) | {neg("opened")}
    assert step.reward == 1.0


def test_transition_pure_inertia_reward_zero(elevator):
    state, _ = initial_world_states(elevator)
    step = transition(elevator, state, Atom("close"))  # door already closed: nothing fires
    assert step.target == state
    assert step.reward == 0.0


def test_transition_not_executable(elevator):
    state, _ = initial_world_states(elevator)
    with pytest.raises(NotExecutableError):
        transition(elevator, state, Atom("up", (1,)))


def test_transition_conflicting_effects():
    t = theory("fluent lamp.\naction zap.\nzap causes lamp : 1.0 if -lamp.\nzap causes -lamp : 1.0 if -lamp.\n"
               "executable zap if {}.\ninitially { -lamp }.\nhorizon 1.\ndiscount 0.5.\n")
    (state,) = initial_world_states(t)
    with pytest.raises(ConflictingEffectsError):
        transition(t, state, Atom("zap"))


def test_transition_conflicting_rewards():
    t = theory("fluent a.\nfluent b.\naction zap.\nzap causes a : 1.0 if -a.\nzap causes b : 2.0 if -b.\n"
               "executable zap if {}.\ninitially { -a, -b }.\nhorizon 1.\ndiscount 0.5.\n")
    (state,) = initial_world_states(t)
    with pytest.raises(MultipleRewardsError):
        transition(t, state, Atom("zap"))


def test_transition_inconsistent_successor():
    t = theory("fluent a.\nfluent b.\naction flip.\nflip causes a : 1.0 if -a.\nstatic b if a.\n"
               "executable flip if {}.\ninitially { -a, -b }.\nhorizon 1.\ndiscount 0.5.\n")
    (state,) = initial_world_states(t)
    with pytest.raises(InconsistentSuccessorError):
        transition(t, state, Atom("flip"))


def test_transition_outputs_are_states(elevator, gridworld):
    for t in (elevator, gridworld):
        for state in initial_world_states(t):
            for action in executable_actions(t, state):
                step = transition(t, state, action)
                target = step.target.literals
                assert is_consistent(target)
                assert is_closed(t, target)
                make_state(t, target)  # completeness


def test_transition_inertia_property(elevator):
    for state in initial_world_states(elevator):
        for action in executable_actions(elevator, state):
            step = transition(elevator, state, action)
            fired = [
                law
                for law in elevator.causal_laws
                if law.action == action and state.satisfies(law.condition)
            ]
            touched = {lit.atom for law in fired for lit in law.effects.literals}
            touched |= {law.head.atom for law in elevator.static_laws}
            for literal in state.literals:
                if literal.atom not in touched:
                    assert literal in step.target


def test_transition_deterministic(elevator):
    state, _ = initial_world_states(elevator)
    action = Atom("up", (2,))
    assert transition(elevator, state, action) == transition(elevator, state, action)


def test_initial_states_complete_description_is_singleton():
    t = theory(EXPLICIT_LIFT)
    states = initial_world_states(t)
    assert len(states) == 1
    assert states[0].text() == "current(1), -current(2), on(1), on(2), -opened"


def test_initial_states_free_atom_doubles():
    t = theory("fluent a.\nfluent b.\naction wait.\nexecutable wait if {}.\n"
               "initially { a }.\nhorizon 1.\ndiscount 0.5.\n")
    assert len(initial_world_states(t)) == 2


def test_initial_states_elevator(elevator):
    assert len(initial_world_states(elevator)) == 2


def test_initial_states_no_completion():
    t = theory("fluent a.\naction wait.\nexecutable wait if {}.\n"
               "initially { a, -a }.\nhorizon 1.\ndiscount 0.5.\n")
    with pytest.raises(StateError):
        initial_world_states(t)


def test_episodes_horizon_zero(elevator):
    episodes = enumerate_episodes(elevator.with_overrides(horizon=0))
    assert len(episodes) == 2
    assert all(e.actions == () for e in episodes)


def test_episodes_elevator_count(elevator):
    assert len(enumerate_episodes(elevator)) == 14


def test_episodes_match_naive_recursion(elevator):
    # Independent recursion: no shared enumeration code beyond transitions.
    def expand(state, depth):
        if depth == elevator.horizon:
            return [((state,), (), ())]
        out = []
        for action in executable_actions(elevator, state):
            step = transition(elevator, state, action)
            for states, actions, rewards in expand(step.target, depth + 1):
                out.append(((state,) + states, (action,) + actions, (step.reward,) + rewards))
        return out

    expected = {
        Episode(states, actions, rewards)
        for start in initial_world_states(elevator)
        for states, actions, rewards in expand(start, 0)
    }
    assert set(enumerate_episodes(elevator)) == expected


def test_episodes_no_executable_action_is_empty():
    t = theory("fluent lamp.\naction wait.\nexecutable wait if -lamp.\n"
               "initially { lamp }.\nhorizon 1.\ndiscount 0.5.\n")
    assert enumerate_episodes(t) == ()


def test_episodes_dead_end_prefixes_discarded():
    # wait is executable only while the lamp is on; zap turns it off for good.
    t = theory("fluent lamp.\naction wait.\naction zap.\nzap causes -lamp : 1.0 if lamp.\n"
               "executable wait if lamp.\nexecutable zap if lamp.\n"
               "initially { lamp }.\nhorizon 2.\ndiscount 0.5.\n")
    episodes = enumerate_episodes(t)
    # zap at step 0 kills the lamp, leaving nothing executable at step 1.
    assert {tuple(str(a) for a in e.actions) for e in episodes} == {("wait", "wait"), ("wait", "zap")}


def test_episodes_require_goal(elevator, gridworld):
    episodes = enumerate_episodes(elevator, require_goal=True)
    assert episodes == ()  # two serviced floors need at least 3 steps (close between rides)
    unrestricted = enumerate_episodes(gridworld)
    restricted = enumerate_episodes(gridworld, require_goal=True)
    satisfying = {e for e in unrestricted if e.states[-1].satisfies(gridworld.goal)}
    assert set(restricted) == satisfying
    assert 0 < len(restricted) < len(unrestricted)


def test_episodes_node_cap(gridworld):
    with pytest.raises(CapExceededError):
        enumerate_episodes(gridworld, max_nodes=10)


def test_episodes_jsonl_roundtrip_shape(tiny):
    episodes = enumerate_episodes(tiny)
    text = episodes_to_jsonl(episodes)
    import json

    lines = [json.loads(line) for line in text.splitlines()]
    assert lines == [{"states": [["lamp"], ["-lamp"]], "actions": ["toggle"], "rewards": [1.0]}]
