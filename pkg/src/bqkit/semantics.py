"""Direct semantics: closure under static laws, world states, transitions, episodes.

A world state is a complete, consistent set of fluent literals closed under
the static laws.  Executing an action applies the effects of every fired
causal law, keeps untouched literals by inertia, and closes the result; the
closure must again be a state or the transition is undefined.  An episode is
a fixed-length alternation of states, actions and rewards obtained by
choosing an executable action at every step.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator

from .errors import (
    CapExceededError,
    ConflictingEffectsError,
    InconsistentSuccessorError,
    MultipleRewardsError,
    NotExecutableError,
    StateError,
    TransitionError,
)
from .theory import (
    ActionTheory,
    Atom,
    ConjunctiveFormula,
    Literal,
    ground_fluent_atoms,
)

DEFAULT_STATE_ATOM_CAP = 20
DEFAULT_NODE_CAP = 1_000_000


@dataclass(frozen=True)
class WorldState:
    """Complete, consistent, closed set of literals over the ground fluent atoms."""

    literals: frozenset[Literal]

    def sorted(self) -> tuple[Literal, ...]:
        return tuple(sorted(self.literals, key=Literal.sort_key))

    def text(self) -> str:
        return ", ".join(str(lit) for lit in self.sorted())

    def __str__(self) -> str:
        return "{" + self.text() + "}"

    def sort_key(self) -> tuple:
        return tuple(lit.sort_key() for lit in self.sorted())

    def __contains__(self, literal: Literal) -> bool:
        return literal in self.literals

    def satisfies(self, formula: ConjunctiveFormula) -> bool:
        return formula.holds_in(self.literals)

    def to_json_obj(self) -> list[str]:
        return [str(lit) for lit in self.sorted()]


@dataclass(frozen=True)
class Transition:
    source: WorldState
    action: Atom
    target: WorldState
    reward: float


@dataclass(frozen=True)
class Episode:
    """States s_0..s_n, actions a_0..a_{n-1} and rewards r_1..r_n."""

    states: tuple[WorldState, ...]
    actions: tuple[Atom, ...]
    rewards: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.states) != len(self.actions) + 1 or len(self.rewards) != len(self.actions):
            raise ValueError("episode lengths are inconsistent")

    @property
    def horizon(self) -> int:
        return len(self.actions)

    def steps(self) -> Iterator[tuple[WorldState, Atom, float, WorldState]]:
        for t, action in enumerate(self.actions):
            yield self.states[t], action, self.rewards[t], self.states[t + 1]

    def transitions(self) -> tuple[Transition, ...]:
        return tuple(Transition(s, a, s2, r) for s, a, r, s2 in self.steps())

    def trace(self) -> tuple[tuple[str, float], ...]:
        """Canonical action/reward trace used for cross-checks."""
        return tuple((str(a), r) for a, r in zip(self.actions, self.rewards))

    def sort_key(self) -> tuple:
        return (
            tuple(s.sort_key() for s in self.states),
            tuple(a.sort_key() for a in self.actions),
        )

    def to_json_obj(self) -> dict:
        return {
            "states": [s.to_json_obj() for s in self.states],
            "actions": [str(a) for a in self.actions],
            "rewards": list(self.rewards),
        }


def closure(theory: ActionTheory, literals: Iterable[Literal]) -> frozenset[Literal]:
    """Least superset of `literals` satisfying every static law.

    Returns the fixpoint even when it contains a complementary pair; the
    caller decides whether inconsistency is an error.
    """
    current = set(literals)
    changed = True
    while changed:
        changed = False
        for law in theory.static_laws:
            if law.head not in current and law.condition.literals <= current:
                current.add(law.head)
                changed = True
    return frozenset(current)


def is_consistent(literals: frozenset[Literal]) -> bool:
    return not any(lit.complement() in literals for lit in literals)


def is_closed(theory: ActionTheory, literals: frozenset[Literal]) -> bool:
    return all(law.head in literals for law in theory.static_laws if law.condition.literals <= literals)


def make_state(theory: ActionTheory, literals: Iterable[Literal]) -> WorldState:
    """Build a WorldState, checking completeness, consistency and closedness."""
    literal_set = frozenset(literals)
    universe = ground_fluent_atoms(theory)
    for atom in universe:
        has_pos = Literal(atom, True) in literal_set
        has_neg = Literal(atom, False) in literal_set
        if has_pos and has_neg:
            raise StateError(f"inconsistent state: both {atom} and -{atom}")
        if not has_pos and not has_neg:
            raise StateError(f"incomplete state: neither {atom} nor -{atom}")
    extra = {lit for lit in literal_set if lit.atom not in universe}
    if extra:
        raise StateError(f"unknown atoms in state: {sorted(str(l) for l in extra)}")
    if not is_closed(theory, literal_set):
        raise StateError("state does not satisfy the static laws")
    return WorldState(literal_set)


def enumerate_states(theory: ActionTheory, max_atoms: int = DEFAULT_STATE_ATOM_CAP) -> tuple[WorldState, ...]:
    """All complete consistent closed literal sets, in canonical order."""
    atoms = ground_fluent_atoms(theory)
    if len(atoms) > max_atoms:
        raise CapExceededError(f"{len(atoms)} ground atoms exceed the state enumeration cap {max_atoms}")
    states = []
    for values in itertools.product((True, False), repeat=len(atoms)):
        literals = frozenset(Literal(a, v) for a, v in zip(atoms, values))
        if is_closed(theory, literals):
            states.append(WorldState(literals))
    return tuple(sorted(states, key=WorldState.sort_key))


def executable_actions(theory: ActionTheory, state: WorldState) -> tuple[Atom, ...]:
    """Actions with at least one executability law whose condition holds in `state`."""
    found = {law.action for law in theory.executability_laws if state.satisfies(law.condition)}
    return tuple(sorted(found, key=Atom.sort_key))


def transition(theory: ActionTheory, state: WorldState, action: Atom) -> Transition:
    """Successor state and reward for executing `action` in `state`.

    Fired causal laws contribute their effect literals (displacing the
    complements), untouched atoms keep their value, and the result is closed
    under the static laws.  Undefined cases raise a TransitionError subclass.
    """
    if action not in executable_actions(theory, state):
        raise NotExecutableError(f"action {action} is not executable in {state}")
    fired = sorted(
        (law for law in theory.causal_laws if law.action == action and state.satisfies(law.condition)),
        key=lambda law: tuple(lit.sort_key() for lit in law.effects.sorted()),
    )
    effects: dict[Atom, Literal] = {}
    for law in fired:
        for lit in law.effects.sorted():
            seen = effects.get(lit.atom)
            if seen is not None and seen != lit:
                raise ConflictingEffectsError(f"conflicting effects on {lit.atom} for action {action}")
            effects[lit.atom] = lit
    rewards = {law.reward for law in fired}
    if len(rewards) > 1:
        raise MultipleRewardsError(
            f"action {action} fired laws with distinct rewards: {sorted(map(str, rewards))}"
        )
    reward = float(rewards.pop()) if rewards else 0.0

    displaced = set(effects)
    carried = frozenset(lit for lit in state.literals if lit.atom not in displaced)
    closed = closure(theory, carried | set(effects.values()))
    if not is_consistent(closed):
        raise InconsistentSuccessorError(f"closure of successor of {action} in {state} is inconsistent")
    return Transition(state, action, WorldState(closed), reward)


def initial_world_states(theory: ActionTheory, max_atoms: int = DEFAULT_STATE_ATOM_CAP) -> tuple[WorldState, ...]:
    """Every completion of every initial description to a full world state."""
    atoms = ground_fluent_atoms(theory)
    if len(atoms) > max_atoms:
        raise CapExceededError(f"{len(atoms)} ground atoms exceed the state enumeration cap {max_atoms}")
    states: set[WorldState] = set()
    for description in sorted(theory.initial_states, key=lambda f: tuple(l.sort_key() for l in f.sorted())):
        base = closure(theory, description.literals)
        if not is_consistent(base):
            raise StateError(f"initial description {{ {', '.join(map(str, description.sorted()))} }} has no consistent completion")
        free = [a for a in atoms if Literal(a, True) not in base and Literal(a, False) not in base]
        completed_any = False
        for values in itertools.product((True, False), repeat=len(free)):
            literals = base | {Literal(a, v) for a, v in zip(free, values)}
            if is_consistent(literals) and is_closed(theory, literals):
                states.add(WorldState(literals))
                completed_any = True
        if not completed_any:
            raise StateError(
                f"initial description {{ {', '.join(map(str, description.sorted()))} }} has no consistent completion"
            )
    return tuple(sorted(states, key=WorldState.sort_key))


def enumerate_episodes(
    theory: ActionTheory,
    require_goal: bool = False,
    max_nodes: int = DEFAULT_NODE_CAP,
    max_atoms: int = DEFAULT_STATE_ATOM_CAP,
) -> tuple[Episode, ...]:
    """Depth-first expansion of every executable action choice to exactly the horizon.

    Prefixes that reach a state with no executable action (or an undefined
    transition) before the horizon are discarded.  With `require_goal`,
    episodes whose final state does not satisfy the goal are discarded too.
    """
    n = theory.horizon
    episodes: list[Episode] = []
    nodes = 0

    def extend(states: list[WorldState], actions: list[Atom], rewards: list[float]) -> None:
        nonlocal nodes
        nodes += 1
        if nodes > max_nodes:
            raise CapExceededError(f"episode expansion exceeded {max_nodes} nodes")
        if len(actions) == n:
            if require_goal and not states[-1].satisfies(theory.goal):
                return
            episodes.append(Episode(tuple(states), tuple(actions), tuple(rewards)))
            return
        current = states[-1]
        for action in executable_actions(theory, current):
            try:
                step = transition(theory, current, action)
            except TransitionError:
                continue
            states.append(step.target)
            actions.append(action)
            rewards.append(step.reward)
            extend(states, actions, rewards)
            states.pop()
            actions.pop()
            rewards.pop()

    for start in initial_world_states(theory, max_atoms=max_atoms):
        extend([start], [], [])
    return tuple(sorted(episodes, key=Episode.sort_key))


def episodes_to_jsonl(episodes: Iterable[Episode]) -> str:
    """One JSON object per line with canonical literal arrays, actions and rewards."""
    lines = [json.dumps(e.to_json_obj(), separators=(", ", ": ")) for e in episodes]
    return "\n".join(lines) + ("\n" if lines else "")
