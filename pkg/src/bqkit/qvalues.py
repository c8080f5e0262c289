"""Q-value estimation over episode sets, plus a backward-induction oracle.

Values are depth-indexed: with a fixed episode length n, the value of a
state/action pair depends on how many steps remain.  The discounted tail of
an episode at step t is sum(gamma^(i-t) * r_{i+1} for i in t..n-1); the
off-policy table keeps the maximum tail per (state, action, depth), the
on-policy table keeps every episode's tail.  Collapsing depths (max) yields a
single value per pair for policy extraction.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence

from .errors import CapExceededError
from .semantics import (
    Episode,
    Transition,
    WorldState,
    executable_actions,
    initial_world_states,
    transition,
)
from .errors import TransitionError
from .theory import ActionTheory, Atom

QLEARNING = "qlearning"
SARSA = "sarsa"


@dataclass(frozen=True)
class DiscountSchedule:
    """A discount factor with its precomputed powers up to the horizon."""

    gamma: float
    powers: tuple[float, ...]

    @classmethod
    def for_horizon(cls, gamma: float, horizon: int) -> "DiscountSchedule":
        powers = [1.0]
        for _ in range(horizon):
            powers.append(powers[-1] * gamma)
        return cls(gamma, tuple(powers))


@dataclass(frozen=True)
class QKey:
    """State/action pair at a given depth (steps already taken)."""

    state: WorldState
    action: Atom
    depth: int

    def sort_key(self) -> tuple:
        return (self.depth, self.state.sort_key(), self.action.sort_key())


@dataclass
class QTable:
    """Estimated values per depth-indexed key.

    `entries` holds one value per key (off-policy max-combine); for the
    on-policy mode `episode_values` holds each episode's tail, keyed by the
    episode's index in the canonical episode ordering.
    """

    mode: str
    gamma: float
    horizon: int
    entries: dict[QKey, float] = field(default_factory=dict)
    episode_values: dict[QKey, dict[int, float]] = field(default_factory=dict)
    start_anchored: dict[QKey, float] | None = None

    def keys(self) -> tuple[QKey, ...]:
        source = self.entries if self.mode == QLEARNING else self.episode_values
        return tuple(sorted(source, key=QKey.sort_key))

    def aggregate_entries(self) -> dict[QKey, float]:
        """One value per key: the stored value, or the max over episodes for on-policy tables."""
        if self.mode == QLEARNING:
            return dict(self.entries)
        return {key: max(values.values()) for key, values in self.episode_values.items()}

    def collapsed(self) -> dict[tuple[WorldState, Atom], float]:
        """Depth-collapsed view: maximum value over depths per state/action pair."""
        out: dict[tuple[WorldState, Atom], float] = {}
        for key, value in self.aggregate_entries().items():
            pair = (key.state, key.action)
            if pair not in out or value > out[pair]:
                out[pair] = value
        return out

    def value(self, state: WorldState, action: Atom) -> float:
        return self.collapsed()[(state, action)]

    def states(self) -> tuple[WorldState, ...]:
        return tuple(sorted({key.state for key in self.keys()}, key=WorldState.sort_key))

    def argmax_actions(self, state: WorldState, tolerance: float = 0.0) -> tuple[Atom, ...]:
        values = {a: v for (s, a), v in self.collapsed().items() if s == state}
        if not values:
            return ()
        best = max(values.values())
        return tuple(sorted((a for a, v in values.items() if v >= best - tolerance), key=str))

    def initial_entries(self) -> dict[QKey, float]:
        return {key: value for key, value in self.aggregate_entries().items() if key.depth == 0}

    def to_json_obj(self) -> dict:
        obj: dict = {"mode": self.mode, "gamma": self.gamma, "horizon": self.horizon}
        if self.mode == QLEARNING:
            obj["entries"] = [
                {"state": key.state.to_json_obj(), "action": str(key.action), "depth": key.depth, "value": self.entries[key]}
                for key in self.keys()
            ]
        else:
            obj["entries"] = [
                {
                    "state": key.state.to_json_obj(),
                    "action": str(key.action),
                    "depth": key.depth,
                    "episode": episode,
                    "value": value,
                }
                for key in self.keys()
                for episode, value in sorted(self.episode_values[key].items())
            ]
        if self.start_anchored is not None:
            obj["start_anchored"] = [
                {"state": key.state.to_json_obj(), "action": str(key.action), "depth": key.depth, "value": value}
                for key, value in sorted(self.start_anchored.items(), key=lambda kv: kv[0].sort_key())
            ]
        return obj


@dataclass(frozen=True)
class Policy:
    """Per-state action choice; always a member of the state's argmax set."""

    choice: dict[WorldState, Atom]

    def to_json_obj(self) -> list[dict]:
        return [
            {"state": state.to_json_obj(), "action": str(self.choice[state])}
            for state in sorted(self.choice, key=WorldState.sort_key)
        ]


def canonical_episodes(episodes: Iterable[Episode]) -> tuple[Episode, ...]:
    """Deduplicated episodes in the canonical order used for episode indices."""
    return tuple(sorted(set(episodes), key=Episode.sort_key))


def _tails(episode: Episode, gamma: float) -> list[float]:
    n = episode.horizon
    tails = [0.0] * (n + 1)
    for t in reversed(range(n)):
        tails[t] = episode.rewards[t] + gamma * tails[t + 1]
    return tails


def q_direct(
    episodes: Iterable[Episode],
    gamma: float,
    mode: str = QLEARNING,
    include_start_anchored: bool = False,
) -> QTable:
    """Evaluate the discounted-tail definition of the optimal values on an episode set.

    Off-policy: per key, the maximum tail over all episodes through it.
    On-policy: per key, every episode's tail (episode-relative estimates).
    Optionally also records the sums anchored at the episode start
    (gamma^i instead of gamma^(i-t)), max-combined per key.
    """
    ordered = canonical_episodes(episodes)
    if not ordered:
        raise ValueError("empty episode set")
    horizons = {e.horizon for e in ordered}
    if len(horizons) != 1:
        raise ValueError(f"mixed episode horizons: {sorted(horizons)}")
    n = horizons.pop()
    if mode not in (QLEARNING, SARSA):
        raise ValueError(f"unknown mode {mode!r}")
    schedule = DiscountSchedule.for_horizon(gamma, n)

    entries: dict[QKey, float] = {}
    episode_values: dict[QKey, dict[int, float]] = {}
    anchored: dict[QKey, float] = {}
    for index, episode in enumerate(ordered):
        tails = _tails(episode, gamma)
        for t in range(n):
            key = QKey(episode.states[t], episode.actions[t], t)
            if mode == QLEARNING:
                seen = entries.get(key)
                if seen is None or tails[t] > seen:
                    entries[key] = tails[t]
            else:
                episode_values.setdefault(key, {})[index] = tails[t]
            if include_start_anchored:
                value = schedule.powers[t] * tails[t]
                seen = anchored.get(key)
                if seen is None or value > seen:
                    anchored[key] = value
    return QTable(
        mode=mode,
        gamma=gamma,
        horizon=n,
        entries=entries,
        episode_values=episode_values,
        start_anchored=anchored if include_start_anchored else None,
    )


class QFold:
    """Running estimate of the initial pair's value while an episode unfolds."""

    def __init__(self, gamma: float, horizon: int):
        self.schedule = DiscountSchedule.for_horizon(gamma, horizon)
        self.horizon = horizon
        self.step = 0
        self.value = 0.0

    def push(self, reward: float) -> float:
        if self.step >= self.horizon:
            raise ValueError(f"reward after episode end (horizon {self.horizon})")
        self.value += self.schedule.powers[self.step] * reward
        self.step += 1
        return self.value


def q_online_fold(rewards: Sequence[float], gamma: float, horizon: int | None = None) -> float:
    """Fold a reward sequence into the initial pair's discounted sum."""
    fold = QFold(gamma, len(rewards) if horizon is None else horizon)
    for reward in rewards:
        fold.push(reward)
    return fold.value


def q_reconstruct(initial_value: float, rewards: Sequence[float], gamma: float, t: int) -> float:
    """Recover the depth-t value from the initial pair's value and the first t rewards.

    Computes (initial - sum(gamma^(i-1) * r_i for i in 1..t)) / gamma^t, which
    equals the re-anchored tail at depth t.
    """
    if t < 1:
        raise ValueError("t must be at least 1")
    if t > len(rewards):
        raise ValueError(f"t={t} exceeds the number of rewards ({len(rewards)})")
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    spent = 0.0
    power = 1.0
    for i in range(t):
        spent += power * rewards[i]
        power *= gamma
    return (initial_value - spent) / power


def q_update_once(table: QTable, transitions: Iterable[Transition]) -> tuple[QTable, float]:
    """Apply one Bellman backup to every key of an off-policy table.

    Each value becomes r + gamma * max over the successor's actions at the
    next depth (0 past the horizon).  Returns the updated table and the
    maximum absolute change; at a fixpoint the change is 0.
    """
    if table.mode != QLEARNING:
        raise ValueError("q_update_once applies to off-policy tables")
    steps: dict[tuple[WorldState, Atom], tuple[float, WorldState]] = {}
    for tr in transitions:
        seen = steps.get((tr.source, tr.action))
        if seen is not None and seen != (tr.reward, tr.target):
            raise ValueError(f"conflicting transitions for {tr.action} in {tr.source}")
        steps[(tr.source, tr.action)] = (tr.reward, tr.target)

    by_state_depth: dict[tuple[WorldState, int], list[float]] = {}
    for key, value in table.entries.items():
        by_state_depth.setdefault((key.state, key.depth), []).append(value)

    updated: dict[QKey, float] = {}
    max_delta = 0.0
    for key in sorted(table.entries, key=QKey.sort_key):
        step = steps.get((key.state, key.action))
        if step is None:
            raise ValueError(f"missing transition for {key.action} in {key.state}")
        reward, successor = step
        if key.depth >= table.horizon - 1:
            value = reward
        else:
            successor_values = by_state_depth.get((successor, key.depth + 1))
            if not successor_values:
                raise ValueError(f"missing successor entries for {successor} at depth {key.depth + 1}")
            value = reward + table.gamma * max(successor_values)
        updated[key] = value
        max_delta = max(max_delta, abs(value - table.entries[key]))
    return QTable(mode=table.mode, gamma=table.gamma, horizon=table.horizon, entries=updated), max_delta


def classic_oracle(theory: ActionTheory, gamma: float | None = None, max_keys: int = 1_000_000) -> QTable:
    """Depth-layered backward induction over the enumerated deterministic process.

    With a learning rate of 1, the iterative one-step backup is exact on a
    deterministic process; evaluating it backwards from the horizon gives the
    fixpoint directly.  Keys cover exactly the pairs reachable from an
    initial state that can be extended to a full-length episode.
    """
    g = float(theory.gamma) if gamma is None else gamma
    n = theory.horizon
    layers: list[set[WorldState]] = [set(initial_world_states(theory))]
    steps: dict[tuple[WorldState, Atom], tuple[float, WorldState] | None] = {}

    def step_of(state: WorldState, action: Atom) -> tuple[float, WorldState] | None:
        if (state, action) not in steps:
            try:
                tr = transition(theory, state, action)
            except TransitionError:
                steps[(state, action)] = None
            else:
                steps[(state, action)] = (tr.reward, tr.target)
        return steps[(state, action)]

    for t in range(n):
        frontier: set[WorldState] = set()
        for state in layers[t]:
            for action in executable_actions(theory, state):
                step = step_of(state, action)
                if step is not None:
                    frontier.add(step[1])
        layers.append(frontier)
        if len(steps) > max_keys:
            raise CapExceededError(f"backward induction exceeded {max_keys} state/action pairs")

    viable: list[set[WorldState]] = [set() for _ in range(n + 1)]
    viable[n] = set(layers[n])
    for t in reversed(range(n)):
        for state in layers[t]:
            for action in executable_actions(theory, state):
                step = step_of(state, action)
                if step is not None and step[1] in viable[t + 1]:
                    viable[t].add(state)
                    break

    entries: dict[QKey, float] = {}
    for t in reversed(range(n)):
        for state in sorted(layers[t] & viable[t], key=WorldState.sort_key):
            for action in executable_actions(theory, state):
                step = step_of(state, action)
                if step is None or step[1] not in viable[t + 1]:
                    continue
                reward, successor = step
                if t == n - 1:
                    value = reward
                else:
                    successor_values = [
                        entries[QKey(successor, a2, t + 1)]
                        for a2 in executable_actions(theory, successor)
                        if QKey(successor, a2, t + 1) in entries
                    ]
                    value = reward + g * max(successor_values)
                entries[QKey(state, action, t)] = value
    return QTable(mode=QLEARNING, gamma=g, horizon=n, entries=entries)


def extract_policy(table: QTable) -> Policy:
    """Pick, per state, an action attaining the maximum collapsed value.

    Exact ties are broken lexicographically by canonical action text.
    """
    collapsed = table.collapsed()
    per_state: dict[WorldState, dict[Atom, float]] = {}
    for (state, action), value in collapsed.items():
        per_state.setdefault(state, {})[action] = value
    choice: dict[WorldState, Atom] = {}
    for state in sorted(per_state, key=WorldState.sort_key):
        values = per_state[state]
        best = max(values.values())
        winners = sorted((a for a, v in values.items() if v == best), key=str)
        choice[state] = winners[0]
    return Policy(choice)


def qtable_to_json(table: QTable) -> str:
    return json.dumps(table.to_json_obj(), separators=(", ", ": "))


def policy_to_json(policy: Policy) -> str:
    return json.dumps(policy.to_json_obj(), separators=(", ", ": "))
