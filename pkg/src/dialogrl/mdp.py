"""Tabular MDP estimation, Q-value iteration and greedy policy extraction.

States and actions are arbitrary hashable labels held in fixed tables; internally
everything is indexed densely so the backups are plain numpy array operations.
A trajectory is a sequence of ``(state, action, reward)`` steps. The successor of
step ``i`` is the state of step ``i + 1``; the successor of the final step is the
absorbing terminal marker :data:`TERMINAL`.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Hashable, Iterable, Mapping, Sequence, TextIO

import numpy as np

__all__ = [
    "TERMINAL",
    "CyclicModelError",
    "EmpiricalMDP",
    "QTable",
    "Policy",
    "PolicyValue",
    "estimate_mdp",
    "value_iterate",
    "greedy_policy",
    "policy_value",
    "sample_trajectories",
    "dump_mdp",
    "load_mdp",
]


class _Terminal:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "TERMINAL"

    def __reduce__(self):
        return (_Terminal, ())


TERMINAL = _Terminal()


class CyclicModelError(ValueError):
    """Undiscounted backup requested on a model with a nonterminal cycle."""


@dataclass(frozen=True, eq=False)
class EmpiricalMDP:
    """Counts gathered from trajectories.

    ``transition_counts`` has shape ``(S, A, S + 1)``; the last column of the
    successor axis is the terminal marker. Probabilities and mean rewards are
    derived from the counts on access.
    """

    states: tuple
    actions: tuple
    transition_counts: np.ndarray
    reward_sums: np.ndarray
    _state_index: dict = field(init=False, repr=False)
    _action_index: dict = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "_state_index", {s: i for i, s in enumerate(self.states)})
        object.__setattr__(self, "_action_index", {a: i for i, a in enumerate(self.actions)})
        self.transition_counts.setflags(write=False)
        self.reward_sums.setflags(write=False)

    @property
    def n_states(self) -> int:
        return len(self.states)

    @property
    def n_actions(self) -> int:
        return len(self.actions)

    @property
    def terminal_index(self) -> int:
        return len(self.states)

    @property
    def visit_counts(self) -> np.ndarray:
        return self.transition_counts.sum(axis=2)

    @property
    def observed(self) -> np.ndarray:
        return self.visit_counts > 0

    @property
    def transition_probs(self) -> np.ndarray:
        visits = self.visit_counts[:, :, None]
        with np.errstate(invalid="ignore", divide="ignore"):
            probs = np.where(visits > 0, self.transition_counts / np.maximum(visits, 1), 0.0)
        return probs

    @property
    def rewards(self) -> np.ndarray:
        visits = self.visit_counts
        return np.where(visits > 0, self.reward_sums / np.maximum(visits, 1), 0.0)

    def state_index(self, state) -> int:
        if state is TERMINAL:
            return self.terminal_index
        return self._state_index[state]

    def action_index(self, action) -> int:
        return self._action_index[action]

    def visits(self, state, action) -> int:
        return int(self.visit_counts[self.state_index(state), self.action_index(action)])

    def transition_prob(self, state, action, next_state) -> float:
        s, a = self.state_index(state), self.action_index(action)
        n = self.visit_counts[s, a]
        if n == 0:
            raise KeyError(f"({state!r}, {action!r}) was never observed")
        return float(self.transition_counts[s, a, self.state_index(next_state)] / n)

    def reward(self, state, action) -> float:
        s, a = self.state_index(state), self.action_index(action)
        n = self.visit_counts[s, a]
        if n == 0:
            raise KeyError(f"({state!r}, {action!r}) was never observed")
        return float(self.reward_sums[s, a] / n)

    def observed_actions(self, state) -> list:
        row = self.observed[self.state_index(state)]
        return [self.actions[i] for i in np.flatnonzero(row)]

    def scaled(self, factor: float) -> "EmpiricalMDP":
        """Same transitions, every reward multiplied by ``factor``."""
        return EmpiricalMDP(self.states, self.actions, self.transition_counts.copy(),
                            self.reward_sums * factor)

    def successor_graph(self) -> np.ndarray:
        """Boolean ``(S, S)`` adjacency of observed nonterminal transitions."""
        return self.transition_counts[:, :, :-1].sum(axis=1) > 0


def estimate_mdp(trajectories: Iterable[Sequence[tuple]], states: Sequence[Hashable],
                 actions: Sequence[Hashable]) -> EmpiricalMDP:
    """Count transitions and accumulate rewards over a corpus of trajectories."""
    states = tuple(states)
    actions = tuple(actions)
    s_index = {s: i for i, s in enumerate(states)}
    a_index = {a: i for i, a in enumerate(actions)}
    n_s, n_a = len(states), len(actions)
    counts = np.zeros((n_s, n_a, n_s + 1), dtype=np.int64)
    reward_sums = np.zeros((n_s, n_a), dtype=float)

    for k, trajectory in enumerate(trajectories):
        try:
            idx = [(s_index[s], a_index[a], float(r)) for s, a, r in trajectory]
        except KeyError as exc:
            raise ValueError(f"trajectory {k}: unknown state or action {exc.args[0]!r}") from None
        for i, (s, a, r) in enumerate(idx):
            nxt = idx[i + 1][0] if i + 1 < len(idx) else n_s
            counts[s, a, nxt] += 1
            reward_sums[s, a] += r

    return EmpiricalMDP(states, actions, counts, reward_sums)


@dataclass(frozen=True, eq=False)
class QTable:
    """Q-values for observed pairs; unobserved pairs hold NaN."""

    mdp: EmpiricalMDP
    q: np.ndarray
    gamma: float
    sweeps: int

    def __post_init__(self):
        self.q.setflags(write=False)

    @property
    def observed(self) -> np.ndarray:
        return ~np.isnan(self.q)

    def __getitem__(self, key) -> float:
        state, action = key
        value = self.q[self.mdp.state_index(state), self.mdp.action_index(action)]
        if np.isnan(value):
            raise KeyError(f"({state!r}, {action!r}) is unobserved")
        return float(value)

    def values(self) -> np.ndarray:
        """State values ``max_a Q(s, a)``; zero where no action was observed."""
        return _max_or_zero(self.q)


def _max_or_zero(q: np.ndarray) -> np.ndarray:
    has_any = ~np.all(np.isnan(q), axis=1)
    out = np.zeros(q.shape[0])
    out[has_any] = np.nanmax(q[has_any], axis=1)
    return out


def _has_cycle(adjacency: np.ndarray) -> bool:
    # Kahn's algorithm; self-loops count as cycles.
    indegree = adjacency.sum(axis=0).astype(int)
    ready = list(np.flatnonzero(indegree == 0))
    removed = 0
    while ready:
        node = ready.pop()
        removed += 1
        for nxt in np.flatnonzero(adjacency[node]):
            indegree[nxt] -= 1
            if indegree[nxt] == 0:
                ready.append(nxt)
    return removed < adjacency.shape[0]


def _check_gamma(mdp: EmpiricalMDP, gamma: float):
    if not 0.0 <= gamma <= 1.0:
        raise ValueError(f"gamma must lie in [0, 1], got {gamma}")
    if gamma == 1.0 and _has_cycle(mdp.successor_graph()):
        raise CyclicModelError("gamma=1 requires an acyclic transition graph; "
                               "the observed model contains a cycle")


def value_iterate(mdp: EmpiricalMDP, gamma: float = 1.0, threshold: float = 1e-9,
                  max_sweeps: int = 100_000) -> QTable:
    """Synchronous Q-value iteration over the observed pairs.

    ``sweeps`` counts the sweeps whose max-norm change was at least
    ``threshold``; one further sweep confirms convergence.
    """
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    _check_gamma(mdp, gamma)

    observed = mdp.observed
    probs = mdp.transition_probs[:, :, :-1]  # terminal successor contributes 0
    rewards = mdp.rewards
    q = np.where(observed, 0.0, np.nan)
    sweeps = 0
    for _ in range(max_sweeps):
        values = _max_or_zero(q)
        new_q = np.where(observed, rewards + gamma * probs @ values, np.nan)
        delta = np.nanmax(np.abs(new_q - q)) if observed.any() else 0.0
        q = new_q
        if delta < threshold:
            break
        sweeps += 1
    else:
        raise RuntimeError(f"value iteration did not converge in {max_sweeps} sweeps")
    return QTable(mdp, q, float(gamma), sweeps)


@dataclass(frozen=True)
class Policy:
    """Allowed-action subsets per state.

    A tie set with more than one action is resolved uniformly at random when
    the policy is executed. ``unlearned`` names states whose choice set is the
    full allowed set because no action there was ever observed.
    """

    choices: Mapping
    unlearned: frozenset = frozenset()

    def __post_init__(self):
        frozen = {s: frozenset(a) for s, a in self.choices.items()}
        for s, acts in frozen.items():
            if not acts:
                raise ValueError(f"empty choice set at {s!r}")
        object.__setattr__(self, "choices", frozen)
        object.__setattr__(self, "unlearned", frozenset(self.unlearned))

    @property
    def deterministic(self) -> bool:
        return all(len(a) == 1 for a in self.choices.values())

    def __getitem__(self, state) -> frozenset:
        return self.choices[state]

    def __contains__(self, state) -> bool:
        return state in self.choices

    def get(self, state, default=None):
        return self.choices.get(state, default)

    def action(self, state):
        """The single action at ``state``; fails on tie sets."""
        (a,) = self.choices[state]
        return a


def greedy_policy(qtable: QTable, tie_epsilon: float = 1e-9,
                  allowed: Mapping | None = None) -> Policy:
    """Pick every observed action within ``tie_epsilon`` of the best Q-value.

    ``allowed`` maps states to their permitted actions. States present there
    with no observed action get the full allowed set and are flagged unlearned;
    states with a single allowed action always get that action.
    """
    if tie_epsilon < 0:
        raise ValueError("tie_epsilon must be non-negative")
    mdp = qtable.mdp
    choices = {}
    unlearned = set()
    for s_idx, state in enumerate(mdp.states):
        permitted = None if allowed is None else allowed.get(state)
        if permitted is not None and len(permitted) == 1:
            choices[state] = frozenset(permitted)
            continue
        row = qtable.q[s_idx]
        candidates = [i for i in np.flatnonzero(~np.isnan(row))
                      if permitted is None or mdp.actions[i] in permitted]
        if candidates:
            best = max(row[i] for i in candidates)
            choices[state] = frozenset(mdp.actions[i] for i in candidates
                                       if row[i] >= best - tie_epsilon)
        elif permitted:
            choices[state] = frozenset(permitted)
            unlearned.add(state)
    return Policy(choices, frozenset(unlearned))


@dataclass(frozen=True, eq=False)
class PolicyValue:
    """State values of a policy under a model.

    ``unsupported`` lists states where the policy has no observed action, so
    their value is pinned to 0.
    """

    mdp: EmpiricalMDP
    values: np.ndarray
    unsupported: frozenset

    def __getitem__(self, state) -> float:
        return float(self.values[self.mdp.state_index(state)])


def policy_value(mdp: EmpiricalMDP, policy: Policy, gamma: float = 1.0,
                 threshold: float = 1e-12, max_sweeps: int = 100_000) -> PolicyValue:
    """Evaluate ``policy`` on ``mdp``; tie sets are averaged uniformly."""
    _check_gamma(mdp, gamma)
    n_s, n_a = mdp.n_states, mdp.n_actions
    observed = mdp.observed
    weights = np.zeros((n_s, n_a))
    unsupported = set()
    for state, acts in policy.choices.items():
        if state not in mdp._state_index:
            continue
        s = mdp.state_index(state)
        idx = [mdp.action_index(a) for a in acts if a in mdp._action_index]
        idx = [a for a in idx if observed[s, a]]
        if idx:
            weights[s, idx] = 1.0 / len(idx)
        else:
            unsupported.add(state)

    probs = mdp.transition_probs[:, :, :-1]
    p_pi = np.einsum("sa,sat->st", weights, probs)
    r_pi = np.einsum("sa,sa->s", weights, mdp.rewards)
    values = np.zeros(n_s)
    for _ in range(max_sweeps):
        new_values = r_pi + gamma * p_pi @ values
        delta = np.max(np.abs(new_values - values)) if n_s else 0.0
        values = new_values
        if delta < threshold:
            break
    else:
        raise RuntimeError(f"policy evaluation did not converge in {max_sweeps} sweeps")
    return PolicyValue(mdp, values, frozenset(unsupported))


def sample_trajectories(mdp: EmpiricalMDP, start, behavior: Policy, n: int,
                        rng: np.random.Generator, max_steps: int = 1000) -> list[list[tuple]]:
    """Roll out ``behavior`` in the estimated model.

    Each step's reward is the model's mean reward for the pair. Actions in a
    tie set that were never observed are skipped; a state with no observed
    behavior action ends the episode.
    """
    probs = mdp.transition_probs
    rewards = mdp.rewards
    observed = mdp.observed
    options = {}
    for state, acts in behavior.choices.items():
        if state in mdp._state_index:
            s = mdp.state_index(state)
            options[s] = sorted(mdp.action_index(a) for a in acts
                                if a in mdp._action_index and observed[s, mdp.action_index(a)])
    out = []
    start_idx = mdp.state_index(start)
    for _ in range(n):
        s = start_idx
        steps = []
        for _ in range(max_steps):
            acts = options.get(s)
            if not acts:
                break
            a = acts[rng.integers(len(acts))] if len(acts) > 1 else acts[0]
            steps.append((mdp.states[s], mdp.actions[a], float(rewards[s, a])))
            s = int(rng.choice(mdp.n_states + 1, p=probs[s, a]))
            if s == mdp.terminal_index:
                break
        else:
            raise RuntimeError("rollout exceeded max_steps")
        out.append(steps)
    return out


def dump_mdp(mdp: EmpiricalMDP, fp: TextIO, state_format=str, action_format=str):
    """Write the counts as a line-oriented text snapshot."""
    fp.write("# empirical MDP snapshot\n")
    for s in mdp.states:
        fp.write(f"state {state_format(s)}\n")
    for a in mdp.actions:
        fp.write(f"action {action_format(a)}\n")
    visits = mdp.visit_counts
    for s_idx, s in enumerate(mdp.states):
        for a_idx, a in enumerate(mdp.actions):
            if visits[s_idx, a_idx] == 0:
                continue
            fp.write(f"pair {state_format(s)} {action_format(a)} {int(visits[s_idx, a_idx])} "
                     f"{float(mdp.reward_sums[s_idx, a_idx])!r}\n")
            for t_idx in np.flatnonzero(mdp.transition_counts[s_idx, a_idx]):
                nxt = "TERMINAL" if t_idx == mdp.terminal_index else state_format(mdp.states[t_idx])
                fp.write(f"next {state_format(s)} {action_format(a)} {nxt} "
                         f"{int(mdp.transition_counts[s_idx, a_idx, t_idx])}\n")


def load_mdp(fp: TextIO, parse_state=str, parse_action=str) -> EmpiricalMDP:
    """Inverse of :func:`dump_mdp`."""
    states, actions, pairs, nexts = [], [], [], []
    for lineno, line in enumerate(fp, 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        kind, *rest = line.split()
        try:
            if kind == "state":
                states.append(parse_state(rest[0]))
            elif kind == "action":
                actions.append(parse_action(rest[0]))
            elif kind == "pair":
                pairs.append((parse_state(rest[0]), parse_action(rest[1]), int(rest[2]), float(rest[3])))
            elif kind == "next":
                nxt = TERMINAL if rest[2] == "TERMINAL" else parse_state(rest[2])
                nexts.append((parse_state(rest[0]), parse_action(rest[1]), nxt, int(rest[3])))
            else:
                raise ValueError(f"unknown record kind {kind!r}")
        except (IndexError, ValueError) as exc:
            raise ValueError(f"line {lineno}: {exc}") from None

    s_index = {s: i for i, s in enumerate(states)}
    a_index = {a: i for i, a in enumerate(actions)}
    counts = np.zeros((len(states), len(actions), len(states) + 1), dtype=np.int64)
    reward_sums = np.zeros((len(states), len(actions)))
    for s, a, nxt, c in nexts:
        t = len(states) if nxt is TERMINAL else s_index[nxt]
        counts[s_index[s], a_index[a], t] = c
    for s, a, visits, rsum in pairs:
        if counts[s_index[s], a_index[a]].sum() != visits:
            raise ValueError(f"visit count mismatch for ({s!r}, {a!r})")
        reward_sums[s_index[s], a_index[a]] = rsum
    return EmpiricalMDP(tuple(states), tuple(actions), counts, reward_sums)
