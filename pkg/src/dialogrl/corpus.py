"""Line-delimited JSON trajectory logs.

One record per line, keys in a fixed order::

    {"dialogue_id": ..., "task_id": ..., "seed": ..., "policy_mode": ...,
     "steps": [{"state": "0100000", "action": "GreetU", "reward": 0.0}, ...],
     "rewards": {"binary": ..., "weak": ..., "asr": ..., "web_feedback": ...}}
"""
from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable, Iterator

from .domain import (
    STATE_FIELDS,
    STATE_RANGES,
    Action,
    DialogueState,
    RewardBundle,
    reachable_states,
)

__all__ = ["CorpusError", "Step", "TrajectoryRecord", "Corpus", "append", "load", "dump_line"]


class CorpusError(ValueError):
    pass


@dataclass(frozen=True)
class Step:
    state: DialogueState
    action: Action
    reward: float = 0.0


@dataclass(frozen=True)
class TrajectoryRecord:
    dialogue_id: str
    task_id: int
    seed: str
    steps: tuple
    rewards: RewardBundle
    policy_mode: str = "exploratory"

    def __post_init__(self):
        object.__setattr__(self, "steps", tuple(self.steps))
        validate(self)

    @property
    def exploratory(self) -> bool:
        return self.policy_mode == "exploratory"

    @property
    def user_turns(self) -> int:
        return sum(1 for st in self.steps if st.action.elicits_speech)

    def to_dict(self) -> dict:
        return {
            "dialogue_id": self.dialogue_id,
            "task_id": self.task_id,
            "seed": self.seed,
            "policy_mode": self.policy_mode,
            "steps": [{"state": st.state.digits, "action": st.action.name, "reward": st.reward}
                      for st in self.steps],
            "rewards": {"binary": self.rewards.binary, "weak": self.rewards.weak,
                        "asr": self.rewards.asr, "web_feedback": self.rewards.web_feedback},
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TrajectoryRecord":
        try:
            steps = tuple(Step(_parse_state(s["state"]), Action.parse(s["action"]), float(s["reward"]))
                          for s in data["steps"])
            r = data["rewards"]
            rewards = RewardBundle(int(r["binary"]), int(r["weak"]), float(r["asr"]),
                                   int(r["web_feedback"]))
            return cls(str(data["dialogue_id"]), int(data["task_id"]), str(data["seed"]), steps,
                       rewards, str(data["policy_mode"]))
        except KeyError as exc:
            raise CorpusError(f"missing field {exc.args[0]!r}") from None
        except (TypeError, ValueError) as exc:
            raise CorpusError(str(exc)) from None


def _parse_state(digits) -> DialogueState:
    if not isinstance(digits, str) or len(digits) != 7 or not digits.isdigit():
        raise CorpusError(f"state must be a 7-digit string, got {digits!r}")
    for name, ch in zip(STATE_FIELDS, digits):
        lo, hi = STATE_RANGES[name]
        if not lo <= int(ch) <= hi:
            raise CorpusError(f"state {digits}: {name} out of range")
    return DialogueState.from_digits(digits)


def validate(record: TrajectoryRecord):
    """Reject records breaking the log invariants, naming the offending field."""
    if not record.steps:
        raise CorpusError("steps: empty trajectory")
    mode = record.policy_mode
    if mode != "exploratory" and not (mode.startswith("fixed:") and len(mode) > 6):
        raise CorpusError(f"policy_mode: expected 'exploratory' or 'fixed:<name>', got {mode!r}")
    reachable = reachable_states()
    for i, st in enumerate(record.steps):
        for name, v in zip(STATE_FIELDS, st.state):
            lo, hi = STATE_RANGES[name]
            if not lo <= v <= hi:
                raise CorpusError(f"steps[{i}].state: {name} out of range ({v})")
        if st.state not in reachable:
            raise CorpusError(f"steps[{i}].state: {st.state.digits} is not a reachable state")
        if not isinstance(st.action, Action):
            raise CorpusError(f"steps[{i}].action: not an action")
        if i < len(record.steps) - 1 and st.reward != 0:
            raise CorpusError(f"steps[{i}].reward: nonterminal steps carry zero reward")
    if record.steps[-1].action is not Action.Tell:
        raise CorpusError("steps: last action must be Tell")


def dump_line(record: TrajectoryRecord) -> str:
    return json.dumps(record.to_dict(), separators=(",", ":")) + "\n"


def append(record: TrajectoryRecord, sink: str | Path | IO[str]):
    """Append one record as a single line."""
    validate(record)
    line = dump_line(record)
    if hasattr(sink, "write"):
        sink.write(line)
        return
    with open(sink, "a") as fp:
        fp.write(line)


def write(records: Iterable[TrajectoryRecord], path: str | Path):
    """Write a fresh log containing ``records``."""
    with open(path, "w") as fp:
        for record in records:
            append(record, fp)


class Corpus(list):
    """Validated records in file order."""

    def tally(self) -> Counter:
        """Visits per (state, action) pair."""
        counts = Counter()
        for record in self:
            for st in record.steps:
                counts[st.state, st.action] += 1
        return counts

    @property
    def exploratory(self) -> bool:
        return all(r.exploratory for r in self)


def _iter_lines(source) -> Iterator[str]:
    if hasattr(source, "read"):
        yield from source
        return
    with open(source) as fp:
        yield from fp


def load(source: str | Path | IO[str]) -> Corpus:
    corpus = Corpus()
    for lineno, line in enumerate(_iter_lines(source), 1):
        if not line.strip():
            continue
        try:
            data = json.loads(line)
            if not isinstance(data, dict):
                raise CorpusError("record is not an object")
            corpus.append(TrajectoryRecord.from_dict(data))
        except (json.JSONDecodeError, CorpusError) as exc:
            raise CorpusError(f"line {lineno}: {exc}") from None
    return corpus
