"""Slot-filling dialogue machine for the activity-finder domain.

The machine keeps a rich operations vector (per-slot value, confidence, tries and
grammar) and exposes a compact 7-feature learning state computed from it. Which
actions are legal in each learning state comes from the bundled choice table
(states with two candidate actions) plus fixed rules for the remaining states.

Grammar codes follow the state feature: 0 = nonrestrictive, 1 = restrictive.
"""
from __future__ import annotations

import csv
import enum
from collections import deque
from dataclasses import dataclass, field, replace
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

NONRESTRICTIVE = 0
RESTRICTIVE = 1

ATTRIBUTES = (1, 2, 3)
ATTRIBUTE_NAMES = {1: "activity", 2: "location", 3: "time"}
DONE = 4

ACTIVITIES = ("amusement parks", "aquariums", "cruises", "historic sites", "museums",
              "parks", "theaters", "wineries", "zoos")
TIMES = ("morning", "afternoon", "evening")

CONFIRMED = 3
DISCONFIRMED = 4


class IllegalActionError(ValueError):
    pass


class Action(enum.Enum):
    """System actions with their attribute, kind, prompt type and grammar."""

    GreetS = (1, "ask", "directive", RESTRICTIVE)
    GreetU = (1, "ask", "open", NONRESTRICTIVE)
    ReAsk1S = (1, "reask", "directive", RESTRICTIVE)
    ReAsk1M = (1, "reask", "directive", NONRESTRICTIVE)
    Ask2S = (2, "ask", "directive", RESTRICTIVE)
    Ask2U = (2, "ask", "open", NONRESTRICTIVE)
    ReAsk2S = (2, "reask", "directive", RESTRICTIVE)
    ReAsk2M = (2, "reask", "directive", NONRESTRICTIVE)
    Ask3S = (3, "ask", "directive", RESTRICTIVE)
    ReAsk3S = (3, "reask", "directive", RESTRICTIVE)
    ExpConf1 = (1, "confirm", "directive", RESTRICTIVE)
    ExpConf2 = (2, "confirm", "directive", RESTRICTIVE)
    ExpConf3 = (3, "confirm", "directive", RESTRICTIVE)
    NoConf = (None, "noconf", None, None)
    Tell = (None, "tell", None, None)

    def __init__(self, attribute, kind, prompt_type, grammar):
        self.attribute = attribute
        self.kind = kind
        self.prompt_type = prompt_type
        self.grammar = grammar

    @property
    def elicits_speech(self) -> bool:
        return self.kind in ("ask", "reask", "confirm")

    @property
    def initiative(self) -> str | None:
        """system, user or mixed, for ask-type actions."""
        if self.kind not in ("ask", "reask"):
            return None
        if self.grammar == RESTRICTIVE:
            return "system"
        return "user" if self.prompt_type == "open" else "mixed"

    def __repr__(self):
        return f"Action.{self.name}"

    @classmethod
    def parse(cls, name: str) -> "Action":
        try:
            return cls[name]
        except KeyError:
            raise ValueError(f"unknown action {name!r}") from None


STATE_FIELDS = ("greet", "attribute", "confidence_confirmed", "value", "tries", "grammar", "history")
STATE_RANGES = {
    "greet": (0, 1),
    "attribute": (1, 4),
    "confidence_confirmed": (0, 4),
    "value": (0, 1),
    "tries": (0, 2),
    "grammar": (0, 1),
    "history": (0, 1),
}


class DialogueState(NamedTuple):
    greet: int
    attribute: int
    confidence_confirmed: int
    value: int
    tries: int
    grammar: int
    history: int

    @property
    def digits(self) -> str:
        return "".join(str(v) for v in self)

    def __str__(self):
        return self.digits

    @classmethod
    def from_digits(cls, digits: str) -> "DialogueState":
        digits = digits.replace(" ", "")
        if len(digits) != 7 or not digits.isdigit():
            raise ValueError(f"state must be 7 digits, got {digits!r}")
        values = [int(ch) for ch in digits]
        for name, v in zip(STATE_FIELDS, values):
            lo, hi = STATE_RANGES[name]
            if not lo <= v <= hi:
                raise ValueError(f"{name} out of range: {v}")
        return cls(*values)


INITIAL_STATE = DialogueState(0, 1, 0, 0, 0, 0, 0)
DONE_STATE = DialogueState(1, 4, 0, 0, 0, 0, 0)


@dataclass(frozen=True)
class Slot:
    value: str | None = None
    confidence: int | None = None
    tries: int = 0
    grammar: int | None = None


@dataclass(frozen=True)
class OperationsVector:
    """Internal dialogue record: greeting flag, current attribute, three slots."""

    greeted: bool = False
    attribute: int = 1
    slots: tuple = (Slot(), Slot(), Slot())

    def slot(self, attribute: int) -> Slot:
        return self.slots[attribute - 1]

    def with_slot(self, attribute: int, **changes) -> "OperationsVector":
        slots = list(self.slots)
        slots[attribute - 1] = replace(slots[attribute - 1], **changes)
        return replace(self, slots=tuple(slots))

    def moved_on(self) -> "OperationsVector":
        return replace(self, attribute=min(self.attribute + 1, DONE))


@dataclass(frozen=True)
class AsrResult:
    """Recognizer output for one user turn.

    ``slots`` maps attribute number to perceived value. ``confidence`` is the raw
    utterance score (None when nothing was heard). ``answer`` is set on yes/no
    turns only.
    """

    slots: Mapping = field(default_factory=dict)
    confidence: float | None = None
    answer: str | None = None


def bin_confidence(raw: float, thresholds: tuple[float, float]) -> int:
    """Map a raw score to low/medium/high (0/1/2)."""
    t_low, t_high = thresholds
    if t_low > t_high:
        raise ValueError("t_low must not exceed t_high")
    if raw < t_low:
        return 0
    if raw < t_high:
        return 1
    return 2


def calibrate_thresholds(samples: Sequence[float]) -> tuple[float, float]:
    """Thresholds splitting ``samples`` into three equally populated bins."""
    ordered = np.sort(np.asarray(samples, dtype=float))
    n = len(ordered)
    if n < 3:
        raise ValueError("need at least 3 samples")
    return float(ordered[n // 3]), float(ordered[(2 * n) // 3])


DEFAULT_THRESHOLDS = (1 / 3, 2 / 3)


# -- choice table ---------------------------------------------------------

def _read_choice_table(lines: Iterable[str]) -> dict:
    table = {}
    for lineno, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        digits, *names = line.split()
        if len(names) != 2:
            raise ValueError(f"line {lineno}: expected two actions, got {names}")
        state = DialogueState.from_digits(digits)
        if state in table:
            raise ValueError(f"line {lineno}: duplicate state {digits}")
        table[state] = tuple(Action.parse(n) for n in names)
    return table


@lru_cache(maxsize=None)
def _bundled_choice_rows() -> Mapping:
    text = resources.files("dialogrl").joinpath("data/choice_table.txt").read_text()
    return _read_choice_table(text.splitlines())


def load_choice_table(path: str | Path | None = None) -> dict:
    """Rows of the choice table: choice-state -> its two actions."""
    if path is None:
        return dict(_bundled_choice_rows())
    with open(path) as fp:
        return _read_choice_table(fp)


def fixed_action(state: DialogueState) -> Action:
    """The action for a reachable state that is not a choice-state."""
    g, a, c, v, t, m, h = state
    if a == DONE:
        return Action.Tell
    if a == 3 and v == 0 and c == 0:
        if t == 0:
            return Action.Ask3S
        if t == 1:
            return Action.ReAsk3S
    if v == 1 and t == 1:
        # value obtained on a reask: attributes 1 and 2 verify it, time is accepted
        return {1: Action.ExpConf1, 2: Action.ExpConf2, 3: Action.NoConf}[a]
    raise IllegalActionError(f"state {state.digits} has no defined action")


def allowed_actions(state: DialogueState) -> tuple:
    rows = _bundled_choice_rows()
    if state in rows:
        return rows[state]
    return (fixed_action(state),)


def is_choice_state(state: DialogueState) -> bool:
    return state in _bundled_choice_rows()


# -- state estimation -----------------------------------------------------

def compute_history(ops: OperationsVector) -> int:
    """0 if any earlier attribute went badly, else 1.

    An earlier attribute went badly when it has no value, has a value held with
    zero confidence, or needed a reask before it was obtained.
    """
    for j in range(1, min(ops.attribute, DONE)):
        slot = ops.slot(j)
        if slot.value is None or slot.confidence == 0 or slot.tries >= 1:
            return 0
    return 1


def estimate_state(ops: OperationsVector) -> DialogueState:
    if not ops.greeted:
        return INITIAL_STATE
    a = ops.attribute
    if a == DONE:
        return DONE_STATE
    slot = ops.slot(a)
    # history carries no information while the first attribute is worked on
    h = 0 if a == 1 else compute_history(ops)
    if slot.value is not None:
        if slot.tries == 0:
            return DialogueState(1, a, slot.confidence, 1, 0, slot.grammar, h)
        return DialogueState(1, a, slot.confidence, 1, 1, 0, h)
    if slot.confidence == DISCONFIRMED:
        return DialogueState(1, a, DISCONFIRMED, 0, slot.tries, 0, h)
    if slot.grammar is not None:  # asked, nothing obtained
        return DialogueState(1, a, 0, 0, slot.tries + 1, 0, h)
    return DialogueState(1, a, 0, 0, 0, 0, h)


# -- transitions ----------------------------------------------------------

def advance(ops: OperationsVector, action: Action, asr: AsrResult | None = None,
            thresholds: tuple[float, float] = DEFAULT_THRESHOLDS) -> OperationsVector:
    """Apply ``action`` and the recognizer's response to it."""
    state = estimate_state(ops)
    if action not in allowed_actions(state):
        raise IllegalActionError(f"action {action.name} is not allowed in state {state.digits}")
    if action.elicits_speech and asr is None:
        raise ValueError(f"{action.name} needs a recognizer result")

    if action is Action.Tell:
        return ops
    if action is Action.NoConf:
        return ops.moved_on()
    if action.kind == "confirm":
        return _apply_confirmation(ops, asr)
    return _apply_ask(ops, action, asr, thresholds)


def _apply_ask(ops, action, asr, thresholds):
    a = ops.attribute
    ops = replace(ops, greeted=True)
    tries = ops.slot(a).tries + (1 if action.kind == "reask" else 0)
    heard = dict(asr.slots)
    conf = None if asr.confidence is None else bin_confidence(asr.confidence, thresholds)

    # over-captured later slots; earlier slots are never revisited
    if action.grammar == NONRESTRICTIVE:
        for j in range(a + 1, DONE):
            if j in heard and conf is not None:
                ops = ops.with_slot(j, value=heard[j], confidence=conf, grammar=action.grammar)

    if a in heard and conf is not None:
        ops = ops.with_slot(a, value=heard[a], confidence=conf, tries=tries, grammar=action.grammar)
        if tries >= 2:
            return ops.moved_on()
        return ops
    ops = ops.with_slot(a, value=None, confidence=None, tries=tries, grammar=action.grammar)
    if tries >= 1:
        return ops.moved_on()
    return ops


def _apply_confirmation(ops, asr):
    a = ops.attribute
    slot = ops.slot(a)
    if asr.answer == "yes":
        return ops.with_slot(a, confidence=CONFIRMED).moved_on()
    if asr.answer == "no":
        ops = ops.with_slot(a, value=None, confidence=DISCONFIRMED)
        if a == 3 or slot.tries >= 2:
            return ops.moved_on()
        return ops
    # nothing heard: keep the unverified value
    return ops.moved_on()


# -- reachability ---------------------------------------------------------

def _outcome_classes(ops: OperationsVector, action: Action):
    """Every recognizer outcome class that can follow ``action``."""
    if not action.elicits_speech:
        yield None
        return
    if action.kind == "confirm":
        for answer in ("yes", "no", None):
            yield AsrResult(answer=answer)
        return
    a = ops.attribute
    extra = list(range(a + 1, DONE)) if action.grammar == NONRESTRICTIVE else []
    yield AsrResult()
    for bits in range(2 ** (1 + len(extra))):
        heard = {}
        if bits & 1:
            heard[a] = "x"
        for k, j in enumerate(extra):
            if bits >> (k + 1) & 1:
                heard[j] = "x"
        if not heard:
            continue
        for raw in (0.0, 0.5, 1.0):
            yield AsrResult(slots=heard, confidence=raw)


@dataclass(frozen=True)
class Reachability:
    states: frozenset
    choice_states: frozenset
    max_user_turns: int


@lru_cache(maxsize=None)
def reachability() -> Reachability:
    """Exhaustive closure over operations vectors from the initial one."""
    start = OperationsVector()
    seen = {start: 0}
    states = set()
    max_turns = 0
    queue = deque([start])
    while queue:
        ops = queue.popleft()
        turns = seen[ops]
        state = estimate_state(ops)
        states.add(state)
        for action in allowed_actions(state):
            if action is Action.Tell:
                max_turns = max(max_turns, turns)
                continue
            spoken = turns + (1 if action.elicits_speech else 0)
            for asr in _outcome_classes(ops, action):
                nxt = advance(ops, action, asr)
                if nxt not in seen or seen[nxt] < spoken:
                    seen[nxt] = spoken
                    queue.append(nxt)
    choice = frozenset(s for s in states if is_choice_state(s))
    return Reachability(frozenset(states), choice, max_turns)


def reachable_states() -> frozenset:
    return reachability().states


def choice_table() -> dict:
    """Allowed actions for every reachable state, choice-states first in file order."""
    rows = _bundled_choice_rows()
    table = {s: acts for s, acts in rows.items()}
    for s in sorted(reachable_states()):
        if s not in table:
            table[s] = (fixed_action(s),)
    return table


def state_table() -> tuple:
    """Reachable states in a fixed order, used to index the learning model."""
    return tuple(sorted(reachable_states()))


ACTION_TABLE = tuple(Action)


# -- tasks, queries and rewards -------------------------------------------

WILDCARD = None


@dataclass(frozen=True)
class TaskSpec:
    activity: str
    location: str
    time: str

    def __post_init__(self):
        if self.activity not in ACTIVITIES:
            raise ValueError(f"unknown activity {self.activity!r}")
        if self.time not in TIMES:
            raise ValueError(f"unknown time {self.time!r}")

    def values(self) -> tuple:
        return (self.activity, self.location, self.time)


TASKS = {
    1: TaskSpec("museums", "Morristown", "afternoon"),
    2: TaskSpec("cruises", "Cape May", "evening"),
    3: TaskSpec("historic sites", "Stanhope", "morning"),
    4: TaskSpec("wineries", "Lambertville", "morning"),
    5: TaskSpec("theaters", "Florham Park", "evening"),
    6: TaskSpec("parks", "Jersey City", "afternoon"),
}


def query_from_ops(ops: OperationsVector) -> tuple:
    """Database binding: each slot's value, or WILDCARD when unobtained."""
    return tuple(ops.slot(a).value for a in ATTRIBUTES)


@dataclass(frozen=True)
class RewardBundle:
    binary: int
    weak: int
    asr: float
    web_feedback: int = 0

    def __post_init__(self):
        if self.binary not in (-1, 1):
            raise ValueError(f"binary out of range: {self.binary}")
        if self.weak not in (-1, 0, 1, 2, 3):
            raise ValueError(f"weak out of range: {self.weak}")
        if not (0 <= self.asr <= 3 and float(self.asr * 2).is_integer()):
            raise ValueError(f"asr out of range: {self.asr}")
        if self.web_feedback not in (-1, 0, 1):
            raise ValueError(f"web_feedback out of range: {self.web_feedback}")
        if self.binary == 1 and (self.weak != 3 or self.asr != 3):
            raise ValueError("binary completion implies weak=3 and asr=3")

    def measure(self, name: str) -> float:
        return {"binary": self.binary, "weak": self.weak, "asr": self.asr,
                "web_feedback": self.web_feedback}[name]


MEASURES = ("binary", "weak", "asr", "web_feedback")


def evaluate_rewards(query: Sequence, task: TaskSpec) -> RewardBundle:
    correct = wildcards = wrong = 0
    for got, want in zip(query, task.values()):
        if got is WILDCARD:
            wildcards += 1
        elif got == want:
            correct += 1
        else:
            wrong += 1
    binary = 1 if correct == 3 else -1
    weak = correct if wrong == 0 else -1
    return RewardBundle(binary=binary, weak=weak, asr=correct + 0.5 * wildcards)


# -- activity database ----------------------------------------------------

class ActivityRow(NamedTuple):
    activity: str
    location: str
    time: str
    name: str


@dataclass(frozen=True)
class ActivityDatabase:
    rows: tuple

    @property
    def locations(self) -> tuple:
        return tuple(sorted({r.location for r in self.rows}))


def _read_database(fp) -> ActivityDatabase:
    reader = csv.DictReader(fp, delimiter="\t")
    rows = []
    for lineno, rec in enumerate(reader, 2):
        try:
            row = ActivityRow(rec["activity"], rec["location"], rec["time"], rec["name"])
        except KeyError as exc:
            raise ValueError(f"line {lineno}: missing column {exc}") from None
        if row.activity not in ACTIVITIES or row.time not in TIMES or not row.location:
            raise ValueError(f"line {lineno}: field outside its domain: {row}")
        rows.append(row)
    return ActivityDatabase(tuple(rows))


@lru_cache(maxsize=None)
def _bundled_database() -> ActivityDatabase:
    with resources.files("dialogrl").joinpath("data/activities.tsv").open() as fp:
        return _read_database(fp)


def load_database(path: str | Path | None = None) -> ActivityDatabase:
    if path is None:
        return _bundled_database()
    with open(path, newline="") as fp:
        return _read_database(fp)


def query_database(db: ActivityDatabase, query: Sequence) -> list:
    return [row for row in db.rows
            if all(want is WILDCARD or got == want
                   for got, want in zip((row.activity, row.location, row.time), query))]


def task_grid(db: ActivityDatabase | None = None) -> list:
    """Every (activity, town, time) combination over the database vocabulary."""
    db = db or load_database()
    return [TaskSpec(a, loc, t) for a in ACTIVITIES for loc in db.locations for t in TIMES]


# -- prompts (transcripts only) -------------------------------------------

PROMPTS = {
    Action.GreetS: "Hello, this is the activity guide. Which kind of activity are you looking for? "
                   "Say 'list activities' to hear the choices.",
    Action.GreetU: "Hello, this is the activity guide. What would you like to do?",
    Action.ReAsk1S: "The activity types are amusement parks, aquariums, cruises, historic sites, "
                    "museums, parks, theaters, wineries and zoos. Which one would you like?",
    Action.ReAsk1M: "Which type of activity are you after? Feel free to add the place and time too.",
    Action.Ask2S: "Which town or city should I look in?",
    Action.Ask2U: "Tell me more about what you want.",
    Action.ReAsk2S: "Please name the town or city you would like to visit.",
    Action.ReAsk2M: "Where would you like to go? You may add the time of day as well.",
    Action.Ask3S: "At what time of day would you like to go?",
    Action.ReAsk3S: "Would you prefer the morning, the afternoon or the evening?",
    Action.ExpConf1: "You want to visit {activity}, is that right?",
    Action.ExpConf2: "You want to go to {location}, is that right?",
    Action.ExpConf3: "You want to go in the {time}, is that right?",
    Action.NoConf: "",
}


def prompt_text(action: Action, ops: OperationsVector, db: ActivityDatabase | None = None) -> str:
    if action is Action.Tell:
        query = query_from_ops(ops)
        rows = query_database(db or load_database(), query)
        shown = ", ".join(r.name for r in rows[:3])
        found = f"{len(rows)} match{'es' if len(rows) != 1 else ''}"
        return (f"I found {found}: {shown}. " if rows else "I found nothing matching that. ") + \
            "Goodbye. How did it go: good, so-so or bad?"
    values = {ATTRIBUTE_NAMES[a]: ops.slot(a).value or "" for a in ATTRIBUTES}
    return PROMPTS[action].format(**values)
