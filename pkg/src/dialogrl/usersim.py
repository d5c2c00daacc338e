"""Simulated user population and noisy recognizer channel.

All draws come from a caller-supplied ``numpy.random.Generator`` so that one
seed per dialogue fixes the whole exchange.
"""
from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .domain import (
    ACTIVITIES,
    DONE,
    NONRESTRICTIVE,
    RESTRICTIVE,
    TASKS,
    TIMES,
    AsrResult,
    TaskSpec,
    calibrate_thresholds,
    load_database,
    task_grid,
)

__all__ = [
    "UserProfile",
    "GrammarNoise",
    "AsrParams",
    "SimulatorConfig",
    "sample_task",
    "user_utterance",
    "asr_decode",
    "confirm_response",
    "web_feedback",
    "load_config",
    "dump_config",
    "zero_noise_config",
]


def _check_probability(name, p):
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {p}")


@dataclass(frozen=True)
class UserProfile:
    p_overanswer: float = 0.6
    p_silent: float = 0.05
    p_yesno_flip: float = 0.05

    def __post_init__(self):
        for f in fields(self):
            _check_probability(f.name, getattr(self, f.name))


@dataclass(frozen=True)
class GrammarNoise:
    p_capture: float
    p_substitute: float
    p_delete: float

    def __post_init__(self):
        for f in fields(self):
            _check_probability(f.name, getattr(self, f.name))
        total = self.p_capture + self.p_substitute + self.p_delete
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"capture/substitute/delete must sum to 1, got {total}")


@dataclass(frozen=True)
class AsrParams:
    """Per-grammar slot noise and triangular confidence score distributions on [0, 1]."""

    restrictive: GrammarNoise = GrammarNoise(0.92, 0.056, 0.024)
    nonrestrictive: GrammarNoise = GrammarNoise(0.75, 0.175, 0.075)
    correct_conf_mode: float = 0.8
    corrupted_conf_mode: float = 0.35

    def __post_init__(self):
        _check_probability("correct_conf_mode", self.correct_conf_mode)
        _check_probability("corrupted_conf_mode", self.corrupted_conf_mode)

    def noise(self, grammar: int) -> GrammarNoise:
        return self.restrictive if grammar == RESTRICTIVE else self.nonrestrictive

    def draw_confidence(self, corrupted: bool, rng: np.random.Generator) -> float:
        mode = self.corrupted_conf_mode if corrupted else self.correct_conf_mode
        return float(rng.triangular(0.0, mode, 1.0))


# feedback given completion: rows are P(+1), P(0), P(-1)
DEFAULT_FEEDBACK_SUCCESS = (0.7, 0.2, 0.1)
DEFAULT_FEEDBACK_FAILURE = (0.2, 0.3, 0.5)


@dataclass(frozen=True)
class SimulatorConfig:
    profile: UserProfile = UserProfile()
    asr: AsrParams = AsrParams()
    feedback_success: tuple = DEFAULT_FEEDBACK_SUCCESS
    feedback_failure: tuple = DEFAULT_FEEDBACK_FAILURE
    task_mode: str = "fixed"
    calibration_seed: int = 0
    calibration_size: int = 9999
    thresholds: tuple | None = None

    def __post_init__(self):
        for name in ("feedback_success", "feedback_failure"):
            row = tuple(float(p) for p in getattr(self, name))
            if len(row) != 3 or any(p < 0 for p in row) or abs(sum(row) - 1) > 1e-9:
                raise ValueError(f"{name} must be three probabilities summing to 1")
            object.__setattr__(self, name, row)
        if self.task_mode not in ("fixed", "grid"):
            raise ValueError(f"task_mode must be 'fixed' or 'grid', got {self.task_mode!r}")
        if self.thresholds is None:
            object.__setattr__(self, "thresholds", self._calibrate())

    def _calibrate(self) -> tuple:
        """Tertiles of the confidence mixture induced by the default exchanges."""
        rng = np.random.default_rng(self.calibration_seed)
        n = self.calibration_size
        # substitution probability averaged over the two grammars
        p_sub = 0.5 * (self.asr.restrictive.p_substitute + self.asr.nonrestrictive.p_substitute)
        corrupted = rng.random(n) < p_sub
        modes = np.where(corrupted, self.asr.corrupted_conf_mode, self.asr.correct_conf_mode)
        return calibrate_thresholds(rng.triangular(0.0, modes, 1.0))


def zero_noise_config(p_overanswer: float = 1.0) -> SimulatorConfig:
    clean = GrammarNoise(1.0, 0.0, 0.0)
    return SimulatorConfig(
        profile=UserProfile(p_overanswer=p_overanswer, p_silent=0.0, p_yesno_flip=0.0),
        asr=AsrParams(restrictive=clean, nonrestrictive=clean),
    )


# -- config files -----------------------------------------------------------

_FLAT_KEYS = {
    "p_overanswer": ("profile", "p_overanswer"),
    "p_silent": ("profile", "p_silent"),
    "p_yesno_flip": ("profile", "p_yesno_flip"),
    "restrictive.p_capture": ("restrictive", "p_capture"),
    "restrictive.p_substitute": ("restrictive", "p_substitute"),
    "restrictive.p_delete": ("restrictive", "p_delete"),
    "nonrestrictive.p_capture": ("nonrestrictive", "p_capture"),
    "nonrestrictive.p_substitute": ("nonrestrictive", "p_substitute"),
    "nonrestrictive.p_delete": ("nonrestrictive", "p_delete"),
    "correct_conf_mode": ("asr", "correct_conf_mode"),
    "corrupted_conf_mode": ("asr", "corrupted_conf_mode"),
    "feedback_success": ("top", "feedback_success"),
    "feedback_failure": ("top", "feedback_failure"),
    "task_mode": ("top", "task_mode"),
    "calibration_seed": ("top", "calibration_seed"),
    "calibration_size": ("top", "calibration_size"),
}


def parse_config(text: str) -> SimulatorConfig:
    """Parse ``key = value`` lines; unknown keys are rejected."""
    base = SimulatorConfig(thresholds=(0.0, 0.0))
    groups = {
        "profile": {f.name: getattr(base.profile, f.name) for f in fields(UserProfile)},
        "restrictive": {f.name: getattr(base.asr.restrictive, f.name) for f in fields(GrammarNoise)},
        "nonrestrictive": {f.name: getattr(base.asr.nonrestrictive, f.name) for f in fields(GrammarNoise)},
        "asr": {"correct_conf_mode": base.asr.correct_conf_mode,
                "corrupted_conf_mode": base.asr.corrupted_conf_mode},
        "top": {"feedback_success": base.feedback_success, "feedback_failure": base.feedback_failure,
                "task_mode": base.task_mode, "calibration_seed": base.calibration_seed,
                "calibration_size": base.calibration_size},
    }
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _FLAT_KEYS:
            raise ValueError(f"line {lineno}: unknown key {key!r}")
        group, name = _FLAT_KEYS[key]
        if key.startswith("feedback_"):
            groups[group][name] = tuple(float(v) for v in value.replace(",", " ").split())
        elif key == "task_mode":
            groups[group][name] = value
        elif key.startswith("calibration_"):
            groups[group][name] = int(value)
        else:
            groups[group][name] = float(value)
    asr = AsrParams(restrictive=GrammarNoise(**groups["restrictive"]),
                    nonrestrictive=GrammarNoise(**groups["nonrestrictive"]),
                    **groups["asr"])
    return SimulatorConfig(profile=UserProfile(**groups["profile"]), asr=asr, **groups["top"])


def load_config(path: str | Path) -> SimulatorConfig:
    return parse_config(Path(path).read_text())


def dump_config(config: SimulatorConfig) -> str:
    values = {
        "p_overanswer": config.profile.p_overanswer,
        "p_silent": config.profile.p_silent,
        "p_yesno_flip": config.profile.p_yesno_flip,
        "correct_conf_mode": config.asr.correct_conf_mode,
        "corrupted_conf_mode": config.asr.corrupted_conf_mode,
        "task_mode": config.task_mode,
        "calibration_seed": config.calibration_seed,
        "calibration_size": config.calibration_size,
    }
    for grammar in ("restrictive", "nonrestrictive"):
        noise = getattr(config.asr, grammar)
        for f in fields(GrammarNoise):
            values[f"{grammar}.{f.name}"] = getattr(noise, f.name)
    values["feedback_success"] = " ".join(repr(p) for p in config.feedback_success)
    values["feedback_failure"] = " ".join(repr(p) for p in config.feedback_failure)
    return "".join(f"{key} = {values[key]}\n" for key in _FLAT_KEYS)


# -- behavior ---------------------------------------------------------------

def sample_task(rng: np.random.Generator, mode: str = "fixed") -> tuple[int, TaskSpec]:
    """Draw ``(task_id, task)``; grid tasks are numbered from 101."""
    if mode == "fixed":
        task_id = int(rng.integers(1, len(TASKS) + 1))
        return task_id, TASKS[task_id]
    grid = task_grid()
    k = int(rng.integers(len(grid)))
    return 101 + k, grid[k]


def user_utterance(task: TaskSpec, asked_attribute: int, prompt_type: str, profile: UserProfile,
                   rng: np.random.Generator, grammar: int = RESTRICTIVE) -> dict:
    """Slots the user means to say, as ``{attribute: value}``.

    Later slots are volunteered only when the prompt is open or the grammar
    invites extra information.
    """
    if asked_attribute not in (1, 2, 3):
        raise ValueError(f"asked_attribute must be 1, 2 or 3, got {asked_attribute}")
    if rng.random() < profile.p_silent:
        return {}
    values = task.values()
    intent = {asked_attribute: values[asked_attribute - 1]}
    if prompt_type == "open" or grammar == NONRESTRICTIVE:
        for j in range(asked_attribute + 1, DONE):
            if rng.random() < profile.p_overanswer:
                intent[j] = values[j - 1]
    return intent


def _vocabulary(attribute: int) -> tuple:
    if attribute == 1:
        return ACTIVITIES
    if attribute == 2:
        return load_database().locations
    return TIMES


def _wrong_value(attribute: int, true_value: str, rng: np.random.Generator) -> str:
    options = [v for v in _vocabulary(attribute) if v != true_value]
    return options[int(rng.integers(len(options)))]


def asr_decode(intent: dict, grammar: int, attribute: int, params: AsrParams,
               rng: np.random.Generator) -> AsrResult:
    """Pass intended slots through the recognizer for a prompt about ``attribute``."""
    if not intent:
        return AsrResult()
    if grammar == RESTRICTIVE:
        in_grammar = [attribute]
    else:
        in_grammar = list(range(attribute, DONE))
    noise = params.noise(grammar)
    heard = {}
    substituted = False
    for j in sorted(intent):
        if j not in in_grammar:
            continue
        u = rng.random()
        if u < noise.p_capture:
            heard[j] = intent[j]
        elif u < noise.p_capture + noise.p_substitute:
            heard[j] = _wrong_value(j, intent[j], rng)
            substituted = True
    return AsrResult(slots=heard, confidence=params.draw_confidence(substituted, rng))


def confirm_response(true_value: str | None, perceived_value: str, profile: UserProfile,
                     rng: np.random.Generator) -> str | None:
    """What the recognizer hears after an explicit confirmation prompt."""
    if rng.random() < profile.p_silent:
        return None
    truthful = "yes" if true_value == perceived_value else "no"
    if rng.random() < profile.p_yesno_flip:
        return "no" if truthful == "yes" else "yes"
    return truthful


def web_feedback(binary: int, config: SimulatorConfig, rng: np.random.Generator) -> int:
    row = config.feedback_success if binary == 1 else config.feedback_failure
    return (1, 0, -1)[int(rng.choice(3, p=row))]
