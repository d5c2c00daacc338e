"""Exploratory collection, policy learning, and evaluation against simulated users."""
from __future__ import annotations

import logging
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import corpus as corpus_store
from .corpus import Corpus, Step, TrajectoryRecord
from .domain import (
    ACTION_TABLE,
    ACTIVITIES,
    ATTRIBUTES,
    INITIAL_STATE,
    MEASURES,
    TASKS,
    TIMES,
    Action,
    AsrResult,
    DialogueState,
    OperationsVector,
    RewardBundle,
    advance,
    allowed_actions,
    choice_table,
    estimate_state,
    evaluate_rewards,
    is_choice_state,
    load_choice_table,
    load_database,
    prompt_text,
    query_from_ops,
    state_table,
)
from .mdp import (
    EmpiricalMDP,
    Policy,
    QTable,
    dump_mdp,
    estimate_mdp,
    greedy_policy,
    load_mdp,
    policy_value,
    sample_trajectories,
    value_iterate,
)
from .stats import StatisticsError, linear_fit, pearson, t_test
from .usersim import (
    SimulatorConfig,
    asr_decode,
    confirm_response,
    sample_task,
    user_utterance,
    web_feedback,
)

log = logging.getLogger(__name__)

EXPLORATORY = "exploratory"
SUBJECT_SIZE = 6
NOVICE_TASKS = (1, 2)


# -- rollouts -------------------------------------------------------------------

def dialogue_rng(master_seed: int, arm: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=(arm, index)))


def _pick(options: Sequence[Action], rng: np.random.Generator) -> Action:
    if len(options) == 1:
        return options[0]
    return options[int(rng.integers(len(options)))]


def choose_action(state: DialogueState, policy: Policy | None, rng: np.random.Generator) -> Action:
    """Exploratory when ``policy`` is None; tie sets resolved uniformly."""
    allowed = allowed_actions(state)
    if len(allowed) == 1:
        return allowed[0]
    if policy is not None and state in policy:
        options = [a for a in allowed if a in policy[state]]
        if options:
            return _pick(options, rng)
    return _pick(allowed, rng)


def simulate_turn(ops: OperationsVector, action: Action, task, config: SimulatorConfig,
                  rng: np.random.Generator) -> AsrResult | None:
    if not action.elicits_speech:
        return None
    a = ops.attribute
    if action.kind == "confirm":
        answer = confirm_response(task.values()[a - 1], ops.slot(a).value, config.profile, rng)
        return AsrResult(answer=answer)
    intent = user_utterance(task, a, action.prompt_type, config.profile, rng, grammar=action.grammar)
    return asr_decode(intent, action.grammar, a, config.asr, rng)


def run_dialogue(policy: Policy | None, config: SimulatorConfig, master_seed: int, arm: int,
                 index: int, *, policy_name: str = "learned", schedule: str = "rotate") -> TrajectoryRecord:
    """One complete dialogue driven by its own seeded stream."""
    rng = dialogue_rng(master_seed, arm, index)
    if schedule == "rotate" and config.task_mode == "fixed":
        task_id = index % len(TASKS) + 1
        task = TASKS[task_id]
    else:
        task_id, task = sample_task(rng, config.task_mode)

    ops = OperationsVector()
    steps = []
    while True:
        state = estimate_state(ops)
        action = choose_action(state, policy, rng)
        if action is Action.Tell:
            bundle = evaluate_rewards(query_from_ops(ops), task)
            bundle = RewardBundle(bundle.binary, bundle.weak, bundle.asr,
                                  web_feedback(bundle.binary, config, rng))
            steps.append(Step(state, action, float(bundle.binary)))
            break
        asr = simulate_turn(ops, action, task, config, rng)
        ops = advance(ops, action, asr, config.thresholds)
        steps.append(Step(state, action, 0.0))

    mode = EXPLORATORY if policy is None else f"fixed:{policy_name}"
    return TrajectoryRecord(
        dialogue_id=f"{arm}-{index:06d}",
        task_id=task_id,
        seed=f"{master_seed}/{arm}/{index}",
        steps=tuple(steps),
        rewards=bundle,
        policy_mode=mode,
    )


def _run_batch(args):
    policy, config, seed, arm, indices, name, schedule = args
    return [run_dialogue(policy, config, seed, arm, i, policy_name=name, schedule=schedule)
            for i in indices]


def collect(n: int, policy: Policy | None, config: SimulatorConfig, seed: int, *, arm: int = 0,
            policy_name: str = "learned", schedule: str = "rotate", workers: int = 1) -> Corpus:
    """Roll out ``n`` dialogues; ``policy=None`` explores uniformly at every choice-state.

    Dialogue ``i`` draws from the stream ``(seed, arm, i)``, so the result does
    not depend on ``workers``.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    indices = list(range(n))
    if workers <= 1:
        return Corpus(_run_batch((policy, config, seed, arm, indices, policy_name, schedule)))
    chunks = [indices[k::workers] for k in range(workers)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(_run_batch, [(policy, config, seed, arm, c, policy_name, schedule)
                                           for c in chunks]))
    merged = [None] * n
    for chunk, part in zip(chunks, parts):
        for i, record in zip(chunk, part):
            merged[i] = record
    return Corpus(merged)


# -- learning -------------------------------------------------------------------

def mdp_trajectory(record: TrajectoryRecord, measure: str = "binary") -> list[tuple]:
    """Decision steps of a record with the dialogue's outcome on the last one.

    The closing Tell is always taken from the single done state, so the outcome
    is credited to the transition into that state instead.
    """
    decisions = [(st.state, st.action, 0.0) for st in record.steps[:-1]]
    s, a, _ = decisions[-1]
    decisions[-1] = (s, a, float(record.rewards.measure(measure)))
    return decisions


def estimate(corpus: Iterable[TrajectoryRecord], measure: str = "binary") -> EmpiricalMDP:
    return estimate_mdp((mdp_trajectory(r, measure) for r in corpus), state_table(), ACTION_TABLE)


def complete_policy(choices: Mapping, name_unlearned: Iterable = ()) -> Policy:
    """Add the fixed action of every non-choice state to a choice-state mapping."""
    full = dict(choices)
    for state, acts in choice_table().items():
        if len(acts) == 1:
            full.setdefault(state, frozenset(acts))
    return Policy(full, frozenset(name_unlearned))


def learn_policy(mdp: EmpiricalMDP, gamma: float = 1.0, threshold: float = 1e-9,
                 tie_epsilon: float = 1e-9) -> tuple[QTable, Policy]:
    qtable = value_iterate(mdp, gamma, threshold)
    table = choice_table()
    greedy = greedy_policy(qtable, tie_epsilon, allowed=table)
    choices = {s: greedy[s] for s in table if s in greedy}
    return qtable, complete_policy(choices, greedy.unlearned)


# -- Monte Carlo evaluation -----------------------------------------------------

@dataclass(frozen=True)
class MCEstimate:
    n_consistent: int
    mean: float | None
    values: tuple = ()

    @property
    def has_estimate(self) -> bool:
        return self.n_consistent > 0


def is_consistent(steps: Iterable, policy: Policy) -> bool:
    for step in steps:
        state, action = (step.state, step.action) if isinstance(step, Step) else step[:2]
        if is_choice_state(state):
            chosen = policy.get(state)
            if chosen is not None and action not in chosen:
                return False
    return True


def mc_evaluate(corpus: Sequence[TrajectoryRecord], policy: Policy, measure: str = "binary",
                allow_non_exploratory: bool = False) -> MCEstimate:
    """Average ``measure`` over the dialogues whose every choice agrees with ``policy``."""
    if measure not in MEASURES:
        raise ValueError(f"unknown measure {measure!r}")
    if not all(r.exploratory for r in corpus):
        if not allow_non_exploratory:
            raise ValueError("corpus contains non-exploratory dialogues; the estimate would be biased")
        warnings.warn("Monte Carlo estimate over non-exploratory dialogues", stacklevel=2)
    values = tuple(float(r.rewards.measure(measure)) for r in corpus if is_consistent(r.steps, policy))
    if not values:
        return MCEstimate(0, None)
    return MCEstimate(len(values), float(np.mean(values)), values)


# -- baselines ------------------------------------------------------------------

DEFAULT_MIXED = {"ask": "U", "reask": "M", "confirm": "NoConf"}


def _baseline(initiative: Mapping[str, str], confirm: str) -> Policy:
    choices = {}
    for state, pair in load_choice_table().items():
        if pair[0].kind == "noconf" or pair[1].kind == "noconf":
            pick = [a for a in pair if (a is Action.NoConf) == (confirm == "NoConf")]
        else:
            kind = pair[0].kind
            suffix = initiative[kind]
            pick = [a for a in pair if a.name.endswith(suffix)]
        (action,) = pick
        choices[state] = frozenset([action])
    return complete_policy(choices)


def baseline_policies(mixed: Mapping[str, str] | None = None) -> dict[str, Policy]:
    """The five hand-designed reference policies.

    ``mixed`` chooses the variant used by the Mixed policy for first asks
    (``"S"``/``"U"``), reasks (``"S"``/``"M"``) and confirmations
    (``"NoConf"``/``"ExpConf"``).
    """
    variant = dict(DEFAULT_MIXED, **(mixed or {}))
    system = {"ask": "S", "reask": "S"}
    user = {"ask": "U", "reask": "M"}
    return {
        "SysNoconfirm": _baseline(system, "NoConf"),
        "SysConfirm": _baseline(system, "ExpConf"),
        "UserNoconfirm": _baseline(user, "NoConf"),
        "UserConfirm": _baseline(user, "ExpConf"),
        "Mixed": _baseline({"ask": variant["ask"], "reask": variant["reask"]}, variant["confirm"]),
    }


# -- model goodness -------------------------------------------------------------

@dataclass(frozen=True)
class GoodnessRow:
    min_consistent: int
    n_policies: int
    corr: float = math.nan
    p_value: float = math.nan
    slope: float = math.nan
    intercept: float = math.nan
    insufficient: bool = False


def _episodes(corpus, measure):
    out = []
    for item in corpus:
        if isinstance(item, TrajectoryRecord):
            out.append(mdp_trajectory(item, measure))
        else:
            out.append(list(item))
    return out


def random_policies(n: int, rng: np.random.Generator) -> tuple[list, np.ndarray]:
    """``n`` uniformly random deterministic policies over the choice-states.

    Returns the ordered choice-states and an ``(n, 42)`` array of picks
    (0 or 1, indexing each state's action pair).
    """
    rows = load_choice_table()
    states = list(rows)
    return states, rng.integers(0, 2, size=(n, len(states)))


def consistency_matrix(episodes: Sequence[Sequence[tuple]], states: Sequence, picks: np.ndarray) -> np.ndarray:
    """Boolean ``(episodes, policies)``: episode agrees with policy at every choice."""
    rows = load_choice_table()
    col = {s: i for i, s in enumerate(states)}
    visited = np.zeros((len(episodes), 2 * len(states)))
    for e, ep in enumerate(episodes):
        for state, action, _ in ep:
            if state in col:
                visited[e, 2 * col[state] + rows[state].index(action)] = 1
    rejected = np.zeros((picks.shape[0], 2 * len(states)))
    idx = np.arange(len(states))
    rejected[:, 2 * idx] = picks == 1
    rejected[:, 2 * idx + 1] = picks == 0
    return (visited @ rejected.T) == 0


def policy_from_picks(states: Sequence, picks: Sequence[int]) -> Policy:
    rows = load_choice_table()
    return complete_policy({s: frozenset([rows[s][int(p)]]) for s, p in zip(states, picks)})


def goodness_check(corpus, mdp: EmpiricalMDP, n_policies: int, thresholds: Sequence[int],
                   rng: np.random.Generator, measure: str = "binary", gamma: float = 1.0,
                   start: DialogueState = INITIAL_STATE) -> list[GoodnessRow]:
    """Correlate Monte Carlo and model values of random deterministic policies."""
    if n_policies < 2:
        raise ValueError("n_policies must be at least 2")
    episodes = _episodes(corpus, measure)
    returns = np.array([sum(r for _, _, r in ep) for ep in episodes])
    states, picks = random_policies(n_policies, rng)
    consistent = consistency_matrix(episodes, states, picks)
    counts = consistent.sum(axis=0)
    sums = returns @ consistent
    mc = np.divide(sums, counts, out=np.full(n_policies, np.nan), where=counts > 0)
    model = np.array([policy_value(mdp, policy_from_picks(states, p), gamma)[start] for p in picks])

    rows = []
    for k in thresholds:
        keep = counts > k
        n_keep = int(keep.sum())
        if n_keep < 3:
            rows.append(GoodnessRow(k, n_keep, insufficient=True))
            continue
        try:
            corr = pearson(model[keep], mc[keep])
            fit = linear_fit(model[keep], mc[keep])
        except StatisticsError:
            rows.append(GoodnessRow(k, n_keep, insufficient=True))
            continue
        rows.append(GoodnessRow(k, n_keep, corr.r, corr.p, fit.slope, fit.intercept))
    return rows


def exploratory_behavior() -> Policy:
    return Policy({s: frozenset(a) for s, a in choice_table().items()})


def synthetic_corpus(mdp: EmpiricalMDP, n: int, rng: np.random.Generator) -> list[list[tuple]]:
    """Exploratory episodes drawn from the estimated model itself."""
    return sample_trajectories(mdp, INITIAL_STATE, exploratory_behavior(), n, rng)


# -- reporting --------------------------------------------------------------------

@dataclass(frozen=True)
class MeasureRow:
    measure: str
    train_mean: float
    test_mean: float
    delta: float
    t: float
    p_value: float


@dataclass(frozen=True)
class EvaluationReport:
    rows: tuple
    groups: Mapping = field(default_factory=dict)
    n_train: int = 0
    n_test: int = 0

    def row(self, measure: str) -> MeasureRow:
        return next(r for r in self.rows if r.measure == measure)


def subject_means(corpus: Sequence[TrajectoryRecord], measure: str,
                  tasks: Sequence[int] | None = None) -> list[float]:
    """Per-subject means, one synthetic subject per consecutive block of six dialogues."""
    groups: dict[int, list[float]] = {}
    for i, record in enumerate(corpus):
        if tasks is not None and record.task_id not in tasks:
            continue
        groups.setdefault(i // SUBJECT_SIZE, []).append(float(record.rewards.measure(measure)))
    return [float(np.mean(v)) for _, v in sorted(groups.items())]


def compare(train: Sequence[TrajectoryRecord], test: Sequence[TrajectoryRecord],
            measures: Sequence[str] = MEASURES, tasks: Sequence[int] | None = None) -> tuple:
    rows = []
    for m in measures:
        a = subject_means(train, m, tasks)
        b = subject_means(test, m, tasks)
        train_mean = float(np.mean([r.rewards.measure(m) for r in train
                                    if tasks is None or r.task_id in tasks]))
        test_mean = float(np.mean([r.rewards.measure(m) for r in test
                                   if tasks is None or r.task_id in tasks]))
        try:
            res = t_test(b, a)
            t, p = res.t, res.p
        except StatisticsError:
            t, p = math.nan, math.nan
        rows.append(MeasureRow(m, train_mean, test_mean, test_mean - train_mean, t, p))
    return tuple(rows)


def evaluation_report(train, test, group_split: bool = True) -> EvaluationReport:
    groups = {}
    if group_split:
        experts = tuple(t for t in TASKS if t not in NOVICE_TASKS)
        groups = {"novice (tasks 1-2)": compare(train, test, tasks=NOVICE_TASKS),
                  "expert (tasks 3-6)": compare(train, test, tasks=experts)}
    return EvaluationReport(compare(train, test), groups, len(train), len(test))


@dataclass(frozen=True)
class BaselineRow:
    name: str
    n_consistent: int
    emp_avg: float
    mdp_value: float
    p_value: float


def baseline_comparison(train: Sequence[TrajectoryRecord], mdp: EmpiricalMDP, learned: Policy,
                        measure: str = "binary", gamma: float = 1.0,
                        mixed: Mapping[str, str] | None = None) -> list[BaselineRow]:
    policies = {"Learned": learned, **baseline_policies(mixed)}
    learned_mc = mc_evaluate(train, learned, measure)
    rows = []
    for name, pol in policies.items():
        est = mc_evaluate(train, pol, measure)
        value = policy_value(mdp, pol, gamma)[INITIAL_STATE]
        p = math.nan
        if name != "Learned" and est.n_consistent >= 2 and learned_mc.n_consistent >= 2:
            try:
                p = t_test(learned_mc.values, est.values).p
            except StatisticsError:
                pass
        rows.append(BaselineRow(name, est.n_consistent,
                                math.nan if est.mean is None else est.mean, value, p))
    return rows


def _fmt(x: float, digits: int = 3) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return "n/a"
    return f"{x:.{digits}f}"


def _table(header: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    widths = [max(len(h), *(len(r[i]) for r in rows)) if rows else len(h)
              for i, h in enumerate(header)]
    lines = ["  ".join(h.ljust(w) for h, w in zip(header, widths))]
    lines.append("  ".join("-" * w for w in widths))
    lines += ["  ".join(c.ljust(w) for c, w in zip(r, widths)) for r in rows]
    return "\n".join(lines)


def format_measures(rows: Sequence[MeasureRow]) -> str:
    return _table(["measure", "train", "test", "delta", "p-value"],
                  [[r.measure, _fmt(r.train_mean), _fmt(r.test_mean), _fmt(r.delta), _fmt(r.p_value, 4)]
                   for r in rows])


def format_report(report: EvaluationReport) -> str:
    parts = [f"Train ({report.n_train} dialogues) versus test ({report.n_test} dialogues); "
             "p-values from Welch's two-sample t-test over per-subject means "
             f"(subjects of {SUBJECT_SIZE} consecutive dialogues).",
             "", format_measures(report.rows)]
    for name, rows in report.groups.items():
        parts += ["", f"[{name}]", format_measures(rows)]
    return "\n".join(parts)


def format_baselines(rows: Sequence[BaselineRow]) -> str:
    return _table(["policy", "consistent", "emp. avg", "MDP value", "p-value"],
                  [[r.name, str(r.n_consistent), _fmt(r.emp_avg), _fmt(r.mdp_value), _fmt(r.p_value, 4)]
                   for r in rows])


def format_goodness(rows: Sequence[GoodnessRow]) -> str:
    return _table(["trajs", "policies", "corr", "p-value", "slope", "intercept"],
                  [[f"> {r.min_consistent}", str(r.n_policies),
                    "insufficient" if r.insufficient else _fmt(r.corr),
                    _fmt(r.p_value, 4), _fmt(r.slope), _fmt(r.intercept)] for r in rows])


def format_policy(policy: Policy) -> str:
    """Choice-state digits followed by the chosen action(s), one line per choice-state."""
    lines = []
    for state in load_choice_table():
        acts = sorted(policy.get(state, ()), key=lambda a: a.name)
        tag = "  # unlearned" if state in policy.unlearned else ""
        lines.append(f"{state.digits} {' '.join(a.name for a in acts)}{tag}")
    return "\n".join(lines) + "\n"


def parse_policy(text: str) -> Policy:
    choices, unlearned = {}, set()
    for lineno, raw in enumerate(text.splitlines(), 1):
        body, _, comment = raw.partition("#")
        body = body.strip()
        if not body:
            continue
        digits, *names = body.split()
        try:
            state = DialogueState.from_digits(digits)
            acts = frozenset(Action.parse(n) for n in names)
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
        if not acts:
            raise ValueError(f"line {lineno}: no actions for {digits}")
        bad = [a.name for a in acts if a not in allowed_actions(state)]
        if bad:
            raise ValueError(f"line {lineno}: {', '.join(bad)} not allowed in {digits}")
        choices[state] = acts
        if "unlearned" in comment:
            unlearned.add(state)
    return complete_policy(choices, unlearned)


def save_mdp(mdp: EmpiricalMDP, path: str | Path):
    with open(path, "w") as fp:
        dump_mdp(mdp, fp, state_format=lambda s: s.digits, action_format=lambda a: a.name)


def read_mdp(path: str | Path) -> EmpiricalMDP:
    with open(path) as fp:
        return load_mdp(fp, DialogueState.from_digits, Action.parse)


def read_policy(path: str | Path) -> Policy:
    return parse_policy(Path(path).read_text())


def policy_means(policy: Policy, config: SimulatorConfig, n: int, seed: int, *, arm: int = 1,
                 policy_name: str = "learned", workers: int = 1) -> tuple[Corpus, dict]:
    """Fresh dialogues under ``policy`` and the mean of every measure."""
    runs = collect(n, policy, config, seed, arm=arm, policy_name=policy_name, workers=workers)
    return runs, {m: float(np.mean([r.rewards.measure(m) for r in runs])) for m in MEASURES}


# -- interactive sessions ---------------------------------------------------------

def parse_slot_phrase(text: str) -> dict:
    """Known slot values mentioned in ``text``, as ``{attribute: value}``."""
    lowered = " ".join(text.lower().split())
    found = {}
    for attribute, vocab in ((1, ACTIVITIES), (2, load_database().locations), (3, TIMES)):
        # longest match first so "parks" does not shadow "amusement parks"
        for value in sorted(vocab, key=len, reverse=True):
            if value.lower() in lowered:
                found[attribute] = value
                lowered = lowered.replace(value.lower(), " ")
                break
    return found


def parse_answer(text: str) -> str | None:
    word = text.strip().lower()
    if word in ("yes", "y"):
        return "yes"
    if word in ("no", "n"):
        return "no"
    return None


class ChatSession:
    """A dialogue driven by typed user input instead of the simulated user.

    Ask turns pass the typed slots through the configured recognizer unless
    ``verbatim`` is set; yes/no answers are taken as typed.
    """

    def __init__(self, config: SimulatorConfig, policy: Policy | None, task, seed: int,
                 verbatim: bool = False):
        self.config = config
        self.policy = policy
        self.task = task
        self.verbatim = verbatim
        self.rng = dialogue_rng(seed, 3, 0)
        self.ops = OperationsVector()
        self.steps: list[Step] = []
        self.rewards: RewardBundle | None = None
        self._select()

    @property
    def state(self) -> DialogueState:
        return estimate_state(self.ops)

    @property
    def finished(self) -> bool:
        return self.rewards is not None

    def _select(self):
        while True:
            self.action = choose_action(self.state, self.policy, self.rng)
            if self.action is Action.Tell:
                self.rewards = evaluate_rewards(query_from_ops(self.ops), self.task)
                self.steps.append(Step(self.state, Action.Tell, float(self.rewards.binary)))
                return
            if self.action.elicits_speech:
                return
            self.steps.append(Step(self.state, self.action, 0.0))
            self.ops = advance(self.ops, self.action, None, self.config.thresholds)

    def prompt(self) -> str:
        return prompt_text(self.action, self.ops)

    def respond(self, text: str):
        if self.finished:
            raise RuntimeError("dialogue already finished")
        action = self.action
        if action.kind == "confirm":
            asr = AsrResult(answer=parse_answer(text))
        else:
            intent = parse_slot_phrase(text)
            if self.verbatim:
                asr = AsrResult(slots=intent, confidence=1.0) if intent else AsrResult()
            else:
                asr = asr_decode(intent, action.grammar, action.attribute or self.ops.attribute,
                                 self.config.asr, self.rng)
        self.steps.append(Step(self.state, action, 0.0))
        self.ops = advance(self.ops, action, asr, self.config.thresholds)
        self._select()


# -- pipeline ---------------------------------------------------------------------

@dataclass(frozen=True)
class PipelineConfig:
    sim: SimulatorConfig = field(default_factory=SimulatorConfig)
    seed: int = 0
    n_train: int = 2000
    n_test: int = 2000
    measure: str = "binary"
    gamma: float = 1.0
    threshold: float = 1e-9
    tie_epsilon: float = 1e-9
    group_split: bool = True
    baselines: bool = True
    goodness_policies: int = 0
    goodness_thresholds: tuple = (0, 5, 10)
    mixed: Mapping | None = None
    workers: int = 1


@dataclass
class PipelineResult:
    report: EvaluationReport
    train: Corpus
    test: Corpus
    mdp: EmpiricalMDP
    qtable: QTable
    policy: Policy
    baselines: list
    goodness: list
    text: str


def run_pipeline(config: PipelineConfig, out_dir: str | Path | None = None) -> PipelineResult:
    """Explore, estimate, optimize, redeploy and compare."""
    log.info("collecting %d exploratory dialogues", config.n_train)
    train = collect(config.n_train, None, config.sim, config.seed, arm=0, workers=config.workers)
    mdp = estimate(train, config.measure)
    qtable, policy = learn_policy(mdp, config.gamma, config.threshold, config.tie_epsilon)
    log.info("collecting %d dialogues with the learned policy", config.n_test)
    test = collect(config.n_test, policy, config.sim, config.seed, arm=1, workers=config.workers)
    report = evaluation_report(train, test, config.group_split)

    baselines = (baseline_comparison(train, mdp, policy, config.measure, config.gamma, config.mixed)
                 if config.baselines else [])
    goodness = []
    if config.goodness_policies:
        rng = np.random.default_rng(np.random.SeedSequence(config.seed, spawn_key=(2,)))
        goodness = goodness_check(train, mdp, config.goodness_policies, config.goodness_thresholds,
                                  rng, config.measure, config.gamma)

    sections = [f"master seed: {config.seed}; reward measure: {config.measure}; gamma: {config.gamma}",
                "", "== Learned policy versus exploratory training ==", format_report(report)]
    if baselines:
        sections += ["", "== Comparison to hand-designed policies (Monte Carlo over consistent "
                     "training dialogues) ==", format_baselines(baselines)]
    if goodness:
        sections += ["", "== Model accuracy over random deterministic policies ==",
                     format_goodness(goodness)]
    text = "\n".join(sections) + "\n"

    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        corpus_store.write(train, out / "train.jsonl")
        corpus_store.write(test, out / "test.jsonl")
        save_mdp(mdp, out / "mdp.txt")
        (out / "policy.txt").write_text(format_policy(policy))
        (out / "report.txt").write_text(text)
    return PipelineResult(report, train, test, mdp, qtable, policy, baselines, goodness, text)
