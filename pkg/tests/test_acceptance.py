"""Acceptance criteria, one test each, at their stated tolerances and time budgets.

Each test records a PASS/FAIL line shown in the pytest terminal summary.
Run alone with ``pytest tests/test_acceptance.py -v``.
"""
import time

import numpy as np
import pytest
from scipy import stats as sst

from dialogrl import domain
from dialogrl.cli import main as cli_main
from dialogrl.domain import (
    DEFAULT_THRESHOLDS,
    INITIAL_STATE,
    TASKS,
    WILDCARD,
    Action,
    AsrResult,
    OperationsVector,
    advance,
    estimate_state,
    evaluate_rewards,
    query_from_ops,
)
from dialogrl.harness import (
    PipelineConfig,
    collect,
    estimate,
    goodness_check,
    run_pipeline,
    synthetic_corpus,
)
from dialogrl.mdp import greedy_policy, policy_value, value_iterate
from dialogrl.stats import linear_fit, pearson, t_test
from dialogrl.usersim import SimulatorConfig

from oracles import best_start_value, ols_reference, pearson_reference, random_mdp, welch_reference

MASTER_SEED = 1


def test_1_reward_goldens(criterion):
    start = time.perf_counter()
    got = [(r.binary, r.weak, r.asr) for r in (
        evaluate_rewards((WILDCARD, WILDCARD, "morning"), TASKS[4]),
        evaluate_rewards(TASKS[4].values(), TASKS[4]),
        evaluate_rewards((WILDCARD,) * 3, TASKS[4]),
    )]
    elapsed = time.perf_counter() - start
    ok = got == [(-1, 1, 2), (1, 3, 3), (-1, 0, 1.5)] and elapsed < 1
    criterion(1, "reward golden test", ok, f"{got}, {elapsed:.3f}s")
    assert ok


def test_2_state_trace_golden(criterion):
    start = time.perf_counter()
    heard_all = AsrResult({1: "museums", 2: "Morristown", 3: "afternoon"}, confidence=0.95)
    script = [(Action.GreetU, heard_all), (Action.NoConf, None),
              (Action.ExpConf2, AsrResult(answer="yes")), (Action.ExpConf3, AsrResult(answer="yes"))]
    ops = OperationsVector()
    states, actions = [], []
    for action, asr in script:
        states.append(estimate_state(ops).digits)
        actions.append(action.name)
        ops = advance(ops, action, asr, DEFAULT_THRESHOLDS)
    states.append(estimate_state(ops).digits)
    actions.append("Tell")
    reward = evaluate_rewards(query_from_ops(ops), TASKS[1]).binary
    elapsed = time.perf_counter() - start
    ok = (states == ["0100000", "1121000", "1221001", "1321001", "1400000"]
          and actions == ["GreetU", "NoConf", "ExpConf2", "ExpConf3", "Tell"]
          and reward == 1 and elapsed < 1)
    criterion(2, "state-trace golden test", ok, f"{' -> '.join(states)}, reward {reward}")
    assert ok


def test_3_reachable_structure(criterion):
    domain.reachability.cache_clear()
    start = time.perf_counter()
    info = domain.reachability()
    elapsed = time.perf_counter() - start
    ok = len(info.states) == 62 and len(info.choice_states) == 42 and elapsed < 5
    criterion(3, "structure test", ok,
              f"{len(info.states)} states, {len(info.choice_states)} choice-states, {elapsed:.2f}s")
    assert ok


def test_4_solver_oracle(criterion):
    start = time.perf_counter()
    rng = np.random.default_rng(2024)
    worst = 0.0
    for k in range(200):
        acyclic = k % 2 == 0
        gamma = 1.0 if acyclic else float(rng.uniform(0.5, 0.95))
        mdp = random_mdp(rng, int(rng.integers(1, 9)), int(rng.integers(1, 4)), acyclic=acyclic)
        pol = greedy_policy(value_iterate(mdp, gamma, threshold=1e-13))
        got = policy_value(mdp, pol, gamma, threshold=1e-13)["s0"]
        worst = max(worst, abs(got - best_start_value(mdp, gamma)))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-9 and elapsed < 30
    criterion(4, "solver oracle on 200 random MDPs", ok, f"max error {worst:.1e}, {elapsed:.1f}s")
    assert ok


def test_5_exploration_balance(criterion):
    start = time.perf_counter()
    records = collect(311, None, SimulatorConfig(), MASTER_SEED)
    greets = [r.steps[0].action for r in records]
    n_sys = sum(a is Action.GreetS for a in greets)
    p = sst.binomtest(n_sys, len(greets), 0.5).pvalue
    elapsed = time.perf_counter() - start
    ok = all(r.steps[0].state == INITIAL_STATE for r in records) and p >= 0.001 and elapsed < 60
    criterion(5, "exploration balance", ok,
              f"GreetS={n_sys} GreetU={len(greets) - n_sys}, binomial p={p:.3f}")
    assert ok


def test_6_end_to_end_improvement(criterion):
    start = time.perf_counter()
    result = run_pipeline(PipelineConfig(seed=MASTER_SEED, n_train=2000, n_test=2000))
    row = result.report.row("binary")
    learned = next(b for b in result.baselines if b.name == "Learned")
    others = [b for b in result.baselines if b.name != "Learned"]
    beats = all(learned.mdp_value >= b.mdp_value for b in others)
    elapsed = time.perf_counter() - start
    ok = row.test_mean > row.train_mean and row.p_value < 0.05 and beats and elapsed < 300
    detail = (f"binary {row.train_mean:.3f} -> {row.test_mean:.3f}, p={row.p_value:.2g}; "
              f"model value {learned.mdp_value:.3f} vs best baseline "
              f"{max(b.mdp_value for b in others):.3f}")
    criterion(6, "end-to-end improvement", ok, detail)
    assert ok


def test_7_model_goodness_self_consistency(criterion):
    start = time.perf_counter()
    train = collect(2000, None, SimulatorConfig(), MASTER_SEED)
    mdp = estimate(train)
    rng = np.random.default_rng(np.random.SeedSequence(MASTER_SEED, spawn_key=(7,)))
    synthetic = synthetic_corpus(mdp, 5000, rng)
    rows = goodness_check(synthetic, mdp, 1000, (0, 5, 10), rng)
    elapsed = time.perf_counter() - start
    top = rows[-1]
    ok = (all(not r.insufficient and r.corr > 0 and r.p_value < 0.01 for r in rows)
          and 0.8 <= top.slope <= 1.2 and elapsed < 600)
    detail = "; ".join(f">{r.min_consistent}: n={r.n_policies} r={r.corr:.3f} slope={r.slope:.3f}"
                       for r in rows)
    criterion(7, "model-goodness self-consistency", ok, detail)
    assert ok


def test_8_determinism(criterion, tmp_path, capsys):
    start = time.perf_counter()
    outputs = []
    for run in ("first", "second"):
        out = tmp_path / run
        code = cli_main(["pipeline", "--seed", str(MASTER_SEED), "--n", "2000", "--n-test", "2000",
                         "--policies", "200", "--out", str(out)])
        assert code == 0
        outputs.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
    capsys.readouterr()
    elapsed = time.perf_counter() - start
    same = outputs[0] == outputs[1]
    ok = same and {"report.txt", "train.jsonl", "test.jsonl"} <= set(outputs[0]) and elapsed < 600
    criterion(8, "determinism", ok, f"{len(outputs[0])} artifacts byte-identical={same}, {elapsed:.1f}s")
    assert ok


def test_9_statistics_oracles(criterion):
    start = time.perf_counter()
    rng = np.random.default_rng(99)
    worst = 0.0
    for _ in range(50):
        a = rng.normal(rng.normal(), rng.uniform(0.5, 2), size=rng.integers(2, 40))
        b = rng.normal(rng.normal(), rng.uniform(0.5, 2), size=rng.integers(2, 40))
        res = t_test(a, b)
        t, p, _ = welch_reference(list(a), list(b))
        xs = rng.normal(size=rng.integers(3, 60))
        ys = rng.normal() * xs + rng.normal(size=len(xs))
        r, rp = pearson_reference(list(xs), list(ys))
        corr = pearson(xs, ys)
        slope, intercept = ols_reference(list(xs), list(ys))
        fit = linear_fit(xs, ys)
        worst = max(worst, abs(res.t - t), abs(res.p - p), abs(corr.r - r), abs(corr.p - rp),
                    abs(fit.slope - slope), abs(fit.intercept - intercept))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-6 and elapsed < 10
    criterion(9, "statistics oracles", ok, f"max deviation {worst:.1e}, {elapsed:.2f}s")
    assert ok


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))
