"""Command-line entry point: ``dialogrl <subcommand> [flags]``."""
from __future__ import annotations

import argparse
import logging
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from . import corpus as corpus_store
from . import harness
from .corpus import CorpusError
from .domain import MEASURES, TASKS, ACTION_TABLE, state_table
from .mdp import estimate_mdp, CyclicModelError
from .usersim import load_config, parse_config

log = logging.getLogger("dialogrl")


def _sim_config(path):
    if path is None:
        return parse_config(resources.files("dialogrl").joinpath("data/default.cfg").read_text())
    return load_config(path)


def _thresholds(text: str) -> tuple:
    try:
        return tuple(int(k) for k in text.replace(",", " ").split())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _mixed(text: str) -> dict:
    out = {}
    for part in text.split(","):
        key, sep, value = part.partition("=")
        if not sep or key not in harness.DEFAULT_MIXED:
            raise argparse.ArgumentTypeError(f"expected ask=S|U,reask=S|M,confirm=NoConf|ExpConf, got {text!r}")
        out[key] = value
    return out


def _existing(path: str) -> Path:
    p = Path(path)
    if not p.exists():
        raise argparse.ArgumentTypeError(f"{path}: no such file")
    return p


def _emit(text: str, out):
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


# -- subcommands -----------------------------------------------------------------

def cmd_collect(args):
    config = _sim_config(args.config)
    policy = harness.read_policy(args.policy) if args.policy else None
    records = harness.collect(args.n, policy, config, args.seed, arm=args.arm, workers=args.workers,
                              policy_name=Path(args.policy).stem if args.policy else "learned")
    corpus_store.write(records, args.out)
    print(f"wrote {len(records)} dialogues to {args.out}")


def cmd_estimate(args):
    records = corpus_store.load(args.corpus)
    if records:
        mdp = harness.estimate(records, args.measure)
    else:
        print(f"dialogrl estimate: warning: corpus {args.corpus} is empty; "
              "every state-action pair is unobserved", file=sys.stderr)
        mdp = estimate_mdp([], state_table(), ACTION_TABLE)
    harness.save_mdp(mdp, args.out)
    print(f"wrote model of {len(records)} dialogues to {args.out}")


def cmd_optimize(args):
    mdp = harness.read_mdp(args.mdp)
    qtable, policy = harness.learn_policy(mdp, args.gamma)
    Path(args.out).write_text(harness.format_policy(policy))
    print(f"converged after {qtable.sweeps} sweeps; wrote policy to {args.out}")


def cmd_evaluate(args):
    policy = harness.read_policy(args.policy)
    if args.corpus:
        records = corpus_store.load(args.corpus)
        est = harness.mc_evaluate(records, policy, args.measure, args.allow_non_exploratory)
        mean = "no estimate" if est.mean is None else f"{est.mean:.4f}"
        _emit(f"consistent dialogues: {est.n_consistent} of {len(records)}\n"
              f"mean {args.measure}: {mean}\n", args.out)
        return
    if args.seed is None:
        raise SystemExit("dialogrl evaluate: error: --seed is required when simulating fresh dialogues")
    _, means = harness.policy_means(policy, _sim_config(args.config), args.n, args.seed,
                                    workers=args.workers)
    _emit("".join(f"{m}: {v:.4f}\n" for m, v in means.items()), args.out)


def cmd_baselines(args):
    records = corpus_store.load(args.corpus)
    mdp = harness.estimate(records, args.measure)
    if args.policy:
        policy = harness.read_policy(args.policy)
    else:
        _, policy = harness.learn_policy(mdp)
    rows = harness.baseline_comparison(records, mdp, policy, args.measure, mixed=args.mixed)
    _emit(harness.format_baselines(rows) + "\n", args.out)


def cmd_goodness(args):
    records = corpus_store.load(args.corpus)
    mdp = harness.estimate(records, args.measure)
    rng = np.random.default_rng(args.seed)
    episodes = harness.synthetic_corpus(mdp, args.synthetic, rng) if args.synthetic else records
    rows = harness.goodness_check(episodes, mdp, args.policies, args.thresholds, rng, args.measure)
    _emit(harness.format_goodness(rows) + "\n", args.out)


def cmd_pipeline(args):
    config = harness.PipelineConfig(
        sim=_sim_config(args.config), seed=args.seed, n_train=args.n, n_test=args.n_test,
        measure=args.measure, gamma=args.gamma, group_split=not args.no_groups,
        goodness_policies=args.policies, goodness_thresholds=args.thresholds,
        mixed=args.mixed, workers=args.workers)
    result = harness.run_pipeline(config, args.out)
    sys.stdout.write(result.text)


def cmd_chat(args):
    config = _sim_config(args.config)
    policy = harness.read_policy(args.policy) if args.policy else None
    task = TASKS[args.task]
    session = harness.ChatSession(config, policy, task, args.seed, verbatim=args.verbatim)
    print(f"task: find {task.activity} in {task.location} in the {task.time}")
    while not session.finished:
        print(f"[{session.state.digits}] {session.action.name}: {session.prompt()}")
        line = sys.stdin.readline()
        if not line:
            print("input ended before the dialogue finished", file=sys.stderr)
            return 1
        print(f"  user: {line.strip()}")
        session.respond(line)
    print(f"[{session.state.digits}] Tell: {session.prompt()}")
    r = session.rewards
    print(f"rewards: binary={r.binary} weak={r.weak} asr={r.asr:g}")
    return 0


# -- parser ----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dialogrl", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, metavar="subcommand")

    def add(name, func, help_text):
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(func=func)
        return p

    def sim(p, seed_required=True):
        p.add_argument("--config", type=_existing, help="simulator config (default: bundled)")
        p.add_argument("--seed", type=int, required=seed_required, help="master seed")
        p.add_argument("--workers", type=int, default=1)

    measure = dict(choices=MEASURES, default="binary")

    p = add("collect", cmd_collect, "roll out dialogues into a corpus file")
    sim(p)
    p.add_argument("--n", type=int, default=311)
    p.add_argument("--policy", type=_existing, help="fixed policy file (default: exploratory)")
    p.add_argument("--arm", type=int, default=0, help="stream index separating corpora under one seed")
    p.add_argument("--out", required=True)

    p = add("estimate", cmd_estimate, "estimate an MDP snapshot from a corpus")
    p.add_argument("--corpus", type=_existing, required=True)
    p.add_argument("--measure", **measure)
    p.add_argument("--out", required=True)

    p = add("optimize", cmd_optimize, "solve an MDP snapshot for the greedy policy")
    p.add_argument("--mdp", type=_existing, required=True)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--out", required=True)

    p = add("evaluate", cmd_evaluate, "Monte Carlo estimate on a corpus, or fresh simulated dialogues")
    sim(p, seed_required=False)
    p.add_argument("--policy", type=_existing, required=True)
    p.add_argument("--corpus", type=_existing)
    p.add_argument("--n", type=int, default=2000)
    p.add_argument("--measure", **measure)
    p.add_argument("--allow-non-exploratory", action="store_true")
    p.add_argument("--out")

    p = add("baselines", cmd_baselines, "compare a policy with the hand-designed ones")
    p.add_argument("--corpus", type=_existing, required=True)
    p.add_argument("--policy", type=_existing, help="policy file (default: learned from the corpus)")
    p.add_argument("--measure", **measure)
    p.add_argument("--mixed", type=_mixed)
    p.add_argument("--out")

    p = add("goodness", cmd_goodness, "correlate Monte Carlo and model values of random policies")
    p.add_argument("--corpus", type=_existing, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--policies", type=int, default=1000)
    p.add_argument("--thresholds", type=_thresholds, default=(0, 5, 10))
    p.add_argument("--synthetic", type=int, default=0, metavar="N",
                   help="draw N episodes from the estimated model instead of using the corpus")
    p.add_argument("--measure", **measure)
    p.add_argument("--out")

    p = add("pipeline", cmd_pipeline, "explore, learn, redeploy and report")
    sim(p)
    p.add_argument("--n", type=int, default=2000, help="training dialogues")
    p.add_argument("--n-test", type=int, default=2000)
    p.add_argument("--measure", **measure)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--policies", type=int, default=0, help="random policies for the model check")
    p.add_argument("--thresholds", type=_thresholds, default=(0, 5, 10))
    p.add_argument("--mixed", type=_mixed)
    p.add_argument("--no-groups", action="store_true", help="skip the task-group split")
    p.add_argument("--out")

    p = add("chat", cmd_chat, "talk to the system by typing slot values")
    p.add_argument("--config", type=_existing)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--policy", type=_existing, help="policy file (default: exploratory)")
    p.add_argument("--task", type=int, choices=sorted(TASKS), default=1)
    p.add_argument("--verbatim", action="store_true", help="bypass the recognizer channel")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(levelname)s: %(message)s")
    try:
        return args.func(args) or 0
    except (CorpusError, CyclicModelError, ValueError, OSError) as exc:
        print(f"dialogrl {args.command}: error: {exc}", file=sys.stderr)
        return 1
