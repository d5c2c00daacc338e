"""
Learning a dialogue policy from random exploration
==================================================

Collect dialogues with a simulated user while choosing uniformly at every
choice-state, estimate a Markov decision process from the logs, solve it,
and put the learned policy back in front of fresh simulated users.
"""

import numpy as np

from dialogrl.domain import INITIAL_STATE, load_choice_table
from dialogrl.harness import (
    baseline_comparison,
    collect,
    estimate,
    format_baselines,
    learn_policy,
    policy_means,
)
from dialogrl.usersim import SimulatorConfig

config = SimulatorConfig()
seed = 7

# %%
# Exploratory training data.  Every decision is a fair coin flip, so each
# logged dialogue is also a Monte Carlo sample for any policy that agrees
# with all of its coin flips.

train = collect(2000, None, config, seed)
binary = np.array([r.rewards.binary for r in train])
turns = np.array([r.user_turns for r in train])
print(f"exploratory completion rate {np.mean(binary == 1):.3f}, "
      f"user turns {turns.min()}-{turns.max()} (mean {turns.mean():.1f})")

# %%
# Estimate transition frequencies and mean rewards, then run value iteration.

mdp = estimate(train, "binary")
qtable, policy = learn_policy(mdp)
print(f"value iteration converged after {qtable.sweeps} sweeps; "
      f"{len(policy.unlearned)} choice-states never visited\n")

print("learned choices:")
for state, pair in load_choice_table().items():
    chosen = "/".join(sorted(a.name for a in policy[state]))
    print(f"  {state.digits}  {pair[0].name:>8} vs {pair[1].name:<8} -> {chosen}")

# %%
# Redeploy.  The test arm uses its own random streams under the same seed.

_, means = policy_means(policy, config, 2000, seed)
print(f"\ntrain binary mean {binary.mean():.3f}, learned policy {means['binary']:.3f}")

# %%
# How does the learned policy compare to simple hand-designed strategies?
# The Monte Carlo column only uses training dialogues consistent with each
# policy; the model column evaluates each policy on the estimated MDP.

print()
print(format_baselines(baseline_comparison(train, mdp, policy)))
print(f"\nmodel value of the start state under the learned policy: "
      f"{qtable.values()[mdp.state_index(INITIAL_STATE)]:.3f}")
