"""
How far can the estimated model be trusted?
===========================================

Draw many random deterministic policies.  For each, compare the model's
predicted value with the average reward of the exploratory dialogues that
happen to agree with it.  On data drawn from the model itself the two should
line up along the diagonal; on the simulated users the fit shows how much
the seven-feature state leaves out.
"""

import numpy as np

from dialogrl.harness import collect, estimate, format_goodness, goodness_check, synthetic_corpus
from dialogrl.usersim import SimulatorConfig

rng = np.random.default_rng(11)
train = collect(2000, None, SimulatorConfig(), 11)
mdp = estimate(train)

# %%
# Against the simulated users.

print("simulated users:")
print(format_goodness(goodness_check(train, mdp, 1000, (0, 5, 10), rng)))

# %%
# Against episodes sampled from the estimated model.

episodes = synthetic_corpus(mdp, 5000, rng)
print("\nepisodes drawn from the model:")
print(format_goodness(goodness_check(episodes, mdp, 1000, (0, 5, 10), rng)))
