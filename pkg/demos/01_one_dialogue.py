"""
Walking one dialogue through the state machine
==============================================

The system tracks seven features of the exchange and, at 42 of the 62
reachable states, has two actions to choose from. Here we script the
recognizer so the user gives everything at the greeting, then watch the
state estimate move until the system tells the user what it found.
"""

from dialogrl.domain import (
    DEFAULT_THRESHOLDS,
    TASKS,
    Action,
    AsrResult,
    OperationsVector,
    advance,
    allowed_actions,
    estimate_state,
    evaluate_rewards,
    prompt_text,
    query_from_ops,
    reachability,
)

info = reachability()
print(f"{len(info.states)} reachable states, {len(info.choice_states)} with a choice, "
      f"at most {info.max_user_turns} user turns\n")

# %%
# The user wants museums in Morristown on an afternoon.  The open greeting
# lets them say all three things at once, and the recognizer hears them with
# high confidence.

task = TASKS[1]
heard_everything = AsrResult({1: "museums", 2: "Morristown", 3: "afternoon"}, confidence=0.95)
script = [
    (Action.GreetU, heard_everything),
    (Action.NoConf, None),
    (Action.ExpConf2, AsrResult(answer="yes")),
    (Action.ExpConf3, AsrResult(answer="yes")),
]

ops = OperationsVector()
for action, asr in script:
    state = estimate_state(ops)
    options = " / ".join(a.name for a in allowed_actions(state))
    print(f"{state.digits}  options: {options:<22} chose {action.name}")
    if action.elicits_speech:
        print(f"    system: {prompt_text(action, ops)}")
    ops = advance(ops, action, asr, DEFAULT_THRESHOLDS)

print(f"{estimate_state(ops).digits}  Tell")
print(f"    system: {prompt_text(Action.Tell, ops)}")

# %%
# The three objective scores compare the final database query to the task.

rewards = evaluate_rewards(query_from_ops(ops), task)
print(f"\nbinary={rewards.binary} weak={rewards.weak} asr={rewards.asr}")

# %%
# Had the activity and location never been obtained, the query would carry
# wildcards for them.  Only the time would be correct.

partial = evaluate_rewards((None, None, "morning"), TASKS[4])
print(f"two wildcards, correct time: binary={partial.binary} weak={partial.weak} asr={partial.asr}")
