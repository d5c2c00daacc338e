import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dialogrl.domain import NONRESTRICTIVE, RESTRICTIVE, TASKS, bin_confidence
from dialogrl.usersim import (
    AsrParams,
    GrammarNoise,
    SimulatorConfig,
    UserProfile,
    asr_decode,
    confirm_response,
    dump_config,
    load_config,
    parse_config,
    sample_task,
    user_utterance,
    web_feedback,
    zero_noise_config,
)

TASK = TASKS[4]


def rng(seed=0):
    return np.random.default_rng(seed)


def test_task_sampling_is_seeded():
    g1, g2 = rng(7), rng(7)
    first = [sample_task(g1) for _ in range(20)]
    assert first == [sample_task(g2) for _ in range(20)]
    assert all(1 <= t <= 6 and task == TASKS[t] for t, task in first)
    task_id, task = sample_task(rng(1), "grid")
    assert task_id >= 101 and task.activity


def test_open_greeting_overanswers():
    profile = UserProfile(p_overanswer=1.0, p_silent=0.0)
    intent = user_utterance(TASK, 1, "open", profile, rng())
    assert intent == {1: "wineries", 2: "Lambertville", 3: "morning"}


def test_silent_user():
    assert user_utterance(TASK, 1, "open", UserProfile(p_silent=1.0), rng()) == {}


def test_directive_prompt_gives_only_asked_slot():
    profile = UserProfile(p_overanswer=0.0, p_silent=0.0)
    assert user_utterance(TASK, 2, "directive", profile, rng()) == {2: "Lambertville"}
    profile = UserProfile(p_overanswer=1.0, p_silent=0.0)
    assert user_utterance(TASK, 2, "directive", profile, rng()) == {2: "Lambertville"}
    assert user_utterance(TASK, 2, "directive", profile, rng(), grammar=NONRESTRICTIVE) == \
        {2: "Lambertville", 3: "morning"}


def test_bad_attribute():
    with pytest.raises(ValueError):
        user_utterance(TASK, 4, "open", UserProfile(), rng())


def test_zero_noise_decode_is_exact():
    params = zero_noise_config().asr
    intent = {1: "wineries", 2: "Lambertville", 3: "morning"}
    res = asr_decode(intent, NONRESTRICTIVE, 1, params, rng())
    assert res.slots == intent and 0 <= res.confidence <= 1


def test_restrictive_grammar_hears_only_asked_slot():
    intent = {1: "wineries", 2: "Lambertville", 3: "morning"}
    for seed in range(50):
        res = asr_decode(intent, RESTRICTIVE, 1, AsrParams(), rng(seed))
        assert set(res.slots) <= {1}


def test_substitution_rate():
    noise = GrammarNoise(0.8, 0.2, 0.0)
    params = AsrParams(restrictive=noise)
    g = rng(12)
    n = 10_000
    subs = sum(asr_decode({2: "Lambertville"}, RESTRICTIVE, 2, params, g).slots[2] != "Lambertville"
               for _ in range(n))
    assert abs(subs / n - 0.2) <= 0.012


def test_silence_decodes_to_nothing():
    res = asr_decode({}, RESTRICTIVE, 1, AsrParams(), rng())
    assert res.slots == {} and res.confidence is None


def test_confirmation_answers():
    clean = UserProfile(p_silent=0.0, p_yesno_flip=0.0)
    assert confirm_response("zoos", "aquariums", clean, rng()) == "no"
    assert confirm_response("zoos", "zoos", clean, rng()) == "yes"
    flip = UserProfile(p_silent=0.0, p_yesno_flip=0.1)
    g = rng(2)
    n = 10_000
    nos = sum(confirm_response("zoos", "zoos", flip, g) == "no" for _ in range(n))
    assert abs(nos / n - 0.1) <= 0.009


def test_confidence_modes_separate_correct_from_corrupted():
    params = AsrParams()
    g = rng(5)
    good = np.mean([params.draw_confidence(False, g) for _ in range(4000)])
    bad = np.mean([params.draw_confidence(True, g) for _ in range(4000)])
    assert good == pytest.approx(0.6, abs=0.02)
    assert bad == pytest.approx(0.45, abs=0.02)


def test_calibrated_thresholds_split_the_mixture():
    cfg = SimulatorConfig()
    lo, hi = cfg.thresholds
    assert 0 < lo < hi < 1
    g = rng(cfg.calibration_seed)
    p_sub = 0.5 * (cfg.asr.restrictive.p_substitute + cfg.asr.nonrestrictive.p_substitute)
    corrupted = g.random(9999) < p_sub
    samples = g.triangular(0, np.where(corrupted, 0.35, 0.8), 1)
    counts = np.bincount([bin_confidence(x, (lo, hi)) for x in samples], minlength=3)
    assert all(abs(c - 3333) <= 1 for c in counts)


def test_web_feedback_distribution():
    cfg = SimulatorConfig(feedback_success=(1, 0, 0), feedback_failure=(0, 0, 1))
    assert web_feedback(1, cfg, rng()) == 1
    assert web_feedback(-1, cfg, rng()) == -1


def test_invalid_parameters():
    with pytest.raises(ValueError):
        GrammarNoise(0.5, 0.2, 0.2)
    with pytest.raises(ValueError):
        UserProfile(p_silent=1.5)
    with pytest.raises(ValueError):
        SimulatorConfig(task_mode="random")
    with pytest.raises(ValueError):
        SimulatorConfig(feedback_success=(0.5, 0.5))


def test_config_round_trip(tmp_path):
    cfg = SimulatorConfig(profile=UserProfile(0.3, 0.1, 0.02), task_mode="grid")
    path = tmp_path / "sim.cfg"
    path.write_text(dump_config(cfg))
    assert load_config(path) == cfg


def test_config_rejects_unknown_keys():
    with pytest.raises(ValueError, match="line 2"):
        parse_config("p_silent = 0.1\np_sneeze = 0.2\n")
    with pytest.raises(ValueError, match="line 1"):
        parse_config("p_silent 0.1\n")


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=50, deadline=None)
def test_same_seed_same_draws(seed):
    profile, params = UserProfile(), AsrParams()
    outs = []
    for _ in range(2):
        g = rng(seed)
        intent = user_utterance(TASK, 1, "open", profile, g, NONRESTRICTIVE)
        outs.append((intent, asr_decode(intent, NONRESTRICTIVE, 1, params, g)))
    assert outs[0] == outs[1]
