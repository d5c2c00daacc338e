import io
import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dialogrl import corpus as store
from dialogrl.corpus import Corpus, CorpusError, Step, TrajectoryRecord
from dialogrl.domain import Action, DialogueState, RewardBundle
from dialogrl.harness import collect
from dialogrl.usersim import SimulatorConfig

S = DialogueState.from_digits
GOLDEN_STEPS = (
    Step(S("0100000"), Action.GreetU),
    Step(S("1121000"), Action.NoConf),
    Step(S("1221001"), Action.ExpConf2),
    Step(S("1321001"), Action.ExpConf3),
    Step(S("1400000"), Action.Tell, 1.0),
)


def record(dialogue_id="d1", steps=GOLDEN_STEPS, mode="exploratory", binary=1):
    rewards = RewardBundle(1, 3, 3.0, 1) if binary == 1 else RewardBundle(-1, 0, 1.5, 0)
    return TrajectoryRecord(dialogue_id, 1, "0/0/0", steps, rewards, mode)


def test_append_adds_one_line(tmp_path):
    path = tmp_path / "c.jsonl"
    store.append(record("a"), path)
    store.append(record("b"), path)
    assert len(path.read_text().splitlines()) == 2


def test_out_of_range_digit_names_field():
    bad = (Step(DialogueState(1, 1, 7, 1, 0, 0, 0), Action.NoConf),) + GOLDEN_STEPS[1:]
    with pytest.raises(CorpusError, match="confidence_confirmed"):
        record(steps=bad)
    line = store.dump_line(record()).replace('"1121000"', '"1171000"')
    with pytest.raises(CorpusError, match="confidence_confirmed"):
        store.load(io.StringIO(line))


def test_invariants_enforced():
    with pytest.raises(CorpusError, match="reachable"):
        record(steps=(Step(S("1100000"), Action.Tell),))
    with pytest.raises(CorpusError, match="zero reward"):
        record(steps=(Step(S("0100000"), Action.GreetU, 1.0),) + GOLDEN_STEPS[1:])
    with pytest.raises(CorpusError, match="Tell"):
        record(steps=GOLDEN_STEPS[:-1])
    with pytest.raises(CorpusError, match="policy_mode"):
        record(mode="greedy")
    with pytest.raises(CorpusError, match="empty"):
        record(steps=())


def test_round_trip_is_byte_equal(tmp_path):
    records = collect(25, None, SimulatorConfig(), seed=8)
    path = tmp_path / "c.jsonl"
    store.write(records, path)
    back = store.load(path)
    assert back == records
    again = tmp_path / "d.jsonl"
    store.write(back, again)
    assert path.read_bytes() == again.read_bytes()


def test_key_order_is_documented():
    data = json.loads(store.dump_line(record()))
    assert list(data) == ["dialogue_id", "task_id", "seed", "policy_mode", "steps", "rewards"]
    assert list(data["steps"][0]) == ["state", "action", "reward"]
    assert list(data["rewards"]) == ["binary", "weak", "asr", "web_feedback"]


def test_tally_by_hand():
    short = (Step(S("0100000"), Action.GreetS), Step(S("1101000"), Action.NoConf),
             Step(S("1200001"), Action.Ask2S), Step(S("1201001"), Action.NoConf),
             Step(S("1300000"), Action.Ask3S), Step(S("1301001"), Action.NoConf),
             Step(S("1400000"), Action.Tell, -1.0))
    corpus = Corpus([record("a"), record("b"), record("c", short, binary=-1)])
    tally = corpus.tally()
    assert tally[S("0100000"), Action.GreetU] == 2
    assert tally[S("0100000"), Action.GreetS] == 1
    assert tally[S("1400000"), Action.Tell] == 3
    assert tally[S("1221001"), Action.ExpConf2] == 2
    assert sum(tally.values()) == 5 + 5 + 7


def test_truncated_line_cites_line_number():
    text = store.dump_line(record("a")) + store.dump_line(record("b"))[:40]
    with pytest.raises(CorpusError, match="line 2"):
        store.load(io.StringIO(text))


def test_missing_field_reported():
    data = record().to_dict()
    del data["rewards"]
    with pytest.raises(CorpusError, match="line 1.*rewards"):
        store.load(io.StringIO(json.dumps(data) + "\n"))


def test_blank_lines_skipped():
    text = "\n" + store.dump_line(record()) + "\n"
    assert len(store.load(io.StringIO(text))) == 1


@given(st.lists(st.integers(0, 500), min_size=1, max_size=5, unique=True))
@settings(max_examples=15, deadline=None)
def test_append_stream_load_identity(indices):
    records = collect(max(indices) + 1, None, SimulatorConfig(), seed=31)
    chosen = [records[i] for i in indices]
    buf = io.StringIO()
    for r in chosen:
        store.append(r, buf)
    assert store.load(io.StringIO(buf.getvalue())) == chosen
