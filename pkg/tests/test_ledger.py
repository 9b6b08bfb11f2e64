from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dertrust.experience import ExperienceParams, ExperienceState, apply_decay_epochs
from dertrust.ledger import FeedbackEvent, Ledger, LedgerError, Replayer, replay

P = ExperienceParams()


def ev(block, a, b, score, tx="t"):
    return FeedbackEvent(block, a, b, score, tx)


def test_append_and_length():
    assert len(Ledger().append(ev(1, "A", "B", 0.8))) == 1


def test_append_out_of_order():
    led = Ledger().append(ev(5, "A", "B", 0.8))
    with pytest.raises(LedgerError):
        led.append(ev(3, "A", "B", 0.8))


def test_equal_blocks_allowed():
    led = Ledger().append(ev(5, "A", "B", 0.8)).append(ev(5, "B", "A", 0.8))
    assert len(led) == 2


@pytest.mark.parametrize("args", [(1, "A", "A", 0.8), (1, "A", "B", 0.0),
                                  (1, "A", "B", 1.2), (-1, "A", "B", 0.5)])
def test_invalid_events(args):
    with pytest.raises(LedgerError):
        ev(*args)


def test_file_backed_append(tmp_path):
    path = tmp_path / "l.jsonl"
    led = Ledger(path=path, fsync=True)
    path.write_text(Ledger().dumps())
    led.append(ev(1, "A", "B", 0.8, "x"))
    assert Ledger.load(path).events == [ev(1, "A", "B", 0.8, "x")]


def test_empty_file(tmp_path):
    p = tmp_path / "e.jsonl"
    p.write_text("")
    led = Ledger.load(p)
    assert len(led) == 0 and led.decay_epoch == 100


def test_canonical_roundtrip(data_dir, tmp_path):
    src = data_dir / "golden_ledger.jsonl"
    out = tmp_path / "copy.jsonl"
    Ledger.load(src).save(out)
    assert out.read_bytes() == src.read_bytes()


def test_missing_score_names_line():
    text = ('{"schema_version": 1, "decay_epoch": 10, "head_block": null, "users": []}\n'
            '{"block": 0, "from": "A", "to": "B", "score": 0.8, "tx_id": "a"}\n'
            '{"block": 1, "from": "A", "to": "B", "tx_id": "b"}\n')
    with pytest.raises(LedgerError, match="line 3") as info:
        Ledger.loads(text)
    assert "score" in str(info.value) and info.value.line == 3


def test_schema_version_mismatch():
    with pytest.raises(LedgerError, match="schema_version"):
        Ledger.loads('{"schema_version": 9}\n')


def test_bad_json_line():
    with pytest.raises(LedgerError, match="line 2"):
        Ledger.loads('{"block": 0, "from": "A", "to": "B", "score": 0.8, "tx_id": "a"}\n{oops\n')


def test_single_event_replay():
    g = replay(Ledger([ev(0, "A", "B", 0.8)]))
    assert g.exp("A", "B") == pytest.approx(0.52, abs=1e-15)


def test_two_cooperative_events():
    g = replay(Ledger([ev(0, "A", "B", 0.8), ev(1, "A", "B", 0.8)], decay_epoch=1000))
    # 0.5 -> 0.52 -> 0.52 + 0.8*0.05*0.48
    assert g.exp("A", "B") == pytest.approx(0.5392, abs=1e-15)


def test_idle_edge_decays_to_head():
    D = 10
    g = replay(Ledger([ev(0, "A", "B", 0.8)], decay_epoch=D, head_block=2 * D))
    assert g.exp("A", "B") == pytest.approx(0.51505, abs=1e-15)


def golden_oracle():
    d = g = F(5, 1000)
    a = F(5, 100)

    def inc(c, s):
        return c + s * a * (1 - c)

    def decay(c, p):
        return c - d * (1 + g - p), c

    # A -> B: update @0, one decay before the update @12, one decay to head 25
    c, p = inc(F(1, 2), F(8, 10)), F(1, 2)
    c, p = decay(c, p)
    c, p = inc(c, F(9, 10)), c
    c, p = decay(c, p)
    ab = (float(c), float(p), 22)
    # B -> C: uncooperative @4, two decays to head 25
    c, p = F(1, 2) - F(16, 10) * (1 - F(3, 10)) * a * F(1, 2), F(1, 2)
    c, p = decay(c, p)
    c, p = decay(c, p)
    bc = (float(c), float(p), 24)
    return ab, bc


def test_golden_replay_matches_hand_oracle(data_dir):
    g = replay(Ledger.load(data_dir / "golden_ledger.jsonl"))
    ab, bc = golden_oracle()
    for (src, dst), want in ((("A", "B"), ab), (("B", "C"), bc)):
        s = g.get(src, dst)
        assert s.current == pytest.approx(want[0], abs=1e-15)
        assert s.previous == pytest.approx(want[1], abs=1e-15)
        assert s.last_update_block == want[2]


def test_golden_snapshot_bytes(data_dir):
    g = replay(Ledger.load(data_dir / "golden_ledger.jsonl"))
    assert g.dumps() == (data_dir / "golden_snapshot.jsonl").read_text()


def test_neutral_feedback_decays_in_addition_to_epochs():
    led = Ledger([ev(0, "A", "B", 0.9), ev(10, "A", "B", 0.6)], decay_epoch=10)
    g = replay(led)
    r = Replayer(P, 10)
    r.apply(ev(0, "A", "B", 0.9))
    s = r.graph.get("A", "B")
    s = apply_decay_epochs(s, 2, P)
    assert g.exp("A", "B") == s.current


def test_header_users_interned_first():
    led = Ledger([ev(0, "B", "A", 0.8)], users=["Z", "A"])
    g = replay(led)
    assert g.users == ["Z", "A", "B"]


def test_replayer_rejects_going_back():
    r = Replayer(P, 10)
    r.apply(ev(5, "A", "B", 0.8))
    with pytest.raises(LedgerError):
        r.apply(ev(4, "A", "B", 0.8))
    with pytest.raises(LedgerError):
        r.advance_to(3)


@st.composite
def ledgers(draw):
    n_users = draw(st.integers(2, 5))
    users = [f"u{i}" for i in range(n_users)]
    n = draw(st.integers(1, 30))
    block = 0
    events = []
    for k in range(n):
        block += draw(st.integers(0, 25))
        a, b = draw(st.lists(st.sampled_from(users), min_size=2, max_size=2, unique=True))
        score = draw(st.sampled_from([0.05, 0.3, 0.5, 0.6, 0.7, 0.9, 1.0]))
        events.append(ev(block, a, b, score, f"t{k}"))
    epoch = draw(st.integers(1, 20))
    head = block + draw(st.integers(0, 60))
    return Ledger(events, decay_epoch=epoch, head_block=head)


@settings(max_examples=100, deadline=None)
@given(ledgers(), st.data())
def test_prefix_consistency(led, data):
    k = data.draw(st.integers(0, len(led)))
    full = replay(led)
    partial = replay(led.prefix(k))
    r = Replayer(P, led.decay_epoch, partial)
    r.apply_all(led.events[k:])
    r.advance_to(led.final_block)
    assert r.graph.dumps() == full.dumps()


@settings(max_examples=50, deadline=None)
@given(ledgers())
def test_replay_deterministic(led):
    text = led.dumps()
    assert replay(Ledger.loads(text)).dumps() == replay(Ledger.loads(text)).dumps()


@given(st.floats(0.05, 1.0), st.integers(1, 10), st.integers(1, 30), st.integers(0, 9))
def test_idle_decay_equivalence(score, n, D, extra):
    led = Ledger([ev(0, "A", "B", score)], decay_epoch=D, head_block=n * D + min(extra, D - 1))
    r = Replayer(P, D)
    s = r.apply(ev(0, "A", "B", score))
    want = apply_decay_epochs(s, n, P)
    got = replay(led).get("A", "B")
    assert got.current == want.current and got.previous == want.previous
