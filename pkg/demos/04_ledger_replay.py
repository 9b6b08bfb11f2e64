"""Rebuilding the trust graph from an append-only feedback ledger.

Replay is deterministic: replaying a prefix and then the rest gives exactly
the same snapshot as replaying everything at once.
"""

import tempfile
from pathlib import Path

from dertrust import FeedbackEvent, Ledger, Replayer, replay
from dertrust.experience import ExperienceParams

with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "ledger.jsonl"
    ledger = Ledger(decay_epoch=10, path=path)
    ledger.append(FeedbackEvent(0, "A", "B", 0.8, "t1"))
    ledger.append(FeedbackEvent(4, "B", "C", 0.3, "t2"))
    ledger.append(FeedbackEvent(12, "A", "B", 0.9, "t3"))
    ledger.head_block = 25
    ledger.save(path)
    print(path.read_text())

    loaded = Ledger.load(path)
    snapshot = replay(loaded).dumps()
    print(snapshot)

    r = Replayer(ExperienceParams(), loaded.decay_epoch, replay(loaded.prefix(2)))
    r.apply_all(loaded.events[2:])
    r.advance_to(loaded.final_block)
    print("incremental replay identical:", r.graph.dumps() == snapshot)
