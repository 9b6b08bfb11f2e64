"""Sybil, endorsement and bad-mouthing attacks against a simulated market.

The same seed drives the baseline and the attacked run, so any difference in
the target's standing comes from the attack alone. Gains are reported in
units of the bootstrap reputation (1 - d) / N.
"""

from pathlib import Path

from dertrust.simulator import Scenario, attack_effect, run

here = Path(__file__).parents[1] / "scenarios"
base = Scenario.load(here / "baseline.json")
reference = run(base)

for name in ("sybil", "endorse", "badmouth_fresh", "badmouth_established"):
    attack = Scenario.load(here / f"{name}.json").attack
    eff = attack_effect(base, attack, baseline=reference)
    b = eff["bootstrap"]
    print(f"{name:22s} target {eff['target']:6s} "
          f"rep_pos gain {eff['rep_pos_gain'] / b:6.1f}b  "
          f"rank {eff['rank_baseline']} -> {eff['rank_attacked']}")

# Whitewashers drop an identity once its negative standing dominates.
_, report = run(Scenario.load(here / "whitewash.json"))
events = report.summary().get("whitewash") or []
paid_off = [e for e in events if e["epochs_to_exceed"] is not None]
print(f"whitewash: {len(events)} identities abandoned, "
      f"{len(paid_off)} replacements ever beat the identity they replaced")
