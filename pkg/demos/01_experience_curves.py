"""How direct experience grows, shrinks and fades.

A trustor starts every relationship at the bootstrap value 0.5. Good
interactions push it towards 1 with diminishing steps, bad ones pull it down
hard, and silence lets it drift down slowly.
"""

from dertrust import ExperienceParams
from dertrust.simulator import exp_curve, steps_to_reach

params = ExperienceParams()

# A run of solid 0.9 ratings. The step shrinks as experience approaches 1.
good = exp_curve(params, [0.9] * 40)
print("after 10 good interactions:", round(good[9], 4))
print("after 40 good interactions:", round(good[39], 4))

# A faster learning rate gets to "trusted" (0.7) in half the interactions.
for alpha in (0.05, 0.1):
    trace = exp_curve(ExperienceParams(alpha=alpha), [0.9] * 40)
    print(f"alpha={alpha}: reaches 0.7 at step {steps_to_reach(trace, 0.7)}")

# Ten good interactions then two bad ones. Losses outweigh gains (beta > 1).
mixed = exp_curve(params, [0.9] * 10 + [0.1] * 2)
print("ten good:", round(mixed[9], 4), "then two bad:", round(mixed[11], 4))

# Neutral scores (between the two thresholds) and missing feedback count as decay.
idle = exp_curve(params, [0.9] * 10 + [0.0] * 50)
print("after 50 idle epochs:", round(idle[-1], 4))
