"""Global reputation from a random trust graph.

Experience above 0.5 feeds the positive graph, experience below it feeds the
negative graph, and a damped power iteration ranks every user on both.
"""

import numpy as np

from dertrust import ReputationParams, build_transition_matrices, solve, split_experience
from dertrust.simulator import random_experience_matrix

e = random_experience_matrix(2000, seed=1)
a_pos, a_neg = build_transition_matrices(split_experience(e))

vec = solve(a_pos, a_neg, ReputationParams(), record_trace=True)
print(f"converged={vec.converged} in {vec.iterations} iterations")
print("residual trace:", " ".join(f"{r:.1e}" for r in vec.residual_trace[:8]), "...")

# Users with more negative than positive standing are floored at zero.
print("users at zero reputation:", int(np.sum(vec.rep == 0)))
top = np.argsort(-vec.rep, kind="stable")[:5]
print("top five users:", top.tolist())

# The fixed point does not depend on where the iteration starts.
rng = np.random.default_rng(0)
x = rng.random(2000)
other = solve(a_pos, a_neg, ReputationParams(),
              init=type(vec)(x / x.sum(), x[::-1] / x.sum()))
print("max gap between starts:", float(np.max(np.abs(other.rep - vec.rep))))
