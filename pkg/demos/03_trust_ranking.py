"""Choosing a provider by combining own experience with global reputation."""

from dertrust import (ExperienceState, TrustGraph, TrustQuery, compute_reputation,
                      rank_counterparts, trust)

g = TrustGraph(users=["alice", "bob", "carol", "dave", "erin"])
g.upsert_edge("alice", "bob", ExperienceState(0.9, 0.88))
g.upsert_edge("carol", "bob", ExperienceState(0.8, 0.8))
g.upsert_edge("dave", "carol", ExperienceState(0.75, 0.7))
g.upsert_edge("erin", "dave", ExperienceState(0.2, 0.3))
g.upsert_edge("alice", "dave", ExperienceState(0.3, 0.35))

rep = compute_reputation(g)
for user, r in zip(g.users, rep.rep):
    print(f"{user:6s} reputation {r:.4f}")

# alice knows bob and dave first hand; carol she only knows by reputation.
for name, score in rank_counterparts(g, rep, "alice", ["bob", "carol", "dave"]):
    print(f"alice -> {name:6s} trust {score.value:.4f} ({score.basis.value})")

# Leaning entirely on first-hand experience.
q = TrustQuery("alice", "dave", w1=0.0, w2=1.0)
print("experience only, alice -> dave:", trust(g, rep, q).value)
