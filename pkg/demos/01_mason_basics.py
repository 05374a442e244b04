"""Mason's gain rule on a small feedback graph, checked against a linear solve.

The graph has a forward chain s -> a -> b -> t, a feedback branch b -> a and a
self loop on t. The two loops do not touch, so the determinant picks up their
product.
"""
import numpy as np

from pdlmba.sfg import FlowGraph, enumerate_loops, enumerate_paths, mason_transfer, solve_linear

g = FlowGraph.from_branches([
    ("s", "a", 1.0),
    ("a", "b", 0.8j),
    ("b", "a", 0.5),
    ("b", "t", 2.0),
    ("t", "t", -0.25),
])

print("forward paths:", enumerate_paths(g, "s", "t"))
print("loops:        ", enumerate_loops(g))

sol = mason_transfer(g, "s", "t")
print(f"determinant:   {sol.determinant[0]:.6f}")
print(f"Mason T(s->t): {sol.transfer[0]:.12f}")

# the same number from (I - A) x = e
lin = solve_linear(g, {"s": 1.0})["t"][0]
print(f"linear solve:  {lin:.12f}")

# and by hand: path 1.6j, loops L1 = 0.4j (a<->b), L2 = -0.25 (t)
by_hand = 1.6j / (1 - 0.4j - (-0.25) + 0.4j * -0.25)
print(f"by hand:       {by_hand:.12f}")
assert np.isclose(sol.transfer[0], lin) and np.isclose(lin, by_hand)
