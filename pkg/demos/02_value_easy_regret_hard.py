"""Why matching the expert's value is not enough with strategic agents.

The fig1 construction builds two policies whose occupancy measures are
bitwise identical, so every reward function assigns them the same value.
Yet one of them hands a strategic agent an order-H incentive to defect:
the policies differ only at a state the expert never visits, and a single
agent's deviation makes exactly that state reachable.

This is the whole story in one plot-free script: the value gap is blind to
counterfactual recommendations, the regret gap is not.

Run:  python demos/02_value_easy_regret_hard.py
"""

import numpy as np

from regretgap import (
    DeviationClass,
    best_response_deviation,
    moment_matching_error,
    regret,
    regret_gap,
    value_gap,
    values,
    with_common_reward,
)
from regretgap.fixtures import fig1_game

H = 8
fx = fig1_game(H)
game, expert, learner = fx.game, fx.expert, fx.learner
complete = DeviationClass.complete(2)

print(f"fork-and-chain game, horizon {H}, {game.n_states} states")
print("expert row at the hidden fork s1:", expert.table[1].round(2))
print("learner row at the hidden fork s1:", learner.table[1].round(2))

# --- the two policies are indistinguishable to any reward ------------------
occ_l1 = moment_matching_error(game, expert, learner)
print("\nL1 distance between occupancy measures:", occ_l1)
print("value gap:", value_gap(game, expert, learner))
print("values (expert, learner):", values(game, expert), values(game, learner))

# --- but not to a strategic agent ------------------------------------------
print("\nregret of the expert:", regret(game, expert, complete))
print("regret of the learner:", regret(game, learner, complete))
print("regret gap:", regret_gap(game, expert, learner, complete), f"(= H-2 = {H - 2})")

br = best_response_deviation(game, learner, agent=0)
print("\nagent 0's best response against the learner gains", br.gain)
print("it swaps the recommendation at the two fork states:")
print("  step 1, s0: recommended a1 ->", game.actions[0][br.deviation.table[0, 0, 0]])
print("  step 2, s1: recommended a1 ->", game.actions[0][br.deviation.table[1, 1, 0]])

# --- sweeping single-cell rewards makes the blindness precise --------------
# Every single-cell reward gives both policies identical value (occupancy
# equality), and penalizing any one cell leaves both with the regret H *
# occupancy(cell).  The gap only appears under rewards that pay along the
# chain the deviation unlocks.
worst_value_gap = 0.0
worst_regret_gap = 0.0
for s in range(game.n_states):
    f = np.zeros((game.n_states, game.n_joint_actions))
    f[s, :] = 1.0
    g2 = with_common_reward(game, f)
    worst_value_gap = max(worst_value_gap, abs(value_gap(g2, expert, learner)))
    worst_regret_gap = max(worst_regret_gap, regret_gap(g2, expert, learner, complete))
print("\nacross all single-state rewards:")
print("  largest |value gap|:", worst_value_gap)
print("  largest regret gap: ", worst_regret_gap)
print("\nvalue is easy; regret needs to know what the expert would have done"
      "\nat states only a deviation can reach.")
