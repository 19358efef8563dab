"""One-shot games: equilibrium play pins down neither value nor rewards.

A two-agent coordination game with payoffs 1 (both pick the first action)
or 2 (both pick the second) has several zero-regret mediator policies with
different values, and the same pure policy is an equilibrium under several
reward tensors.  Matching equilibrium behavior therefore identifies
neither the value a mediator delivers nor the rewards that rationalize it,
which is exactly why the regret gap is compared policy-to-policy instead
of reconstructed through a recovered reward.

Run:  python demos/05_one_shot_equilibria.py
"""

from regretgap import DeviationClass, regret, value, value_gap
from regretgap.fixtures import multi_ce_nfg

fx_r, fx_rp = multi_ce_nfg()
complete = DeviationClass.complete(2)
sigma1, sigma2 = fx_r.expert, fx_r.learner
uniform = fx_rp.learner

print("payoff r: diagonal (1, 2); payoff r': diagonal (1, 1)")
print("\npolicy sigma1: all mass on (a1, a1); sigma2:", sigma2.table[0].round(3))

print("\nunder r:")
print("  regret(sigma1) =", regret(fx_r.game, sigma1, complete))
print("  regret(sigma2) =", regret(fx_r.game, sigma2, complete))
print("  value(sigma1)  =", value(fx_r.game, sigma1, 0))
print("  value(sigma2)  =", value(fx_r.game, sigma2, 0))
print("  -> regret gap 0, value gap", value_gap(fx_r.game, sigma1, sigma2))

# sigma2 works because each recommendation leaves the recipient exactly
# indifferent: seeing a1, the posterior on the partner playing a1 is 2/3,
# and 2/3 * 1 equals 1/3 * 2.
table = sigma2.table[0].reshape(2, 2)
post = table[0] / table[0].sum()
print("\nposterior on partner's action after an a1 recommendation:", post.round(3))
print("payoff if obedient:", post[0] * 1, "| payoff if defecting:", post[1] * 2)

print("\nunder r':")
print("  regret(sigma1)  =", regret(fx_rp.game, sigma1, complete))
print("  regret(uniform) =", regret(fx_rp.game, uniform, complete))
print("  but the same uniform policy under the true r has regret",
      regret(fx_r.game, uniform, complete))

print("\nsigma1 is an equilibrium under both r and r', so observing it cannot"
      "\ntell the rewards apart; and r admits several equilibria with values"
      "\n1 and 2/3, so 'plays an equilibrium' does not pin the value either.")
