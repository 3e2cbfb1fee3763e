# %% [markdown]
# # Error rates without Monte Carlo error
#
# For three categories and twelve observations the whole outcome space has
# 91 points, so every error rate can be computed exactly, integrating over
# random tie-breaks and the randomization uniform.

# %%
from rankverify import Multinomial
from rankverify.simulate import ExactModel

family = Multinomial(3, 12)
for theta in ([0, 0, -40], [0, 0, 0], [0.5, 0, 0], [1.0, 0.2, 0.0]):
    model = ExactModel(family, theta)
    rates = model.winner_test_rates(alpha=0.05)
    print(theta, "conditional", round(rates["conditional"], 6), "marginal", round(rates["marginal"], 6),
          "best wins", round(model.best_wins_probability(), 4))

# %% [markdown]
# The randomized selective bound has non-coverage exactly alpha when two
# populations are tied for the lead and the rest are out of the running.

# %%
for delta in (0.0, 0.5, 1.0):
    print(delta, ExactModel(family, [delta, 0, -40]).bound_noncoverage(0.05))

# %% [markdown]
# The runner-up's selective p-value dominates every other pairwise one.

# %%
print("violations:", len(ExactModel(family, [0, 0, 0]).p_ordering_violations(deltas=(-1, 0, 2))))
