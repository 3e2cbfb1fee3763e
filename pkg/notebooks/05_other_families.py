# %% [markdown]
# # Other exponential families
#
# Independent binomial arms, round-robin tournaments and sample variances all
# have Schur-concave carriers, so the same procedures apply.

# %%
import numpy as np

from rankverify import BradleyTerry, IndependentBinomial, NormalVariance
from rankverify import procedure1, procedure2prime, procedure3

# %% [markdown]
# Three treatment arms with 20 patients each.

# %%
arms = IndependentBinomial(3, 20)
out = procedure1(arms, [17, 9, 8])
print("best arm p =", round(out.p_value, 5), "odds-ratio bound", round(procedure2prime(arms, [17, 9, 8]).interpretation.value, 3))

# %% [markdown]
# A five-player round robin; wins sum to 10.

# %%
league = BradleyTerry(5)
print(procedure3(league, [4, 3, 2, 1, 0]).j_hat, "ranks verified")

# %% [markdown]
# Which of three machines is most variable?  The observations are sample
# variances, and a larger natural parameter -(m - 1) / (2 sigma^2) means a
# larger sigma^2, so the winner is the noisiest machine.

# %%
variances = np.array([3.3, 0.9, 0.8])
out = procedure1(NormalVariance(3, 15), variances)
print(out.winner, "p =", round(out.p_value, 4))
