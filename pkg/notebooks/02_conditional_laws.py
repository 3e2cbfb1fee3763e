# %% [markdown]
# # Conditional laws and the selection event
#
# Every test compares two populations through the law of their
# half-difference given their sum and everyone else.  Conditioning on "the
# leader won" truncates that law from below.

# %%
import numpy as np

from rankverify import Multinomial, build_law, majorizes, survival
from rankverify.condlaw import Truncation
from rankverify.majorization import check_schur_concave

family = Multinomial(3, 40)
x = np.array([19, 13, 8])
full = build_law(family, x, 0, 1)
d_obs = (x[0] - x[1]) / 2
print("support of X_1:", full.xj[0], "to", full.xj[-1])
print("upper tail P(D >= d):", round(survival(full, d_obs), 5))

# %% [markdown]
# The leader must beat population 3, so D is truncated at
# max(x_3 - M, 0).  With an untilted symmetric law the truncated tail is
# exactly twice the untruncated one.

# %%
lower = max(x[2] - (x[0] + x[1]) / 2, 0)
trunc = build_law(family, x, 0, 1, trunc=Truncation(lower=lower, lower_weight=0.5))
print("selective p:", round(survival(trunc, d_obs), 5), " twice the tail:", round(2 * survival(full, d_obs), 5))

# %% [markdown]
# Tilting by delta shifts mass upward; the tail is monotone in delta, which
# is what makes confidence bounds by inversion work.

# %%
for delta in (-1.0, 0.0, 0.5, 1.0):
    print(f"delta={delta:+.1f}  p={survival(build_law(family, x, 0, 1, delta), d_obs):.5f}")

# %% [markdown]
# ## Majorization
# More spread-out vectors majorize more even ones; carriers that shrink along
# that order (Schur-concave) are what the guarantees need.

# %%
print(majorizes((3, 1, 0), (2, 2, 0)).direction)
print("violations:", len(check_schur_concave(Multinomial(3, 20), n_probes=2000)))
