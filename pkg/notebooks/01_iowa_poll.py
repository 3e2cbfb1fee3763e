# %% [markdown]
# # Is the poll leader really ahead?
#
# A poll of 890 likely caucus-goers.  We ask: is the leader the most popular
# candidate, by how much, and how many of the leading places are settled?

# %%
from rankverify import Multinomial, procedure1, procedure2, procedure2prime, procedure3, procedure3prime
from rankverify.datasets import IOWA_POLL, iowa_poll

poll = iowa_poll()
family = Multinomial(poll.n, int(poll.values.sum()))
for label, votes in IOWA_POLL.items():
    print(f"{label:12s} {votes:4d}")

# %% [markdown]
# ## Winner verification
# The leader against the runner-up, conditioning on their combined count.

# %%
out = procedure1(family, poll)
print(out.winner, "vs", out.runner_up, "p =", round(out.p_value, 4), "reject:", out.reject)

# %% [markdown]
# ## How far ahead?
# Two lower confidence bounds on the ratio of the leader's share to the best
# of the others.  The selective bound is exact; the pairwise one is
# conservative.

# %%
naive = procedure2(family, poll)
exact = procedure2prime(family, poll)
print("pairwise bound :", round(naive.interpretation.value, 4))
print("selective bound:", round(exact.interpretation.value, 4))

# %% [markdown]
# ## Which ranks are verified?
# The tie between the fifth and sixth place needs a seed for the random
# tie-break.

# %%
for proc in (procedure3, procedure3prime):
    report = proc(family, poll, seed=0)
    print(report.method, "verifies", report.j_hat, "ranks:", ", ".join(report.verified))
    for step in report.steps:
        print(f"   {step.upper:>8s} > {step.lower:<8s} p = {step.p_value:.3g}")
