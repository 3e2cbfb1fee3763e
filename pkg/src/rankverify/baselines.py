"""Gupta-Nagel subset selection and the winner test it induces."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .core import as_observation
from .procedures import TestOutcome, _check_alpha


def _gap_sf(m: int, gap: float) -> float:
    # P(m - 2 B >= gap) for B ~ Bin(m, 1/2), i.e. P(B <= (m - gap) / 2)
    return float(stats.binom.cdf(np.floor((m - gap) / 2), m, 0.5))


def gupta_nagel_d(m: int, n: int, alpha: float) -> int:
    """Smallest ``d`` with ``P(m - 2 Bin(m, 1/2) > d) <= alpha``.

    This is the threshold for the two-candidate worst case
    ``pi = (1/2, 1/2, 0, ..., 0)``; ``n`` only enters through validation.
    """
    if m < 1 or n < 2:
        raise ValueError(f"need m >= 1 and n >= 2, got m={m}, n={n}")
    _check_alpha(alpha)
    b = np.arange(m + 1)
    spread = m - 2 * b                      # values of X_2 - X_1 when X_1 = B
    pmf = stats.binom.pmf(b, m, 0.5)
    for d in range(m + 1):
        if pmf[spread > d].sum() <= alpha:
            return d
    return m


@dataclass(frozen=True)
class SubsetRule:
    d: int
    m: int
    n: int
    alpha: float

    @classmethod
    def for_design(cls, m: int, n: int, alpha: float = 0.05) -> "SubsetRule":
        return cls(gupta_nagel_d(m, n, alpha), m, n, alpha)


def gupta_nagel_subset(x, rule: SubsetRule) -> list[str]:
    """Labels ``j`` with ``x_j >= max_k x_k - d``, in input order."""
    obs = as_observation(x)
    top = obs.values.max()
    return [lab for lab, v in zip(obs.labels, obs.values) if v >= top - rule.d]


def gn_winner_test(x, rule: SubsetRule) -> TestOutcome:
    """Declare the winner best exactly when the selected subset is a singleton.

    The reported p-value ``P(m - 2B >= X_[1] - X_[2])`` satisfies
    ``reject <=> p <= alpha`` for the minimal ``d``.
    """
    obs = as_observation(x)
    order = sorted(range(obs.n), key=lambda i: (-obs.values[i], i))
    w, r = order[0], order[1]
    subset = gupta_nagel_subset(obs, rule)
    gap = float(obs.values[w] - obs.values[r])
    return TestOutcome(
        reject=len(subset) == 1,
        p_value=min(1.0, _gap_sf(rule.m, gap)),
        level_used=rule.alpha,
        adjusted=False,
        winner=obs.labels[w],
        runner_up=obs.labels[r],
        conditioning={"d": rule.d, "subset": subset},
    )
