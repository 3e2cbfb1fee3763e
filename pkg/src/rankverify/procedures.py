"""Rank verification procedures.

* ``procedure1``: is the winner the best?  Unadjusted two-tailed pairwise test
  of winner against runner-up.
* ``procedure2`` / ``procedure2prime``: lower confidence bounds on the gap
  between the winner's natural parameter and the best of the rest.
* ``procedure3`` / ``procedure3prime``: stepwise verification of the leading
  ranks with familywise error control.

Indices in this module are 0-based; ``rank`` arguments refer to positions in
an :class:`~rankverify.core.OrderedView`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .condlaw import (
    NO_TRUNCATION,
    Truncation,
    build_law,
    two_tailed_p,
)
from .core import (
    LATTICE,
    Family,
    Interpretation,
    Observation,
    OrderedView,
    SeedRequired,
    as_observation,
    interpret_delta,
    order_observation,
    order_probability,
)

DELTA_CAP = 64.0
DELTA_TOL = 1e-8


def _check_alpha(alpha):
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")


def _uniform(seed, randomized):
    if not randomized:
        return None
    if seed is None:
        raise SeedRequired("randomized p-values need an explicit seed")
    return float(np.random.default_rng([seed, 1]).random())


def _prepare(family: Family, x, tie_mode, seed, depth):
    obs = as_observation(x)
    if obs.n < 2:
        raise ValueError("need at least two populations")
    obs.validate(family)
    view = order_observation(obs.values, tie_mode=tie_mode, seed=seed, depth=depth)
    return obs, view


def max_p_combine(ps) -> float:
    """Max-p combination, valid for the union of the individual nulls."""
    ps = list(ps)
    if not ps:
        raise ValueError("need at least one p-value")
    for p in ps:
        if not 0 <= p <= 1:
            raise ValueError(f"p-value {p} outside [0, 1]")
    return max(ps)


@dataclass(frozen=True)
class PairSetup:
    """Everything needed to build the selective law of one ranked pair.

    ``upper_trunc`` adds the constraint that the higher-ranked member stays
    below the population ranked just above it.
    """

    family: Family
    values: np.ndarray
    view: OrderedView
    j: int
    k: int
    trunc: Truncation
    d_obs: float

    @property
    def indices(self) -> tuple[int, int]:
        return self.view[self.j], self.view[self.k]

    def law(self, delta: float = 0.0):
        a, b = self.indices
        return build_law(self.family, self.values, a, b, delta, self.trunc)

    def p_value(self, delta: float = 0.0, u: float | None = None) -> float:
        return self.law(delta).sf(self.d_obs, u)

    def describe(self) -> dict:
        return {"lower": self.trunc.lower, "upper": self.trunc.upper,
                "lower_weight": self.trunc.lower_weight, "upper_weight": self.trunc.upper_weight,
                "M": float(self.values[self.indices[0]] + self.values[self.indices[1]]) / 2}


def selective_setup(family: Family, values, view: OrderedView, j: int, k: int,
                    upper_trunc: bool = False) -> PairSetup:
    """Truncation for the selective law of ranks ``j < k``.

    The selection event is that rank ``j`` beats every population ranked
    after it; with ``upper_trunc`` it must also stay at or below rank
    ``j - 1`` (the ordering of the first ``j`` ranks is then part of the event).
    """
    if not 0 <= j < k < len(view):
        raise ValueError(f"need 0 <= j < k < n, got j={j}, k={k}")
    values = np.asarray(values)
    a, b = view[j], view[k]
    mid = (values[a] + values[b]) / 2
    rest = [values[view[r]] for r in range(j + 1, len(view)) if r != k]
    lower = max(max(rest) - mid, 0) if rest else 0
    upper = math.inf
    if upper_trunc and j > 0:
        upper = values[view[j - 1]] - mid
    lower, upper = float(lower), float(upper)
    lw = uw = 1.0
    if family.measure == LATTICE:
        if upper_trunc:
            pool, prefix = None, list(view.order[: j + 1])
        else:
            pool, prefix = [view[r] for r in range(j, len(view))], [a]
        lw, uw = _boundary_weights(values, a, b, lower, upper, mid, prefix, pool)
    trunc = Truncation(lower, upper, lw, uw)
    return PairSetup(family, values, view, j, k, trunc, float(values[a] - mid))


def _boundary_weights(values, a, b, lower, upper, mid, prefix, pool):
    # tie-breaking probability of the selection event at each bound, relative
    # to a strictly interior configuration; quarter offsets never tie integers
    def prob_at(d):
        y = np.array(values, dtype=float)
        y[a], y[b] = mid + d, mid - d
        return order_probability(y, prefix, pool)

    interior = prob_at(lower + 0.25)
    if interior == 0:
        return 1.0, 1.0
    lw = prob_at(lower) / interior
    uw = prob_at(upper) / interior if math.isfinite(upper) else 1.0
    return lw, uw


def unadjusted_setup(family: Family, values, view: OrderedView, j: int, k: int) -> PairSetup:
    """Untruncated pairwise law of ranks ``j`` and ``k`` (the classical exact test)."""
    values = np.asarray(values)
    a, b = view[j], view[k]
    mid = (values[a] + values[b]) / 2
    return PairSetup(family, values, view, j, k, NO_TRUNCATION, float(values[a] - mid))


def selective_p(family: Family, x, view: OrderedView, j: int, k: int, delta: float = 0.0,
                upper_trunc: bool = False, u: float | None = None) -> float:
    """Selective one-sided p-value for ``theta[rank j] - theta[rank k] <= delta``."""
    obs = as_observation(x)
    setup = selective_setup(family, obs.values, view, j, k, upper_trunc)
    return setup.p_value(delta, u)


@dataclass
class TestOutcome:
    reject: bool
    p_value: float
    level_used: float
    adjusted: bool
    winner: str
    runner_up: str
    conditioning: dict = field(default_factory=dict)
    seed_trace: dict = field(default_factory=dict)

    __test__ = False


@dataclass
class BoundOutcome:
    delta_lower: float
    interpretation: Interpretation
    method: str
    level: float
    winner: str = ""
    runner_up: str = ""
    seed_trace: dict = field(default_factory=dict)


@dataclass
class RankStep:
    upper: str
    lower: str
    p_value: float
    rejected: bool


@dataclass
class RankReport:
    j_hat: int
    steps: list[RankStep]
    method: str
    order: tuple[int, ...]
    labels: tuple[str, ...]
    alpha: float
    seed_trace: dict = field(default_factory=dict)

    @property
    def verified(self) -> list[str]:
        return [self.labels[i] for i in self.order[: self.j_hat]]


def _trace(view: OrderedView, seed, u=None):
    trace = {"tie_mode": view.mode, "seed": seed,
             "randomized_ties": [list(g) for g in view.randomized_groups]}
    if u is not None:
        trace["uniform"] = u
    return trace


def procedure1(family: Family, x, alpha: float = 0.05, *, adjusted: bool = False,
               tie_mode: str = "random", seed: int | None = None,
               randomized: bool = False) -> TestOutcome:
    """Declare the winner best when the winner/runner-up pairwise test rejects.

    ``adjusted=True`` runs the test at level ``n / (n - 1) * alpha``, which
    still bounds the marginal error by ``alpha``.
    """
    _check_alpha(alpha)
    obs, view = _prepare(family, x, tie_mode, seed, depth=2)
    n = obs.n
    level = alpha * n / (n - 1) if adjusted else alpha
    setup = unadjusted_setup(family, obs.values, view, 0, 1)
    u = _uniform(seed, randomized)
    p = two_tailed_p(setup.law(), setup.d_obs, u)
    return TestOutcome(
        reject=p <= level,
        p_value=p,
        level_used=level,
        adjusted=adjusted,
        winner=obs.labels[view.winner],
        runner_up=obs.labels[view.runner_up],
        conditioning=setup.describe() | {"others": _others(obs, (view[0], view[1]))},
        seed_trace=_trace(view, seed, u),
    )


def _others(obs: Observation, pair):
    return {lab: float(v) for i, (lab, v) in enumerate(zip(obs.labels, obs.values)) if i not in pair}


def crossing_point(pfun, level: float) -> float:
    """``sup{delta : pfun(delta) <= level}`` for a nondecreasing ``pfun``.

    The bracket starts at ``[-1, 1]`` and doubles up to ``|delta| = 64``;
    beyond that the bound is reported as infinite.
    """
    lo, hi = -1.0, 1.0
    while pfun(lo) > level:
        if lo <= -DELTA_CAP:
            return -math.inf
        hi, lo = lo, max(2 * lo, -DELTA_CAP)
    while pfun(hi) <= level:
        if hi >= DELTA_CAP:
            return math.inf
        lo, hi = hi, min(2 * hi, DELTA_CAP)
    return optimize.brentq(lambda d: pfun(d) - level, lo, hi, xtol=DELTA_TOL / 4, rtol=1e-14)


def procedure2(family: Family, x, alpha: float = 0.05, *, tie_mode: str = "random",
               seed: int | None = None) -> BoundOutcome:
    """Lower bound from the unadjusted pairwise interval, ``-inf`` if negative.

    The bound solves ``P_delta(D >= d_obs) = alpha / 2`` for the untruncated
    winner/runner-up law.
    """
    _check_alpha(alpha)
    obs, view = _prepare(family, x, tie_mode, seed, depth=2)
    setup = unadjusted_setup(family, obs.values, view, 0, 1)
    delta = crossing_point(setup.p_value, alpha / 2)
    if not delta >= 0:
        delta = -math.inf
    return BoundOutcome(delta, interpret_delta(family, delta), "procedure2", alpha,
                        obs.labels[view.winner], obs.labels[view.runner_up], _trace(view, seed))


def procedure2prime(family: Family, x, alpha: float = 0.05, *, tie_mode: str = "random",
                    seed: int | None = None, randomized: bool = False) -> BoundOutcome:
    """Exact lower bound from inverting the selective winner/runner-up p-value.

    Returns the point where the tilted selective p-value crosses ``alpha``.
    The runner-up's p-value dominates every other pairwise selective p-value,
    so this bounds the winner's gap to the best of all the others.
    """
    _check_alpha(alpha)
    obs, view = _prepare(family, x, tie_mode, seed, depth=2)
    setup = selective_setup(family, obs.values, view, 0, 1)
    u = _uniform(seed, randomized)
    delta = crossing_point(lambda d: setup.p_value(d, u), alpha)
    return BoundOutcome(delta, interpret_delta(family, delta), "procedure2prime", alpha,
                        obs.labels[view.winner], obs.labels[view.runner_up], _trace(view, seed, u))


def _stepwise(family, x, alpha, tie_mode, seed, method, p_of_step):
    _check_alpha(alpha)
    obs, view = _prepare(family, x, tie_mode, seed, depth=None)
    steps = []
    for j in range(obs.n - 1):
        p = p_of_step(obs.values, view, j)
        rejected = p <= alpha
        steps.append(RankStep(obs.labels[view[j]], obs.labels[view[j + 1]], p, rejected))
        if not rejected:
            break
    j_hat = sum(step.rejected for step in steps)
    return RankReport(j_hat, steps, method, view.order, obs.labels, alpha, _trace(view, seed))


def procedure3(family: Family, x, alpha: float = 0.05, *, tie_mode: str = "random",
               seed: int | None = None) -> RankReport:
    """Compare adjacent ranks with unadjusted two-tailed tests until one fails."""

    def step(values, view, j):
        setup = unadjusted_setup(family, values, view, j, j + 1)
        return two_tailed_p(setup.law(), setup.d_obs)

    return _stepwise(family, x, alpha, tie_mode, seed, "procedure3", step)


def procedure3prime(family: Family, x, alpha: float = 0.05, *, tie_mode: str = "random",
                    seed: int | None = None) -> RankReport:
    """Stepwise selective tests conditioning on the realized order of the leaders.

    Step ``j`` truncates the law of rank ``j`` against rank ``j + 1`` to the
    event that rank ``j`` beats everything below and stays under rank ``j - 1``.
    """

    def step(values, view, j):
        return selective_setup(family, values, view, j, j + 1, upper_trunc=True).p_value()

    return _stepwise(family, x, alpha, tie_mode, seed, "procedure3prime", step)
