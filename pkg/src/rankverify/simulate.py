"""Monte Carlo experiments and an exhaustive-enumeration oracle.

Every trial draws its randomness from ``SeedSequence([master_seed, stream,
trial, tag])`` so results do not depend on how trials are scheduled across
worker processes; aggregation always happens in trial order.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial

import numpy as np
from scipy.special import logsumexp

from .baselines import SubsetRule, gn_winner_test, gupta_nagel_subset
from .condlaw import randomized_rejection_probability
from .core import (
    CONTINUOUS,
    BradleyTerry,
    Family,
    IndependentBinomial,
    Multinomial,
    tie_break_prefixes,
    view_from_prefix,
)
from .procedures import (
    crossing_point,
    procedure1,
    procedure2,
    procedure2prime,
    procedure3,
    procedure3prime,
    selective_setup,
    unadjusted_setup,
)

# purpose tags for per-trial seed derivation
DATA, TIES, UNIFORM = 0, 1, 2

MIN_EVENTS = 100
ORACLE_LIMIT = 10**7
DEFAULT_DELTAS = tuple(np.round(np.arange(0, 3.0001, 0.25), 10))


def trial_rng(master_seed: int, stream: int, trial: int, tag: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([master_seed, stream, trial, tag]))


def trial_seed(master_seed: int, stream: int, trial: int, tag: int) -> int:
    """Integer seed for APIs that take one (tie-breaking, randomized p-values)."""
    ss = np.random.SeedSequence([master_seed, stream, trial, tag])
    return int(ss.generate_state(1, np.uint32)[0])


def _run_chunk(fn, trials):
    return [fn(t) for t in trials]


def run_trials(fn, trials: int, jobs: int = 1) -> list:
    """Evaluate ``fn(trial)`` for every trial index, results in trial order.

    ``fn`` must be picklable when ``jobs > 1``.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    if jobs <= 1:
        return [fn(t) for t in range(trials)]
    size = max(1, math.ceil(trials / (4 * jobs)))
    chunks = [range(a, min(a + size, trials)) for a in range(0, trials, size)]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        parts = pool.map(partial(_run_chunk, fn), chunks)
        return [r for part in parts for r in part]


@dataclass
class SimResult:
    estimate: float
    std_error: float
    trials: int
    events: int
    low_precision: bool = False
    breakdown: dict = field(default_factory=dict)


def _proportion(hits, events, trials, breakdown=None, need_events=False) -> SimResult:
    if events == 0:
        return SimResult(math.nan, math.nan, trials, 0, True, breakdown or {})
    p = hits / events
    se = math.sqrt(p * (1 - p) / events)
    low = need_events and events < MIN_EVENTS
    return SimResult(p, se, trials, events, low, breakdown or {})


@dataclass(frozen=True)
class SimConfig:
    family: Family
    theta: tuple
    procedure: str = "procedure1"
    alpha: float = 0.05
    trials: int = 1000
    master_seed: int = 0
    jobs: int = 1
    adjusted: bool = False
    randomized: bool = False

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        object.__setattr__(self, "theta", tuple(float(t) for t in self.theta))
        if len(self.theta) != self.family.n:
            raise ValueError(f"theta has length {len(self.theta)}, family has n={self.family.n}")


def winner_gap(theta, winner: int) -> float:
    """``theta[winner] - max of the others``; positive iff the winner is the unique best."""
    theta = np.asarray(theta, dtype=float)
    return float(theta[winner] - np.delete(theta, winner).max())


def verified_prefix_length(theta, order) -> int:
    """Largest ``j`` such that each of the first ``j`` ranks beats every later rank in theta."""
    theta = np.asarray(theta, dtype=float)
    j = 0
    for r in range(len(order) - 1):
        if theta[order[r]] > max(theta[i] for i in order[r + 1:]):
            j += 1
        else:
            break
    return j


# ---- per-trial workers (module level so they pickle) ----

def _data(cfg: SimConfig, stream, trial):
    return cfg.family.sample(np.array(cfg.theta), trial_rng(cfg.master_seed, stream, trial, DATA))


def _winner_trial(cfg: SimConfig, trial):
    x = _data(cfg, 0, trial)
    seed = trial_seed(cfg.master_seed, 0, trial, TIES)
    out = procedure1(cfg.family, x, cfg.alpha, adjusted=cfg.adjusted, seed=seed,
                     randomized=cfg.randomized)
    winner = int(out.winner) - 1
    null_true = winner_gap(cfg.theta, winner) <= 0
    return out.reject, null_true


def _rank_trial(cfg: SimConfig, trial):
    x = _data(cfg, 0, trial)
    seed = trial_seed(cfg.master_seed, 0, trial, TIES)
    proc = {"procedure3": procedure3, "procedure3prime": procedure3prime}[cfg.procedure]
    report = proc(cfg.family, x, cfg.alpha, seed=seed)
    return report.j_hat, verified_prefix_length(cfg.theta, report.order)


def _bound_trial(cfg: SimConfig, trial):
    x = _data(cfg, 0, trial)
    seed = trial_seed(cfg.master_seed, 0, trial, TIES)
    if cfg.procedure == "procedure2":
        out = procedure2(cfg.family, x, cfg.alpha, seed=seed)
    else:
        out = procedure2prime(cfg.family, x, cfg.alpha, seed=seed, randomized=cfg.randomized)
    winner = int(out.winner) - 1
    return out.delta_lower <= winner_gap(cfg.theta, winner)


def _subset_trial(cfg: SimConfig, rule: SubsetRule, trial):
    x = _data(cfg, 0, trial)
    best = int(np.argmax(cfg.theta))
    return str(best + 1) in gupta_nagel_subset(x, rule)


def _power_trial(m, n, delta, alpha, master_seed, stream, rule, trial):
    family = Multinomial(n, m)
    theta = np.zeros(n)
    theta[0] = delta
    x = family.sample(theta, trial_rng(master_seed, stream, trial, DATA))
    seed = trial_seed(master_seed, stream, trial, TIES)
    sel = procedure1(family, x, alpha, adjusted=True, seed=seed)
    gn = gn_winner_test(x, rule)
    return (sel.reject and sel.winner == "1", gn.reject and gn.winner == "1")


# ---- experiments ----

def error_rate_sim(cfg: SimConfig, kind: str = "conditional") -> SimResult:
    """Monte Carlo error rate of a procedure.

    ``kind``:

    * ``"conditional"``: P(procedure 1 declares the winner best | the winner
      is not the unique best).  Fewer than 100 conditioning events flag the
      result as low precision.
    * ``"marginal"``: P(procedure 1 declares a winner that is not the unique best).
    * ``"fwer"``: P(procedure 3 / 3' verifies more leading ranks than are
      correctly ordered).
    """
    if kind in ("conditional", "marginal"):
        rows = run_trials(partial(_winner_trial, cfg), cfg.trials, cfg.jobs)
        wrong = sum(1 for rej, null in rows if rej and null)
        nulls = sum(1 for _, null in rows if null)
        info = {"rejections": sum(1 for rej, _ in rows if rej), "null_events": nulls}
        if kind == "conditional":
            return _proportion(wrong, nulls, cfg.trials, info, need_events=True)
        return _proportion(wrong, cfg.trials, cfg.trials, info)
    if kind == "fwer":
        rows = run_trials(partial(_rank_trial, cfg), cfg.trials, cfg.jobs)
        errors = sum(1 for j_hat, j0 in rows if j_hat > j0)
        hist = np.bincount([j for j, _ in rows], minlength=cfg.family.n).tolist()
        return _proportion(errors, cfg.trials, cfg.trials, {"j_hat_counts": hist})
    raise ValueError(f"unknown error-rate kind {kind!r}")


def coverage_sim(cfg: SimConfig) -> SimResult:
    """Coverage of ``delta_lower <= theta_winner - max of the others`` (procedure 2 or 2')."""
    if cfg.procedure not in ("procedure2", "procedure2prime"):
        raise ValueError(f"coverage needs procedure2 or procedure2prime, got {cfg.procedure}")
    rows = run_trials(partial(_bound_trial, cfg), cfg.trials, cfg.jobs)
    return _proportion(sum(rows), cfg.trials, cfg.trials)


def subset_coverage_sim(cfg: SimConfig) -> SimResult:
    """P(best population lies in the Gupta-Nagel subset); ties go to the lowest index."""
    if not isinstance(cfg.family, Multinomial):
        raise TypeError("subset selection is defined for multinomial counts")
    rule = SubsetRule.for_design(cfg.family.m, cfg.family.n, cfg.alpha)
    rows = run_trials(partial(_subset_trial, cfg, rule), cfg.trials, cfg.jobs)
    return _proportion(sum(rows), cfg.trials, cfg.trials, {"d": rule.d})


@dataclass
class PowerRow:
    delta: float
    power_selective: float
    power_gn: float
    se_selective: float
    se_gn: float


def power_curve(m: int, n: int, deltas=DEFAULT_DELTAS, alpha: float = 0.05, trials: int = 10_000,
                master_seed: int = 0, jobs: int = 1) -> list[PowerRow]:
    """Power of correctly declaring population 1 best under ``pi ~ (e^delta, 1, ..., 1)``.

    The selective test is procedure 1 at level ``n / (n - 1) * alpha``; the
    baseline is the Gupta-Nagel singleton rule at level ``alpha``.
    """
    deltas = list(deltas)
    if not deltas:
        raise ValueError("delta grid is empty")
    rule = SubsetRule.for_design(m, n, alpha)
    out = []
    for stream, delta in enumerate(deltas):
        fn = partial(_power_trial, m, n, float(delta), alpha, master_seed, stream, rule)
        rows = run_trials(fn, trials, jobs)
        sel = sum(r[0] for r in rows) / trials
        gn = sum(r[1] for r in rows) / trials
        out.append(PowerRow(float(delta), sel, gn,
                            math.sqrt(sel * (1 - sel) / trials), math.sqrt(gn * (1 - gn) / trials)))
    return out


# ---- exhaustive oracle ----

def _compositions(m: int, n: int) -> np.ndarray:
    # stars and bars: choose n - 1 bar positions among m + n - 1 slots
    rows = []
    for bars in itertools.combinations(range(m + n - 1), n - 1):
        edges = (-1,) + bars + (m + n - 1,)
        rows.append([edges[i + 1] - edges[i] - 1 for i in range(n)])
    return np.array(rows, dtype=np.int64)


def support_size(family: Family) -> int:
    if family.measure == CONTINUOUS:
        raise ValueError(f"{family.kind} is continuous and cannot be enumerated")
    if isinstance(family, Multinomial):
        return math.comb(family.m + family.n - 1, family.n - 1)
    if isinstance(family, IndependentBinomial):
        return (family.m + 1) ** family.n
    if isinstance(family, BradleyTerry):
        return len(family.support())
    raise TypeError(f"no enumeration for {family!r}")


def enumerate_support(family: Family, limit: int = ORACLE_LIMIT) -> np.ndarray:
    size = support_size(family)
    if size > limit:
        raise ValueError(f"support has {size} outcomes, above the enumeration limit of {limit}")
    if isinstance(family, Multinomial):
        return _compositions(family.m, family.n)
    if isinstance(family, IndependentBinomial):
        grid = itertools.product(range(family.m + 1), repeat=family.n)
        return np.array(list(grid), dtype=np.int64)
    return family.support()


class ExactModel:
    """Every outcome of a small lattice family with its exact probability under ``theta``."""

    def __init__(self, family: Family, theta, limit: int = ORACLE_LIMIT):
        self.family = family
        self.theta = np.asarray(theta, dtype=float)
        family.check_dimension(self.theta)
        self.outcomes = enumerate_support(family, limit)
        logw = np.array([family.carrier_log(x) for x in self.outcomes]) + self.outcomes @ self.theta
        self.log_prob = logw - logsumexp(logw)
        self.prob = np.exp(self.log_prob)

    def __len__(self):
        return len(self.outcomes)

    def conditional_pair_law(self, x, j: int, k: int):
        """Exact law of ``x_j`` given ``x_j + x_k`` and the other coordinates, by enumeration."""
        x = np.asarray(x)
        others = [i for i in range(self.family.n) if i not in (j, k)]
        s = x[j] + x[k]
        mask = (self.outcomes[:, j] + self.outcomes[:, k] == s)
        if others:
            mask &= np.all(self.outcomes[:, others] == x[others], axis=1)
        v = self.outcomes[mask, j]
        p = self.prob[mask]
        order = np.argsort(v)
        return v[order], p[order] / p.sum()

    def _prefixes(self, depth):
        for x, px in zip(self.outcomes, self.prob):
            for prefix, q in tie_break_prefixes(x, depth):
                yield x, px * q, view_from_prefix(x, prefix)

    def winner_test_rates(self, alpha: float = 0.05, adjusted: bool = False) -> dict:
        """Exact rates of randomized procedure 1, integrating over ties and the uniform.

        ``conditional`` is P(declare | winner is not the unique best),
        ``marginal`` is P(declare and winner is not the unique best).
        """
        n = self.family.n
        level = alpha * n / (n - 1) if adjusted else alpha
        terms_null, terms_wrong, terms_best = [], [], []
        for x, w, view in self._prefixes(2):
            winner = view.winner
            gap = winner_gap(self.theta, winner)
            if gap > 0:
                terms_best.append(w)
                continue
            setup = unadjusted_setup(self.family, x, view, 0, 1)
            reject = randomized_rejection_probability(setup.law(), setup.d_obs, level)
            terms_null.append(w)
            terms_wrong.append(w * reject)
        null_mass, wrong, best_wins = map(math.fsum, (terms_null, terms_wrong, terms_best))
        return {
            "conditional": wrong / null_mass if null_mass > 0 else math.nan,
            "marginal": wrong,
            "null_probability": null_mass,
            "p_best_wins": best_wins,
        }

    def best_wins_probability(self) -> float:
        """P(the winner's theta equals the maximum), ties broken uniformly."""
        top = self.theta.max()
        terms = [w for x, w, view in self._prefixes(1) if self.theta[view.winner] == top]
        return math.fsum(terms)

    def bound_noncoverage(self, alpha: float = 0.05, method: str = "procedure2prime",
                          randomized: bool = True) -> float:
        """Exact P(lower bound > theta_winner - max of the others).

        For randomized procedure 2' the bound exceeds ``g`` exactly when the
        randomized selective p-value at tilt ``g`` is at most ``alpha``, which
        is integrated over the uniform in closed form.
        """
        terms = []
        for x, w, view in self._prefixes(2):
            g = winner_gap(self.theta, view.winner)
            if method == "procedure2prime" and randomized:
                setup = selective_setup(self.family, x, view, 0, 1)
                miss = randomized_rejection_probability(setup.law(g), setup.d_obs, alpha,
                                                        two_tailed=False)
            elif method == "procedure2prime":
                miss = float(_bound_from_view(self.family, x, view, alpha, True) > g)
            else:
                miss = float(_bound_from_view(self.family, x, view, alpha, False) > g)
            terms.append(w * miss)
        return math.fsum(terms)

    def p_ordering_violations(self, deltas=(0.0,), u: float | None = None, tol: float = 1e-12):
        """Outcomes where a selective winner-vs-``j`` p-value exceeds the runner-up's."""
        bad = []
        for x, w, view in self._prefixes(2):
            if w == 0:
                continue
            for delta in deltas:
                p12 = selective_setup(self.family, x, view, 0, 1).p_value(delta, u)
                for k in range(2, self.family.n):
                    p1k = selective_setup(self.family, x, view, 0, k).p_value(delta, u)
                    if p1k > p12 + tol:
                        bad.append((tuple(x.tolist()), view.order, delta, k, p12, p1k))
        return bad

    def selective_p_ks(self, grid_size: int = 1001) -> float:
        """KS distance between the exact law of the randomized selective p and U(0, 1).

        The p-value of the winner against the runner-up at tilt 0 is
        ``P(D > d) + u P(D = d)``, uniform on ``[above, above + at]`` given the outcome.
        """
        grid = np.linspace(0, 1, grid_size)
        cdf = np.zeros_like(grid)
        for x, w, view in self._prefixes(2):
            setup = selective_setup(self.family, x, view, 0, 1)
            _, at, above = setup.law().tail_parts(setup.d_obs)
            if at > 0:
                cdf += w * np.clip((grid - above) / at, 0, 1)
            else:
                cdf += w * (grid >= above)
        return float(np.max(np.abs(cdf - grid)))


def _bound_from_view(family, x, view, alpha, selective):
    if selective:
        setup = selective_setup(family, x, view, 0, 1)
        return crossing_point(setup.p_value, alpha)
    setup = unadjusted_setup(family, x, view, 0, 1)
    delta = crossing_point(setup.p_value, alpha / 2)
    return delta if delta >= 0 else -math.inf


def exhaustive_oracle(family: Family, theta, limit: int = ORACLE_LIMIT) -> ExactModel:
    return ExactModel(family, theta, limit)


__all__ = [
    "DEFAULT_DELTAS", "ExactModel", "PowerRow", "SimConfig", "SimResult",
    "coverage_sim", "enumerate_support", "error_rate_sim", "exhaustive_oracle", "power_curve",
    "run_trials", "subset_coverage_sim", "support_size", "trial_rng", "trial_seed",
    "verified_prefix_length", "winner_gap",
]
