"""Exponential-family instances, observations and tie-broken orderings.

Every family here has density ``exp(theta @ x - psi(theta)) * g(x)`` with a
permutation-symmetric, Schur-concave carrier ``g``.  Only ``log g`` is ever
evaluated: the log-partition cancels in every conditional ratio used for
inference, and simulation draws data by direct construction.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import ClassVar, Sequence

import numpy as np
from scipy.special import expit, gammaln, softmax

LATTICE = "lattice"
CONTINUOUS = "continuous"

BRADLEY_TERRY_MAX_PLAYERS = 6


class SeedRequired(ValueError):
    """Randomness was requested without an explicit seed."""


class Family:
    """Base class for the shipped exponential families.

    Subclasses are frozen dataclasses carrying their fixed dimensions.
    """

    kind: ClassVar[str]
    measure: ClassVar[str] = LATTICE
    n: int

    def _check_n(self) -> None:
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"need at least two populations, got n={self.n}")

    def check_dimension(self, x) -> np.ndarray:
        x = np.asarray(x)
        if x.ndim != 1 or x.shape[0] != self.n:
            raise ValueError(
                f"{self.kind} expects a vector of length {self.n}, got shape {x.shape}")
        return x

    def carrier_log(self, x) -> float:
        """Return ``log g(x)``; ``-inf`` off the support."""
        raise NotImplementedError

    def in_support(self, x) -> bool:
        return self.carrier_log(x) > -math.inf

    def log_partition(self, theta):
        # never needed: inference uses carrier ratios only, simulation samples directly
        raise NotImplementedError(
            "the log-partition cancels in every conditional law and is not evaluated")

    def pair_candidates(self, x: np.ndarray, j: int, k: int) -> np.ndarray:
        """Lattice values ``v`` of ``x[j]`` compatible with fixed ``x[j] + x[k]``."""
        s = int(x[j] + x[k])
        return np.arange(0, s + 1)

    def pair_log_weights(self, v: np.ndarray, s, delta: float):
        """Closed-form unnormalized log weights of ``x[j] = v`` given the pair sum.

        Returns ``None`` when the family has no closed form and the generic
        carrier-driven path must be used.
        """
        return None

    def sample(self, theta, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError


@dataclass(frozen=True)
class Multinomial(Family):
    """Multinomial(m, softmax(theta)) counts over ``n`` categories."""

    n: int
    m: int
    kind: ClassVar[str] = "multinomial"

    def __post_init__(self):
        self._check_n()
        if self.m < 1:
            raise ValueError(f"total count must be positive, got m={self.m}")

    def carrier_log(self, x) -> float:
        x = self.check_dimension(x)
        if np.any(x < 0) or np.any(x != np.round(x)) or x.sum() != self.m:
            return -math.inf
        return math.lgamma(self.m + 1) - math.fsum(math.lgamma(v + 1) for v in x.tolist())

    def pair_log_weights(self, v, s, delta):
        # Binomial(s, expit(delta)) kernel
        return delta * v - gammaln(v + 1) - gammaln(s - v + 1)

    def sample(self, theta, rng):
        return rng.multinomial(self.m, softmax(np.asarray(theta, dtype=float)))


@dataclass(frozen=True)
class IndependentBinomial(Family):
    """Independent Binomial(m, expit(theta_j)) outcomes, one per arm."""

    n: int
    m: int
    kind: ClassVar[str] = "binomial"

    def __post_init__(self):
        self._check_n()
        if self.m < 1:
            raise ValueError(f"trials per arm must be positive, got m={self.m}")

    def carrier_log(self, x) -> float:
        x = self.check_dimension(x)
        if np.any(x < 0) or np.any(x > self.m) or np.any(x != np.round(x)):
            return -math.inf
        m = self.m
        return math.fsum(
            math.lgamma(m + 1) - math.lgamma(v + 1) - math.lgamma(m - v + 1) for v in x.tolist())

    def pair_candidates(self, x, j, k):
        s = int(x[j] + x[k])
        return np.arange(max(0, s - self.m), min(self.m, s) + 1)

    def pair_log_weights(self, v, s, delta):
        # Fisher noncentral hypergeometric kernel with odds exp(delta)
        m = self.m
        return (delta * v - gammaln(v + 1) - gammaln(m - v + 1)
                - gammaln(s - v + 1) - gammaln(m - s + v + 1))

    def sample(self, theta, rng):
        return rng.binomial(self.m, expit(np.asarray(theta, dtype=float)))


@dataclass(frozen=True)
class NormalVariance(Family):
    """Sample variances of ``n`` normal groups with ``m`` observations each.

    The natural parameter of group ``j`` is ``-(m - 1) / (2 sigma_j^2)`` and the
    carrier is ``prod r_j^((m - 3) / 2)`` on the positive orthant.  ``m >= 3``
    is required: for ``m = 2`` the carrier is log-convex and not Schur-concave.
    """

    n: int
    m: int
    kind: ClassVar[str] = "normal-variance"
    measure: ClassVar[str] = CONTINUOUS

    def __post_init__(self):
        self._check_n()
        if self.m < 3:
            raise ValueError(
                f"need at least 3 observations per group for a Schur-concave carrier, got m={self.m}")

    @property
    def beta_shape(self) -> float:
        """Shape ``a`` of the null ``Beta(a, a)`` law of ``r_j / (r_j + r_k)``."""
        return (self.m - 1) / 2

    def carrier_log(self, x) -> float:
        x = self.check_dimension(np.asarray(x, dtype=float))
        if np.any(x <= 0):
            return -math.inf
        return (self.m - 3) / 2 * math.fsum(math.log(v) for v in x.tolist())

    def pair_candidates(self, x, j, k):
        raise TypeError("continuous family has no lattice support")

    def sample(self, theta, rng):
        theta = np.asarray(theta, dtype=float)
        if np.any(theta >= 0):
            raise ValueError("normal-variance natural parameters must be negative")
        var = -(self.m - 1) / (2 * theta)
        return var * rng.chisquare(self.m - 1, size=self.n) / (self.m - 1)

    def variance_to_theta(self, variances) -> np.ndarray:
        return -(self.m - 1) / (2 * np.asarray(variances, dtype=float))


@lru_cache(maxsize=None)
def _tournament_counts(n: int) -> dict[tuple[int, ...], int]:
    pairs = list(itertools.combinations(range(n), 2))
    outcomes = np.arange(2 ** len(pairs), dtype=np.int64)
    bits = (outcomes[:, None] >> np.arange(len(pairs))) & 1
    wins = np.zeros((outcomes.size, n), dtype=np.int64)
    for col, (a, b) in enumerate(pairs):
        wins[:, a] += bits[:, col]
        wins[:, b] += 1 - bits[:, col]
    vectors, counts = np.unique(wins, axis=0, return_counts=True)
    return {tuple(int(v) for v in row): int(c) for row, c in zip(vectors, counts)}


@dataclass(frozen=True)
class BradleyTerry(Family):
    """Win counts of a round-robin Bradley-Terry tournament.

    Player ``j`` beats player ``k`` with probability ``expit(theta_j - theta_k)``,
    so the win vector has density ``exp(theta @ x) g(x)`` where ``g(x)`` counts
    the tournaments producing ``x``.  Counts come from exhaustive enumeration,
    which caps ``n`` at 6 (32768 tournaments).
    """

    n: int
    kind: ClassVar[str] = "bradley-terry"

    def __post_init__(self):
        self._check_n()
        if self.n > BRADLEY_TERRY_MAX_PLAYERS:
            raise ValueError(
                f"Bradley-Terry carrier is enumerated exhaustively; n={self.n} exceeds "
                f"the cap of {BRADLEY_TERRY_MAX_PLAYERS} players")

    @property
    def games(self) -> int:
        return self.n * (self.n - 1) // 2

    def carrier_log(self, x) -> float:
        x = self.check_dimension(x)
        if np.any(x != np.round(x)):
            return -math.inf
        count = _tournament_counts(self.n).get(tuple(int(v) for v in x), 0)
        return math.log(count) if count else -math.inf

    def support(self) -> np.ndarray:
        return np.array(sorted(_tournament_counts(self.n)), dtype=np.int64)

    def sample(self, theta, rng):
        theta = np.asarray(theta, dtype=float)
        wins = np.zeros(self.n, dtype=np.int64)
        for a, b in itertools.combinations(range(self.n), 2):
            if rng.random() < expit(theta[a] - theta[b]):
                wins[a] += 1
            else:
                wins[b] += 1
        return wins


FAMILIES = {
    cls.kind: cls for cls in (Multinomial, IndependentBinomial, NormalVariance, BradleyTerry)
}


@dataclass(frozen=True)
class Observation:
    """One observed response per population, with labels."""

    labels: tuple[str, ...]
    values: np.ndarray = field(compare=False)

    def __post_init__(self):
        values = np.asarray(self.values)
        if values.ndim != 1 or len(self.labels) != values.size:
            raise ValueError("labels and values must be equal-length sequences")
        if len(set(self.labels)) != len(self.labels):
            raise ValueError("labels must be unique")
        object.__setattr__(self, "labels", tuple(str(l) for l in self.labels))
        object.__setattr__(self, "values", values)

    @classmethod
    def from_values(cls, values, labels: Sequence[str] | None = None) -> "Observation":
        values = np.asarray(values)
        if labels is None:
            labels = [str(i + 1) for i in range(values.size)]
        return cls(tuple(labels), values)

    @classmethod
    def from_mapping(cls, mapping) -> "Observation":
        return cls(tuple(mapping), np.asarray(list(mapping.values())))

    @property
    def n(self) -> int:
        return self.values.size

    def validate(self, family: Family) -> None:
        """Raise ``ValueError`` unless the values lie in the family's support."""
        family.check_dimension(self.values)
        if not family.in_support(self.values):
            raise ValueError(f"observation {self.values.tolist()} is outside the {family.kind} support")


def as_observation(x) -> Observation:
    return x if isinstance(x, Observation) else Observation.from_values(x)


@dataclass(frozen=True)
class OrderedView:
    """Full ordering of an observation, largest value first.

    ``tie_groups`` lists every group of tied indices (in rank order) and
    ``randomized_groups`` the ones whose internal order came from the seeded
    permutation rather than the lowest-index rule.
    """

    order: tuple[int, ...]
    tie_groups: tuple[tuple[int, ...], ...]
    randomized_groups: tuple[tuple[int, ...], ...]
    mode: str
    seed: int | None

    def __getitem__(self, rank: int) -> int:
        return self.order[rank]

    def __len__(self):
        return len(self.order)

    @property
    def winner(self) -> int:
        return self.order[0]

    @property
    def runner_up(self) -> int:
        return self.order[1]


def order_observation(values, tie_mode: str = "random", seed: int | None = None,
                      depth: int | None = None) -> OrderedView:
    """Order populations by descending value, breaking ties.

    With ``tie_mode="random"`` ties are broken by a uniformly random
    permutation drawn from ``seed``; the validity guarantees of the procedures
    assume this mode.  ``"lowest-index"`` is deterministic and meant for demos.
    Only tie groups overlapping the first ``depth`` ranks need randomizing; a
    missing seed is an error only when such a group exists.
    """
    values = np.asarray(values)
    n = values.size
    depth = n if depth is None else depth
    if tie_mode not in ("random", "lowest-index"):
        raise ValueError(f"unknown tie mode {tie_mode!r}")
    base = sorted(range(n), key=lambda i: (-values[i], i))
    groups = []
    start = 0
    for rank in range(1, n + 1):
        if rank == n or values[base[rank]] != values[base[start]]:
            if rank - start > 1:
                groups.append((start, rank))
            start = rank
    order = list(base)
    randomized = []
    if tie_mode == "random":
        relevant = [(a, b) for a, b in groups if a < depth]
        if relevant and seed is None:
            raise SeedRequired("random tie-breaking needs an explicit seed")
        if relevant:
            rng = np.random.default_rng(seed)
            for a, b in relevant:
                order[a:b] = [order[a + i] for i in rng.permutation(b - a)]
                randomized.append(tuple(order[a:b]))
    return OrderedView(
        order=tuple(int(i) for i in order),
        tie_groups=tuple(tuple(order[a:b]) for a, b in groups),
        randomized_groups=tuple(randomized),
        mode=tie_mode,
        seed=seed,
    )


def order_probability(values, prefix: Sequence[int], pool: Sequence[int] | None = None) -> float:
    """Probability that uniform tie-breaking ranks ``prefix`` first, in order.

    The ranking is taken within ``pool`` (default: all indices).
    """
    remaining = list(range(len(values))) if pool is None else list(pool)
    prob = 1.0
    for i in prefix:
        top = max(values[r] for r in remaining)
        if values[i] != top:
            return 0.0
        prob /= sum(1 for r in remaining if values[r] == top)
        remaining.remove(i)
    return prob


def tie_break_prefixes(values, depth: int):
    """Yield ``(prefix, probability)`` for every possible tie-broken top-``depth`` prefix."""
    values = np.asarray(values)
    n = values.size

    def extend(prefix, prob, remaining):
        if len(prefix) == depth or not remaining:
            yield tuple(prefix), prob
            return
        top = max(values[r] for r in remaining)
        tied = [r for r in remaining if values[r] == top]
        for r in tied:
            rest = [q for q in remaining if q != r]
            yield from extend(prefix + [r], prob / len(tied), rest)

    yield from extend([], 1.0, list(range(n)))


def view_from_prefix(values, prefix: Sequence[int]) -> OrderedView:
    """Complete a tie-broken prefix to a full ``OrderedView`` (lowest index after it)."""
    values = np.asarray(values)
    rest = sorted((i for i in range(values.size) if i not in prefix), key=lambda i: (-values[i], i))
    order = tuple(int(i) for i in prefix) + tuple(rest)
    return OrderedView(order=order, tie_groups=(), randomized_groups=(), mode="given", seed=None)


@dataclass(frozen=True)
class Interpretation:
    label: str
    value: float


def interpret_delta(family: Family, delta: float) -> Interpretation:
    """Map a natural-parameter gap to the family's user-facing scale."""
    if isinstance(family, Multinomial):
        return Interpretation("probability ratio", float(np.exp(delta)))
    if isinstance(family, IndependentBinomial):
        return Interpretation("odds ratio", float(np.exp(delta)))
    if isinstance(family, BradleyTerry):
        return Interpretation("head-to-head odds", float(np.exp(delta)))
    if isinstance(family, NormalVariance):
        # theta_j - theta_k = (m - 1) / 2 * (1/var_k - 1/var_j)
        return Interpretation("precision gap 1/var_k - 1/var_j", 2 * delta / (family.m - 1))
    raise TypeError(f"unknown family {family!r}")


def make_family(kind: str, n: int, m: int | None = None) -> Family:
    try:
        cls = FAMILIES[kind]
    except KeyError:
        raise ValueError(f"unknown family {kind!r}; choose from {sorted(FAMILIES)}") from None
    if cls is BradleyTerry:
        return cls(n)
    if m is None:
        raise ValueError(f"{kind} needs its per-population size m")
    return cls(n, m)
