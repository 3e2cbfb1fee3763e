"""One-dimensional conditional laws of pairwise half-differences.

For a pair ``(j, k)`` write ``D = (x_j - x_k) / 2`` and ``M = (x_j + x_k) / 2``.
Given ``M`` and every other coordinate, ``D`` has density proportional to
``exp(delta * d) * g(..., M + d, ..., M - d, ...)`` where ``delta`` is the
imposed natural-parameter gap ``theta_j - theta_k``, optionally truncated to
a selection event.  All p-values and confidence bounds are tail
probabilities of these laws.

Lattice laws are indexed internally by ``x_j``; ``D`` may be half-integral.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize, stats
from scipy.special import logsumexp

from .core import CONTINUOUS, Family, NormalVariance


class DegenerateLawError(ValueError):
    """The truncated support is empty."""


@dataclass(frozen=True)
class Truncation:
    """Truncation ``lower <= D <= upper`` in half-difference units.

    ``lower_weight`` and ``upper_weight`` scale the lattice atoms sitting
    exactly on a bound; they carry the probability that random tie-breaking
    keeps a tied boundary configuration inside the selection event.
    """

    lower: float = -math.inf
    upper: float = math.inf
    lower_weight: float = 1.0
    upper_weight: float = 1.0

    def __post_init__(self):
        if self.lower > self.upper:
            raise DegenerateLawError(f"empty truncation [{self.lower}, {self.upper}]")

    @property
    def is_trivial(self) -> bool:
        return self.lower == -math.inf and self.upper == math.inf


NO_TRUNCATION = Truncation()


class LatticeLaw:
    """Discrete law of ``D`` on the half-integer lattice of a fixed pair sum."""

    def __init__(self, xj, log_weights, s, delta, trunc, pair=(None, None)):
        self.s = s
        self.delta = float(delta)
        self.trunc = trunc
        self.pair = pair
        self.xj = np.asarray(xj)
        self.d = self.xj - s / 2
        self.log_prob = log_weights - logsumexp(log_weights)
        self.prob = np.exp(self.log_prob)

    measure = "lattice"

    def __repr__(self):
        return (f"LatticeLaw(pair={self.pair}, s={self.s}, delta={self.delta:g}, "
                f"support=[{self.d[0]}, {self.d[-1]}])")

    def _index(self, d_obs):
        idx = np.searchsorted(self.d, d_obs)
        if idx >= self.d.size or self.d[idx] != d_obs:
            raise ValueError(f"d={d_obs} is not a support point of {self!r}")
        return idx

    def tail_parts(self, d_obs) -> tuple[float, float, float]:
        """Return ``(P(D < d), P(D = d), P(D > d))``."""
        idx = self._index(d_obs)
        return (math.fsum(self.prob[:idx]), float(self.prob[idx]),
                math.fsum(self.prob[idx + 1:]))

    def sf(self, d_obs, u: float | None = None) -> float:
        """``P(D > d) + w P(D = d)`` with ``w = 1`` (conservative) or ``w = u``."""
        below, at, above = self.tail_parts(d_obs)
        if u is None and below == 0:
            return 1.0
        w = 1.0 if u is None else u
        return min(1.0, above + w * at)

    def cdf(self, d_obs) -> float:
        below, at, _ = self.tail_parts(d_obs)
        return min(1.0, below + at)

    def quantile(self, q: float) -> float:
        """Smallest support point whose CDF is at least ``q``."""
        cum = np.cumsum(self.prob)
        idx = int(np.searchsorted(cum, q - 1e-12 * (q > 0)))
        return float(self.d[min(idx, self.d.size - 1)])

    def x_of(self, d) -> float:
        return d + self.s / 2

    def mean(self) -> float:
        return float(self.prob @ self.d)


class BetaLaw:
    """Continuous law of ``D`` for the normal-variance family.

    With ``S = r_j + r_k`` and ``u = r_j / S`` the density of ``u`` is
    proportional to ``exp(delta * S * u) * (u (1 - u))^(a - 1)``.  Without
    tilt this is ``Beta(a, a)`` and uses scipy's incomplete beta; with tilt the
    masses come from adaptive quadrature.
    """

    measure = "continuous"

    def __init__(self, total, a, delta, trunc, pair=(None, None), quadrature=False):
        self.total = float(total)
        self.quadrature = quadrature
        self.a = float(a)
        self.delta = float(delta)
        self.trunc = trunc
        self.pair = pair
        self.u_lo = self._to_u(trunc.lower)
        self.u_hi = self._to_u(trunc.upper)
        if not self.u_lo < self.u_hi:
            raise DegenerateLawError(f"empty continuous support for {trunc}")
        self._beta = stats.beta(self.a, self.a)
        self._norm = self._mass(self.u_lo, self.u_hi)
        if not self._norm > 0:
            raise DegenerateLawError("truncated law carries no mass")

    def __repr__(self):
        return f"BetaLaw(pair={self.pair}, S={self.total:g}, a={self.a:g}, delta={self.delta:g})"

    def _to_u(self, d):
        return float(np.clip(d / self.total + 0.5, 0.0, 1.0))

    def _to_d(self, u):
        return (u - 0.5) * self.total

    @property
    def tilt(self) -> float:
        return self.delta * self.total

    def _mass(self, u0, u1) -> float:
        # unnormalized on a common scale: shift exp(t u) by the truncation edge
        if u1 <= u0:
            return 0.0
        t = self.tilt
        if t == 0 and not self.quadrature:
            if u0 >= 0.5:
                return float(self._beta.sf(u0) - self._beta.sf(u1))
            return float(self._beta.cdf(u1) - self._beta.cdf(u0))
        return quad_tilted_beta(self.a, t, u0, u1, shift=self.u_hi if t > 0 else self.u_lo)

    def _check(self, d_obs):
        u = self._to_u(d_obs)
        lo, hi = self._to_u(self.trunc.lower), self._to_u(self.trunc.upper)
        if not (lo - 1e-12 <= u <= hi + 1e-12):
            raise ValueError(f"d={d_obs} lies outside the truncated support")
        return min(max(u, self.u_lo), self.u_hi)

    def tail_parts(self, d_obs) -> tuple[float, float, float]:
        u = self._check(d_obs)
        above = self._mass(u, self.u_hi) / self._norm
        return (max(0.0, 1.0 - above), 0.0, min(1.0, above))

    def sf(self, d_obs, u: float | None = None) -> float:
        return self.tail_parts(d_obs)[2]

    def cdf(self, d_obs) -> float:
        return self.tail_parts(d_obs)[0]

    def quantile(self, q: float) -> float:
        if q <= 0:
            return self._to_d(self.u_lo)
        if q >= 1:
            return self._to_d(self.u_hi)
        if self.tilt == 0 and not self.quadrature:
            lo_p = self._beta.cdf(self.u_lo)
            hi_p = self._beta.cdf(self.u_hi)
            return self._to_d(float(self._beta.ppf(lo_p + q * (hi_p - lo_p))))
        f = lambda u: self._mass(self.u_lo, u) / self._norm - q
        u = optimize.brentq(f, self.u_lo, self.u_hi, xtol=1e-12, rtol=1e-12)
        return self._to_d(u)


def quad_tilted_beta(a: float, t: float, u0: float, u1: float, shift: float = 0.0) -> float:
    """``int_{u0}^{u1} exp(t (u - shift)) (u (1 - u))^(a - 1) du`` by adaptive quadrature.

    Endpoint singularities at 0 and 1 are handled with algebraic weights.
    """
    alpha_w = a - 1 if u0 == 0.0 else 0.0
    beta_w = a - 1 if u1 == 1.0 else 0.0

    def f(u):
        val = t * (u - shift)
        if u0 > 0.0:
            val += (a - 1) * math.log(u)
        if u1 < 1.0:
            val += (a - 1) * math.log1p(-u)
        return math.exp(val)

    if alpha_w == 0.0 and beta_w == 0.0:
        value, _ = integrate.quad(f, u0, u1, epsabs=0.0, epsrel=1e-10, limit=200)
    else:
        value, _ = integrate.quad(f, u0, u1, weight="alg", wvar=(alpha_w, beta_w),
                                  epsabs=0.0, epsrel=1e-10, limit=200)
    return value


def _lattice_weights(family, x, j, k, delta, method):
    v = family.pair_candidates(x, j, k)
    s = int(x[j] + x[k])
    logw = None if method == "generic" else family.pair_log_weights(v.astype(float), s, delta)
    if logw is None:
        if method == "closed":
            raise ValueError(f"{family.kind} has no closed-form pair law")
        y = np.array(x, dtype=np.int64)
        logw = np.empty(v.size)
        for i, vi in enumerate(v):
            y[j], y[k] = vi, s - vi
            logw[i] = family.carrier_log(y)
        logw = logw + delta * (v - s / 2)
    keep = np.isfinite(logw)
    return v[keep], logw[keep], s


def build_law(family: Family, x, j: int, k: int, delta: float = 0.0,
              trunc: Truncation = NO_TRUNCATION, method: str = "auto"):
    """Conditional law of ``D_jk`` given ``M_jk`` and the other coordinates.

    ``method`` selects the closed-form pair kernel (``"closed"``), direct
    carrier evaluation at every support point (``"generic"``), or the closed
    form when one exists (``"auto"``).  Continuous families always use the
    Beta representation; ``method="quadrature"`` forces quadrature for it.
    """
    x = family.check_dimension(np.asarray(x))
    if j == k or not (0 <= j < family.n and 0 <= k < family.n):
        raise ValueError(f"invalid index pair ({j}, {k}) for n={family.n}")
    if family.measure == CONTINUOUS:
        if not isinstance(family, NormalVariance):
            raise TypeError(f"no continuous law for {family!r}")
        total = float(x[j] + x[k])
        return BetaLaw(total, family.beta_shape, delta, trunc, pair=(j, k),
                       quadrature=method == "quadrature")
    v, logw, s = _lattice_weights(family, x, j, k, delta, method)
    d = v - s / 2
    inside = (d >= trunc.lower) & (d <= trunc.upper)
    if not inside.any():
        raise DegenerateLawError(f"truncation {trunc} leaves no support for pair ({j}, {k})")
    v, d, logw = v[inside], d[inside], logw[inside].copy()
    if v.size > 1:
        with np.errstate(divide="ignore"):
            if d[0] == trunc.lower:
                logw[0] += math.log(trunc.lower_weight) if trunc.lower_weight > 0 else -math.inf
            if d[-1] == trunc.upper:
                logw[-1] += math.log(trunc.upper_weight) if trunc.upper_weight > 0 else -math.inf
        keep = np.isfinite(logw)
        v, logw = v[keep], logw[keep]
    return LatticeLaw(v, logw, s, delta, trunc, pair=(j, k))


def survival(law, d_obs, u: float | None = None) -> float:
    """Upper-tail p-value ``P(D >= d)``; randomized as ``P(D > d) + u P(D = d)``."""
    return law.sf(d_obs, u)


def two_tailed_p(law, d_obs, u: float | None = None) -> float:
    """Equal-tailed two-sided p-value, ``min(1, 2 min(upper, lower))``.

    Randomized with a single uniform ``u``: the upper tail keeps ``u`` of the
    observed atom and the lower tail ``1 - u``.
    """
    below, at, above = law.tail_parts(d_obs)
    if u is None:
        upper, lower = above + at, below + at
    else:
        upper, lower = above + u * at, below + (1 - u) * at
    return min(1.0, 2 * min(upper, lower))


def quantile(law, q: float) -> float:
    return law.quantile(q)


def randomized_rejection_probability(law, d_obs, level: float, two_tailed: bool = True) -> float:
    """Exact probability over ``u ~ U(0, 1)`` that the randomized p-value is ``<= level``."""
    below, at, above = law.tail_parts(d_obs)
    half = level / 2 if two_tailed else level
    if at == 0:
        hit = above <= half or (two_tailed and below <= half)
        return float(hit)
    up = min(1.0, max(0.0, (half - above) / at))
    if not two_tailed:
        return up
    down = min(1.0, max(0.0, (half - below) / at))
    return min(1.0, up + down)
