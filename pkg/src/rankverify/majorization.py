"""Majorization order and an empirical Schur-concavity check for carriers."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .core import BradleyTerry, Family, IndependentBinomial, Multinomial, NormalVariance

REAL_TOL = 1e-12


class Direction(enum.Enum):
    A_MAJORIZES_B = "a>=b"
    B_MAJORIZES_A = "b>=a"
    EQUAL = "equal-up-to-permutation"
    INCOMPARABLE = "incomparable"


@dataclass(frozen=True)
class MajorizationVerdict:
    comparable: bool
    direction: Direction


def _is_integral(v: np.ndarray) -> bool:
    return v.dtype.kind in "iub"


def _prefix_compare(a, b):
    sa = np.cumsum(np.sort(a)[::-1])
    sb = np.cumsum(np.sort(b)[::-1])
    if _is_integral(a) and _is_integral(b):
        diff = sa - sb
        tol = 0
    else:
        diff = sa.astype(float) - sb.astype(float)
        tol = REAL_TOL * max(1.0, float(np.max(np.abs(sa))), float(np.max(np.abs(sb))))
    return diff, tol


def majorizes(a, b) -> MajorizationVerdict:
    """Compare ``a`` and ``b`` in the majorization order.

    ``a`` majorizes ``b`` when their totals agree and every descending prefix
    sum of ``a`` is at least the matching prefix sum of ``b``.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError(f"vectors must be 1-D of equal length, got {a.shape} and {b.shape}")
    diff, tol = _prefix_compare(a, b)
    if abs(diff[-1]) > tol:
        return MajorizationVerdict(False, Direction.INCOMPARABLE)
    head = diff[:-1]
    a_ge = bool(np.all(head >= -tol))
    b_ge = bool(np.all(head <= tol))
    if a_ge and b_ge:
        return MajorizationVerdict(True, Direction.EQUAL)
    if a_ge:
        return MajorizationVerdict(True, Direction.A_MAJORIZES_B)
    if b_ge:
        return MajorizationVerdict(True, Direction.B_MAJORIZES_A)
    return MajorizationVerdict(False, Direction.INCOMPARABLE)


def weakly_majorizes(a, b) -> bool:
    """True when ``a`` majorizes ``b`` (including equality up to permutation)."""
    return majorizes(a, b).direction in (Direction.A_MAJORIZES_B, Direction.EQUAL)


def transfer(x, i: int, j: int, t: float) -> np.ndarray:
    """Add ``t >= 0`` to the larger coordinate ``x[i]``.

    By the principle of transfer the result majorizes ``x`` with ``t`` added
    to ``x[j]`` instead.
    """
    x = np.asarray(x)
    if not x[i] > x[j]:
        raise ValueError(f"transfer needs x[{i}] > x[{j}], got {x[i]} and {x[j]}")
    if t < 0:
        raise ValueError("transfer amount must be nonnegative")
    out = x + 0 * t
    out[i] = out[i] + t
    return out


@dataclass(frozen=True)
class Violation:
    more_spread: tuple
    less_spread: tuple
    log_g_more: float
    log_g_less: float


def _probe_points(family: Family, rng: np.random.Generator, size: int):
    n = family.n
    if isinstance(family, Multinomial):
        return rng.multinomial(family.m, rng.dirichlet(np.ones(n)), size=size), 1
    if isinstance(family, IndependentBinomial):
        return rng.integers(0, family.m + 1, size=(size, n)), 1
    if isinstance(family, BradleyTerry):
        support = family.support()
        return support[rng.integers(0, len(support), size=size)], 1
    if isinstance(family, NormalVariance):
        return rng.gamma(2.0, 1.0, size=(size, n)), None
    return rng.integers(0, 10, size=(size, n)), 1


def check_schur_concave(family: Family, n_probes: int = 10_000, tolerance: float = 1e-9,
                        seed: int = 0) -> list[Violation]:
    """Probe the carrier along single transfers and collect monotonicity violations.

    For a random support point ``x`` with ``x[i] >= x[j]`` the pair
    ``y = x + t e_i - t e_j`` (more spread) and ``x`` (less spread) is related
    by majorization, so a Schur-concave carrier must satisfy
    ``log g(y) <= log g(x) + tolerance``.  This is an empirical check on
    sampled pairs, not a proof.
    """
    rng = np.random.default_rng(seed)
    points, step = _probe_points(family, rng, n_probes)
    violations = []
    for x in points:
        i, j = rng.choice(family.n, size=2, replace=False)
        if x[i] < x[j]:
            i, j = j, i
        if step is None:
            t = rng.uniform(0, x[j])
        else:
            if x[j] < step:
                continue
            t = step
        y = np.array(x, dtype=np.result_type(x, type(t)))
        y[i] += t
        y[j] -= t
        if not weakly_majorizes(y, x):
            raise AssertionError("transfer probe is not majorization-ordered")
        lg_y = family.carrier_log(y)
        lg_x = family.carrier_log(x)
        if lg_x == -math.inf:
            continue
        if lg_y > lg_x + tolerance:
            violations.append(Violation(tuple(y.tolist()), tuple(np.asarray(x).tolist()), lg_y, lg_x))
    return violations


class ConstantCarrier(Family):
    """Trivial carrier ``g = 1`` on a box, useful as a checker control."""

    kind = "constant"

    def __init__(self, n: int):
        self.n = n

    def carrier_log(self, x) -> float:
        self.check_dimension(x)
        return 0.0
