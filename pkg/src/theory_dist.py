"""
Limit laws for cokernels of Haar random matrices over a chain ring

Every value is a truncated infinite product returned together with a rigorous
bound on the absolute truncation error.
"""
import logging
from dataclasses import dataclass
from typing import List, Optional

import mpmath
import pandas as pd

import config
from errors import UsageError
from modules import ModuleType, aut_count, d_invariant, enumerate_module_types
from ring import RingSpec

logger = logging.getLogger(__name__)

# Lifts of free summands are summed while their total excess over e stays <= HAAR_WEIGHT
HAAR_WEIGHT = 50


@dataclass(frozen=True)
class LimitValue:
    """value is the truncated product; the true value lies in [value - tail_bound, value]"""
    value: float
    tail_bound: float

    def __float__(self):
        return self.value


def _tail_sum(q: int, cutoff: int) -> mpmath.mpf:
    """Upper bound for sum_{i > cutoff} q^-i / (1 - q^-i)"""
    q = mpmath.mpf(q)
    return q ** (-cutoff) / ((q - 1) * (1 - q ** (-cutoff - 1)))


def _product(q: int, start: int, terms: int):
    """prod_{i=start}^{start+terms-1} (1 - q^-i) and the bound on the dropped tail"""
    with mpmath.workdps(config.MP_DPS):
        qq = mpmath.mpf(q)
        value = mpmath.fprod(1 - qq ** (-i) for i in range(start, start + terms))
        tail = value * _tail_sum(q, start + terms - 1)
        return value, tail


def c_constant(q: int, u: int, terms: Optional[int] = None) -> LimitValue:
    """c_u(q) = prod_{i > u} (1 - q^-i)"""
    terms = config.TRUNCATION_TERMS if terms is None else terms
    if terms < 1:
        raise UsageError("Truncation needs at least one factor")
    if q < 2:
        raise UsageError("q must be at least 2")
    if u < 0:
        raise UsageError("c_u is defined for u >= 0")
    value, tail = _product(q, u + 1, terms)
    return LimitValue(float(value), float(tail))


def friedman_washington_prob(A: ModuleType, p: Optional[int] = None, terms: Optional[int] = None) -> LimitValue:
    """c_0(p) / |Aut(A)|"""
    q = p if p is not None else A.ring.q
    c = c_constant(q, 0, terms)
    aut = aut_count(A)
    return LimitValue(c.value / aut, c.tail_bound / aut)


def rectangular_prob(A: ModuleType, u: int, p: Optional[int] = None, terms: Optional[int] = None) -> LimitValue:
    """c_u(p) / (|A|^u |Aut(A)|)"""
    if u < 0:
        raise UsageError("The rectangular law needs u >= 0")
    q = p if p is not None else A.ring.q
    c = c_constant(q, u, terms)
    denom = A.size ** u * aut_count(A)
    return LimitValue(c.value / denom, c.tail_bound / denom)


def sawin_wood_prob(A: ModuleType, u: int, terms: Optional[int] = None) -> LimitValue:
    """prod_{i = d(A)+u+1}^inf (1 - q^-i) / (|A|^u |Aut(A)|) for u > 0"""
    if u <= 0:
        raise UsageError("This formula is only asserted for u > 0; use haar_limit_prob for u = 0")
    c = c_constant(A.ring.q, d_invariant(A) + u, terms)
    denom = A.size ** u * aut_count(A)
    return LimitValue(c.value / denom, c.tail_bound / denom)


def _excess_partitions(parts: int, budget: int, largest: Optional[int] = None):
    """Non-increasing tuples of `parts` non-negative ints with sum <= budget"""
    if parts == 0:
        yield ()
        return
    top = budget if largest is None else min(largest, budget)
    for first in range(top, -1, -1):
        for rest in _excess_partitions(parts - 1, budget - first, first):
            yield (first,) + rest


def haar_limit_prob(A: ModuleType, u: int, terms: Optional[int] = None, weight: int = HAAR_WEIGHT) -> LimitValue:
    """Limit of P(coker of a Haar n x (n+u) matrix over R is A), u >= 0

    For u = 0 this is the q-Cohen-Lenstra law of the complete ring pushed down
    to R: each free summand of A lifts to a cyclic factor of exponent e + x_i.
    Lifts with sum(x_i) > weight are dropped; since the law gives mass at most
    q^-N / (1 - 1/q) to groups of order >= q^N, the dropped mass is at most
    q^-(f*e + weight) / (q - 1) for f free summands.
    """
    if u > 0:
        return sawin_wood_prob(A, u, terms)
    if u < 0:
        raise UsageError("Limit laws are tabulated for u >= 0")
    ring = A.ring
    e, q = ring.e, ring.q
    free = A.free_rank
    torsion = tuple(a for a in A.lam if a < e)
    big = RingSpec(ring.kind, ring.p, e + weight, ring.f)
    c = c_constant(q, 0, terms)
    with mpmath.workdps(config.MP_DPS):
        total = mpmath.mpf(0)
        for excess in _excess_partitions(free, weight):
            lifts = tuple(e + x for x in excess)
            total += mpmath.mpf(1) / aut_count(ModuleType(big, torsion + lifts))
        value = c.value * total
        dropped = mpmath.mpf(q) ** (-(free * e + weight)) / (q - 1) if free else 0
    return LimitValue(float(value), float(c.tail_bound * total + dropped))


def finite_field_corank_prob(d: int, q: int, u: int, terms: Optional[int] = None) -> LimitValue:
    """Limit of P(corank = d) for a uniform n x (n+u) matrix over F_q

    q^{-d(d+u)} prod_{i > d+u} (1 - q^-i) / prod_{i=1}^{d} (1 - q^-i)
    """
    if d < 0 or u < 0:
        raise UsageError("Corank law needs d >= 0 and u >= 0")
    c = c_constant(q, d + u, terms)
    with mpmath.workdps(config.MP_DPS):
        qq = mpmath.mpf(q)
        scale = qq ** (-d * (d + u)) / mpmath.fprod(1 - qq ** (-i) for i in range(1, d + 1))
    return LimitValue(float(c.value * scale), float(c.tail_bound * scale))


@dataclass(frozen=True)
class LimitLaw:
    """Limit law of Haar cokernels over ring with column offset u"""
    ring: RingSpec
    u: int
    truncation_terms: int = config.TRUNCATION_TERMS

    @property
    def tail_bound(self) -> float:
        return c_constant(self.ring.q, max(self.u, 0), self.truncation_terms).tail_bound

    def probability(self, A: ModuleType) -> LimitValue:
        if A.ring != self.ring:
            raise UsageError(f"Ring mismatch: {A.ring} vs {self.ring}")
        return haar_limit_prob(A, self.u, self.truncation_terms)

    def table(self, max_size: int) -> pd.DataFrame:
        return limit_table(self.ring, self.u, max_size, self.truncation_terms)


def limit_table(ring: RingSpec, u: int, max_size: int, terms: Optional[int] = None) -> pd.DataFrame:
    """One row per type with |A| <= max_size, ordered by size and then most likely first"""
    """module_type, lambda, probability, tail_bound for every |A| <= max_size, smallest first and most likely first within a size"""
    rows: List[dict] = []
    for A in enumerate_module_types(ring, max_size):
        p = haar_limit_prob(A, u, terms)
        rows.append({
            "module_type": str(A),
            "lambda": A.short,
            "size": A.size,
            "probability": p.value,
            "tail_bound": p.tail_bound,
        })
    df = pd.DataFrame(rows, columns=["module_type", "lambda", "size", "probability", "tail_bound"])
    df = df.sort_values(["size", "probability"], ascending=[True, False], kind="mergesort").reset_index(drop=True)
    logger.info("Tabulated %d module types over %s (u=%d), total mass %.6f",
                len(df), ring, u, df["probability"].sum())
    return df
