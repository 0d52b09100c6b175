"""
Entry distributions, Fourier coefficients on finite modules, and the exact
moment-tail sums behind the exponential convergence rate

Characters of M are indexed by elements h of M through the additive digits of
the module: for Z/p^e each coordinate is one cyclic digit of order p^lam, for
F_q[t]/t^e each coordinate splits into f*lam digits of order p.
"""
import logging
import re
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations_with_replacement, product
from math import factorial, lcm
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple, Union

import mpmath
import numpy as np
import pandas as pd

import config
from errors import DomainError, ResourceLimitError, UsageError
from modules import ConcreteModule, ModuleType
from ring import ZMOD, Ideal, RingSpec

logger = logging.getLogger(__name__)

Law = Dict[int, Fraction]

TYPE1, TYPE2, TYPE3 = "Type1", "Type2", "Type3"

_ENTRY = re.compile(r"^(\d+):(\d+(?:/\d+)?)$")


@dataclass(frozen=True)
class EntryDistribution:
    """A finitely supported law on R; support codes sorted, probabilities positive"""
    ring: RingSpec
    support: Tuple[Tuple[int, Fraction], ...]
    is_haar: bool = False

    def __post_init__(self):
        merged: Dict[int, Fraction] = {}
        for code, prob in self.support:
            code = self.ring.normalize(int(code))
            merged[code] = merged.get(code, Fraction(0)) + Fraction(prob)
        if any(p <= 0 for p in merged.values()):
            raise UsageError("Entry probabilities must be positive")
        if sum(merged.values(), Fraction(0)) != 1:
            raise UsageError("Entry probabilities must sum to 1")
        object.__setattr__(self, "support", tuple(sorted(merged.items())))

    @classmethod
    def haar(cls, ring: RingSpec) -> "EntryDistribution":
        return cls(ring, tuple((a, Fraction(1, ring.size)) for a in range(ring.size)), is_haar=True)

    @classmethod
    def parse(cls, text: str, ring: RingSpec) -> "EntryDistribution":
        """"0:1/2,1:1/2" or "haar" """
        s = text.replace(" ", "")
        if s.lower() in ("haar", "uniform"):
            return cls.haar(ring)
        pairs = []
        for part in s.split(","):
            m = _ENTRY.match(part)
            if not m:
                raise UsageError(f"Cannot parse entry law {text!r}; expected e.g. '0:1/2,1:1/2'")
            pairs.append((int(m.group(1)), Fraction(m.group(2))))
        return cls(ring, tuple(pairs))

    def to_text(self) -> str:
        if self.is_haar:
            return "haar"
        return ",".join(f"{a}:{p}" for a, p in self.support)

    @property
    def probs(self) -> Law:
        return dict(self.support)

    @property
    def codes(self) -> List[int]:
        return [a for a, _ in self.support]

    def mod_ideal(self, j: int) -> Law:
        """Push-forward to R/(pi^j), keyed by canonical residue"""
        out: Law = {}
        mod = self.ring.q ** j
        for a, p in self.support:
            out[a % mod] = out.get(a % mod, Fraction(0)) + p
        return out

    def residue_law(self) -> Law:
        return self.mod_ideal(1)

    def alpha_for(self, M: ModuleType) -> Fraction:
        """Least nonzero probability of xi modulo ann(M)"""
        j = M.lam[0] if M.lam else 0
        return min(self.mod_ideal(j).values())

    @property
    def beta(self) -> Fraction:
        return 1 - max(max(self.residue_law().values()), Fraction(1, self.ring.p))

    def transformed(self, shift: int, unit: int) -> "EntryDistribution":
        """Law of unit * (xi - shift)"""
        ring = self.ring
        return EntryDistribution(ring, tuple((ring.mul(unit, ring.sub(a, shift)), p) for a, p in self.support),
                                 is_haar=self.is_haar)

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        if self.is_haar:
            return rng.integers(0, self.ring.size, size=size, dtype=np.int64)
        codes = np.array(self.codes, dtype=np.int64)
        weights = np.array([float(p) for _, p in self.support])
        return codes[rng.choice(len(codes), size=size, p=weights / weights.sum())]


def normalize_entry(xi: EntryDistribution) -> EntryDistribution:
    """Translate and scale by a unit so that the support contains 0 and 1"""
    ring = xi.ring
    codes = xi.codes
    if 0 in codes and 1 in codes:
        return xi
    for s0 in codes:
        for s1 in codes:
            if s1 != s0 and ring.is_unit(ring.sub(s1, s0)):
                return xi.transformed(s0, ring.inverse(ring.sub(s1, s0)))
    raise DomainError("Support lies in a translate of the maximal ideal; no normalization exists")


@dataclass(frozen=True)
class HypothesisResult:
    ok: bool
    violation: Optional[str] = None
    witness: Optional[str] = None
    unital: Optional[bool] = None

    def __str__(self):
        if self.ok:
            return "ok"
        return f"violation: {self.violation} ({self.witness})"


def hypothesis_check(xi: EntryDistribution) -> HypothesisResult:
    """xi must not live on a translate of a proper ideal nor of a proper sub-rng"""
    ring = xi.ring
    codes = xi.codes
    s0 = codes[0]
    diffs = {ring.sub(a, s0) for a in codes}
    for j in range(ring.e, 0, -1):
        ideal = Ideal(ring, j)
        if all(d in ideal for d in diffs):
            return HypothesisResult(False, "translate-of-ideal", f"{s0} + {ideal}")
    for sub in ring.enumerate_subrngs():
        if len(sub) == ring.size:
            continue
        if diffs <= sub:
            unital = (1 % ring.size) in sub
            witness = f"{s0} + {{{', '.join(str(x) for x in sorted(sub))}}}"
            return HypothesisResult(False, "translate-of-subring", witness, unital)
    return HypothesisResult(True)


@dataclass(frozen=True)
class ThetaData:
    l2_sq: Fraction
    linf: Fraction
    inv_char: Fraction
    beta: Fraction

    @property
    def l2(self) -> float:
        return float(self.l2_sq) ** 0.5

    @property
    def theta_bound(self) -> float:
        """Every admissible theta lies strictly between this and 1"""
        return max(self.l2, float(self.linf), float(self.inv_char))


def norms_and_theta(xi: EntryDistribution) -> ThetaData:
    law = xi.residue_law()
    return ThetaData(
        l2_sq=sum((p * p for p in law.values()), Fraction(0)),
        linf=max(law.values()),
        inv_char=Fraction(1, xi.ring.p),
        beta=xi.beta,
    )


@dataclass(frozen=True)
class ConvergenceParams:
    epsilon: Fraction
    epsilon0: Fraction
    epsilon_prime: Fraction
    theta: float
    theta_bound: float

    def __post_init__(self):
        if not 0 < self.epsilon < self.epsilon0:
            raise UsageError("Need 0 < eps < eps0")
        if self.epsilon_prime <= 0:
            raise UsageError("Need eps' > 0")
        if not self.theta_bound < self.theta < 1:
            raise UsageError(f"theta must lie strictly between {self.theta_bound:.6f} and 1")

    @classmethod
    def for_entry(cls, xi: EntryDistribution, theta: Optional[float] = None, eps=None, eps0=None,
                  eps_prime=None) -> "ConvergenceParams":
        bound = norms_and_theta(xi).theta_bound
        return cls(
            epsilon=Fraction(eps if eps is not None else config.EPS),
            epsilon0=Fraction(eps0 if eps0 is not None else config.EPS0),
            epsilon_prime=Fraction(eps_prime if eps_prime is not None else config.EPS_PRIME),
            theta=theta if theta is not None else (bound + 1) / 2,
            theta_bound=bound,
        )


# -- Fourier analysis ---------------------------------------------------------------

@dataclass(frozen=True)
class FourierCoefficient:
    """Coefficient at the character indexed by h; modulus_sq is exact when exact is set"""
    character: int
    value: complex
    modulus_sq: Union[Fraction, mpmath.mpf]
    exact: bool

    def at_most(self, bound: Fraction) -> bool:
        """|c| <= bound"""
        b2 = bound * bound
        if self.exact:
            return self.modulus_sq <= b2
        return self.modulus_sq <= mpmath.mpf(b2.numerator) / b2.denominator + config.FOURIER_SLACK

    def is_one(self) -> bool:
        if self.exact:
            return self.modulus_sq == 1
        return abs(self.modulus_sq - 1) <= config.FOURIER_SLACK

    @property
    def modulus(self) -> float:
        return float(self.modulus_sq) ** 0.5


class CharacterTable:
    """phase[h, x] with chi_h(x) = exp(2 pi i phase / L)"""

    def __init__(self, module: ConcreteModule):
        self.module = module
        ring = module.ring
        digits, orders = [], []
        for k, lam in enumerate(module.type.lam):
            col = module.coords[:, k]
            if ring.kind == ZMOD:
                digits.append(col)
                orders.append(ring.p ** lam)
            else:
                rest = col.copy()
                for _ in range(ring.f * lam):
                    digits.append(rest % ring.p)
                    orders.append(ring.p)
                    rest = rest // ring.p
        self.orders = orders
        self.exponent = lcm(*orders) if orders else 1
        L = self.exponent
        phase = np.zeros((module.size, module.size), dtype=np.int64)
        for d, o in zip(digits, orders):
            phase = (phase + np.outer(d, d) * (L // o)) % L
        self.phase = phase

    @property
    def exact(self) -> bool:
        return self.exponent in (1, 2, 4)

    def coefficient(self, law: Law, h: int) -> FourierCoefficient:
        L = self.exponent
        masses: Dict[int, Fraction] = {}
        for x, p in law.items():
            k = int(self.phase[h, x])
            masses[k] = masses.get(k, Fraction(0)) + p
        if self.exact:
            # zeta = i (L=4) or -1 (L=2): real/imag parts are exact
            step = 4 // L
            re_, im_ = Fraction(0), Fraction(0)
            for k, m in masses.items():
                r = (k * step) % 4
                if r == 0:
                    re_ += m
                elif r == 1:
                    im_ += m
                elif r == 2:
                    re_ -= m
                else:
                    im_ -= m
            return FourierCoefficient(h, complex(float(re_), float(im_)), re_ * re_ + im_ * im_, True)
        with mpmath.workdps(config.MP_DPS):
            z = mpmath.mpc(0)
            for k, m in masses.items():
                z += mpmath.mpf(m.numerator) / m.denominator * mpmath.expjpi(mpmath.mpf(2 * k) / L)
            return FourierCoefficient(h, complex(z), abs(z) ** 2, False)

    def coefficients(self, law: Law) -> List[FourierCoefficient]:
        return [self.coefficient(law, h) for h in range(self.module.size)]

    def trivial_on(self, h: int, subgroup: Iterable[int]) -> bool:
        members = np.fromiter(frozenset(subgroup), dtype=np.int64)
        return not self.phase[h, members].any()


def fourier_coefficients(law: Law, module: ConcreteModule) -> Dict[int, FourierCoefficient]:
    """Coefficient of a law on M at every character; the trivial character gives the total mass"""
    table = CharacterTable(module)
    return {h: table.coefficient(law, h) for h in range(module.size)}


def law_linf(law: Law) -> Fraction:
    return max(law.values(), default=Fraction(0))


def convolve(module: ConcreteModule, a: Law, b: Law) -> Law:
    out: Law = {}
    for x, p in a.items():
        for y, r in b.items():
            z = int(module.add_table[x, y])
            out[z] = out.get(z, Fraction(0)) + p * r
    return out


def scaled_law(module: ConcreteModule, m: int, xi: EntryDistribution) -> Law:
    """Law of m * xi on M"""
    out: Law = {}
    for r, p in xi.support:
        z = int(module.act_table[r, m])
        out[z] = out.get(z, Fraction(0)) + p
    return out


def tuple_law(module: ConcreteModule, elements: Sequence[int], xi: EntryDistribution) -> Law:
    """Exact law of sum_i m_i xi_i for independent xi_i"""
    law: Law = {0: Fraction(1)}
    for m in elements:
        law = convolve(module, law, scaled_law(module, int(m), xi))
    return law


@dataclass
class TupleClassification:
    elements: Tuple[int, ...]
    type_tag: str
    linf: Fraction
    spans: bool
    witness: Optional[FourierCoefficient] = None
    law: Law = field(default_factory=dict)
    linf_bound: Optional[Fraction] = None

    @property
    def within_linf_bound(self) -> bool:
        """Type 1 forces every point mass to be at most (1+eps)/|M| by the inverse transform"""
        return self.type_tag != TYPE1 or self.linf_bound is None or self.linf <= self.linf_bound


def classify_tuple(module: ConcreteModule, elements: Sequence[int], xi: EntryDistribution, eps=None,
                   require_spanning: bool = True, normalize: bool = True,
                   table: Optional[CharacterTable] = None) -> TupleClassification:
    """Type 1: every nontrivial coefficient <= eps/|M|; Type 2: each is that small or of modulus 1;
    Type 3: otherwise. The witness is the largest offending coefficient."""
    eps = Fraction(eps if eps is not None else config.EPS)
    spans = module.generates(list(elements))
    if require_spanning and not spans:
        raise UsageError("Tuple does not span the module")
    entry = xi
    if normalize and not xi.is_haar:
        try:
            entry = normalize_entry(xi)
        except DomainError:
            pass
    law = tuple_law(module, elements, entry)
    table = table or CharacterTable(module)
    bound = eps / module.size
    tag = TYPE1
    witness = None
    for h in range(1, module.size):
        c = table.coefficient(law, h)
        if c.at_most(bound):
            continue
        if c.is_one():
            if tag == TYPE1:
                tag, witness = TYPE2, c
            continue
        if tag != TYPE3 or c.modulus_sq > witness.modulus_sq:
            witness = c
        tag = TYPE3
    return TupleClassification(tuple(int(m) for m in elements), tag, law_linf(law), spans, witness, law,
                               (1 + eps) / module.size)


def t_constant(module: ConcreteModule, xi: EntryDistribution, eps=None, max_t: int = 10 ** 6) -> int:
    """Least T with C^T <= eps/|M|, C the largest coefficient modulus below 1 over all laws m * xi"""
    eps = Fraction(eps if eps is not None else config.EPS)
    table = CharacterTable(module)
    worst = None
    for m in range(module.size):
        law = scaled_law(module, m, xi)
        for h in range(1, module.size):
            c = table.coefficient(law, h)
            if c.is_one():
                continue
            if worst is None or c.modulus_sq > worst.modulus_sq:
                worst = c
    if worst is None or worst.modulus_sq == 0:
        return 1
    target = (eps / module.size) ** 2
    c2 = worst.modulus_sq
    if not worst.exact:
        target = mpmath.mpf(target.numerator) / target.denominator
    power = c2
    for T in range(1, max_t + 1):
        if power <= target:
            return T
        power = power * c2
    raise ResourceLimitError(f"T exceeds {max_t}")


# -- subgroup equidistribution -----------------------------------------------------------

def is_equidistributed_on(law: Law, module: ConcreteModule, subgroup: Iterable[int], eps) -> bool:
    """Supported on the subgroup and every character nontrivial there has coefficient <= eps/|subgroup|"""
    S = frozenset(subgroup)
    if any(p and x not in S for x, p in law.items()):
        return False
    table = CharacterTable(module)
    bound = Fraction(eps) / len(S)
    for h in range(module.size):
        if table.trivial_on(h, S):
            continue
        if not table.coefficient(law, h).at_most(bound):
            return False
    return True


def convolution_bound_holds(zeta1: Law, zeta2: Law, module: ConcreteModule, subgroup: Iterable[int], eps) -> bool:
    """P(z1 + z2 = g) <= (1 + eps) P(z1 = g mod S) / |S| for every g, given z2 eps-equidistributed on S"""
    S = frozenset(subgroup)
    eps = Fraction(eps)
    if not is_equidistributed_on(zeta2, module, S, eps):
        raise UsageError("Second law is not equidistributed on the subgroup")
    total = convolve(module, zeta1, zeta2)
    labels = module.coset_labels(S)
    mod_mass: Dict[int, Fraction] = {}
    for x, p in zeta1.items():
        key = int(labels[x])
        mod_mass[key] = mod_mass.get(key, Fraction(0)) + p
    for g in range(module.size):
        lhs = total.get(g, Fraction(0))
        rhs = (1 + eps) * mod_mass.get(int(labels[g]), Fraction(0)) / len(S)
        if lhs > rhs:
            return False
    return True


def stabilizer_count(module: ConcreteModule, subgroup: Iterable[int], support: Iterable[int]) -> int:
    """#{m in M : m s in S for every s in support}"""
    S = frozenset(subgroup)
    support = list(support)
    return sum(1 for m in range(module.size)
               if all(int(module.act_table[s, m]) in S for s in support))


# -- moment tail sums ------------------------------------------------------------------

@dataclass
class MomentTail:
    total: Fraction
    tuples: int
    contributing: int
    by_type: Dict[str, Fraction] = field(default_factory=dict)
    counts: Dict[str, int] = field(default_factory=dict)
    linf_bound_failures: int = 0


def _multinomial(counts: Iterable[int]) -> int:
    counts = list(counts)
    out = factorial(sum(counts))
    for c in counts:
        out //= factorial(c)
    return out


class _SpanCache:
    def __init__(self, module: ConcreteModule):
        self.module = module
        self.cache: Dict[FrozenSet[int], bool] = {}

    def __call__(self, elements) -> bool:
        key = frozenset(elements)
        if key not in self.cache:
            self.cache[key] = self.module.generates(sorted(key))
        return self.cache[key]


def _statistic(law: Law, statistic: str) -> Fraction:
    if statistic == "zero":
        return law.get(0, Fraction(0))
    if statistic == "linf":
        return law_linf(law)
    raise UsageError(f"Unknown statistic {statistic!r}; use 'zero' or 'linf'")


def moment_tail_sum(M: ModuleType, xi: EntryDistribution, l: int, k: int, eps0=None,
                    statistic: str = "zero", classify: bool = True, eps=None,
                    budget: Optional[int] = None) -> MomentTail:
    """sum over spanning (m_1..m_l) of max(s^k - ((1+eps0)/|M|)^k, 0)

    s is P(sum m_i xi_i = 0) for statistic "zero" and its l-infinity norm for "linf".
    Tuples are enumerated as multisets weighted by their number of orderings.
    """
    eps0 = Fraction(eps0 if eps0 is not None else config.EPS0)
    budget = budget if budget is not None else config.ENUMERATION_BUDGET
    module = ConcreteModule(M)
    multisets = _count_multisets(module.size, l)
    if multisets > budget:
        raise ResourceLimitError(f"{multisets} multisets exceed the enumeration budget {budget}")
    threshold = ((1 + eps0) / module.size) ** k
    spans = _SpanCache(module)
    table = CharacterTable(module) if classify else None
    result = MomentTail(Fraction(0), 0, 0,
                        {TYPE1: Fraction(0), TYPE2: Fraction(0), TYPE3: Fraction(0)},
                        {TYPE1: 0, TYPE2: 0, TYPE3: 0})
    for combo in combinations_with_replacement(range(module.size), l):
        if not spans(combo):
            continue
        weight = _multinomial(Counter(combo).values())
        law = tuple_law(module, combo, xi)
        term = max(_statistic(law, statistic) ** k - threshold, Fraction(0))
        result.tuples += weight
        if term:
            result.contributing += weight
            result.total += weight * term
        if classify:
            kind = classify_tuple(module, combo, xi, eps, table=table)
            result.by_type[kind.type_tag] += weight * term
            result.counts[kind.type_tag] += weight
            if not kind.within_linf_bound:
                result.linf_bound_failures += weight
    if result.linf_bound_failures:
        logger.error("%d Type 1 tuples over %s exceed the (1+eps)/|M| point-mass bound",
                     result.linf_bound_failures, M)
    return result


def _count_multisets(n: int, l: int) -> int:
    return factorial(n + l - 1) // (factorial(l) * factorial(n - 1))


def replaced_tail_sum(M: ModuleType, xi: EntryDistribution, pattern: Iterable[Tuple[int, int]], l: int, k: int,
                      eps0=None, statistic: str = "zero", budget: Optional[int] = None) -> Fraction:
    """The tail sum with the entries at pattern cells (row i, column c) of the l x k matrix made Haar"""
    eps0 = Fraction(eps0 if eps0 is not None else config.EPS0)
    budget = budget if budget is not None else config.ENUMERATION_BUDGET
    module = ConcreteModule(M)
    if module.size ** l > budget:
        raise ResourceLimitError(f"{module.size ** l} tuples exceed the enumeration budget {budget}")
    cells = frozenset(pattern)
    for i, c in cells:
        if not (0 <= i < l and 0 <= c < k):
            raise UsageError(f"Cell {(i, c)} outside the {l} x {k} matrix")
    column_rows = Counter(frozenset(i for i, c in cells if c == col) for col in range(k))
    haar = EntryDistribution.haar(module.ring)
    threshold = ((1 + eps0) / module.size) ** k
    spans = _SpanCache(module)
    total = Fraction(0)
    for combo in product(range(module.size), repeat=l):
        if not spans(combo):
            continue
        value = Fraction(1)
        for rows, times in column_rows.items():
            law: Law = {0: Fraction(1)}
            for i, m in enumerate(combo):
                law = convolve(module, law, scaled_law(module, m, haar if i in rows else xi))
            value *= _statistic(law, statistic) ** times
        total += max(value - threshold, Fraction(0))
    return total


@dataclass(frozen=True)
class ReplacementCheck:
    zero_original: Fraction
    zero_replaced: Fraction
    linf_original: Fraction
    linf_replaced: Fraction

    @property
    def holds(self) -> bool:
        return self.linf_replaced <= self.linf_original

    @property
    def zero_holds(self) -> bool:
        return self.zero_replaced <= self.zero_original


def uniform_replacement_check(M: ModuleType, xi: EntryDistribution, pattern: Iterable[Tuple[int, int]],
                              l: int, k: int, eps0=None) -> ReplacementCheck:
    """Replacing entries by Haar ones never increases the l-infinity tail sum"""
    cells = frozenset(pattern)
    return ReplacementCheck(
        zero_original=replaced_tail_sum(M, xi, (), l, k, eps0, "zero"),
        zero_replaced=replaced_tail_sum(M, xi, cells, l, k, eps0, "zero"),
        linf_original=replaced_tail_sum(M, xi, (), l, k, eps0, "linf"),
        linf_replaced=replaced_tail_sum(M, xi, cells, l, k, eps0, "linf"),
    )


def random_pattern(l: int, k: int, rng: np.random.Generator) -> FrozenSet[Tuple[int, int]]:
    mask = rng.random((l, k)) < 0.5
    return frozenset((int(i), int(c)) for i, c in zip(*np.nonzero(mask)))


def moment_decay_series(M: ModuleType, xi: EntryDistribution, ls: Sequence[int], k_offset: int = 0,
                        eps0=None, statistic: str = "zero", classify: bool = True) -> pd.DataFrame:
    """One row per l: the exact sum, its decimal value, the ratio to the previous l and the per-type split"""
    rows = []
    previous = None
    for l in config.progress(ls, desc="moment sums"):
        k = l + k_offset
        if k < 1:
            raise UsageError(f"k = l + k_offset must be positive (l={l})")
        tail = moment_tail_sum(M, xi, l, k, eps0, statistic, classify)
        ratio = float(tail.total / previous) if previous else None
        rows.append({
            "l": l,
            "k": k,
            "sum": str(tail.total),
            "decimal": float(tail.total),
            "ratio": ratio,
            "type1": str(tail.by_type[TYPE1]),
            "type2": str(tail.by_type[TYPE2]),
            "type3": str(tail.by_type[TYPE3]),
        })
        previous = tail.total
        logger.debug("l=%d k=%d sum=%s", l, k, tail.total)
    return pd.DataFrame(rows, columns=["l", "k", "sum", "decimal", "ratio", "type1", "type2", "type3"])
