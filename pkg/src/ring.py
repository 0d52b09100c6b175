"""
Finite chain rings: Z/p^e and F_q[t]/(t^e)

Elements are stored as integer codes so that matrices can live in numpy arrays.
  - Z/p^e: the code is the canonical integer in [0, p^e).
  - F_q[t]/(t^e): the code is sum(c_j * q^j) where c_j is the j-th coefficient,
    itself coded as a base-p digit string of its polynomial over F_p.
With this coding, for both kinds, "code % q^v" is the canonical residue modulo
pi^v and "code // q^v" divides an element of valuation >= v by pi^v.
"""
import logging
import re
from dataclasses import dataclass
from functools import cached_property, lru_cache
from itertools import product
from typing import List, Optional, Tuple

import numpy as np

from errors import DomainError, ResourceLimitError, UsageError

logger = logging.getLogger(__name__)

ZMOD = "unramified-free"
POLY = "equal-characteristic"

# Rings up to this size get full addition/multiplication tables
TABLE_LIMIT = 256
SUBRNG_LIMIT = 256


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    i = 2
    while i * i <= n:
        if n % i == 0:
            return False
        i += 1
    return True


def prime_power(n: int) -> Optional[Tuple[int, int]]:
    """Return (p, k) with n = p^k, or None"""
    if n < 2:
        return None
    p = 2
    while n % p:
        p += 1
    k = 0
    while n % p == 0:
        n //= p
        k += 1
    return (p, k) if n == 1 else None


def _digits(code: int, base: int, length: int) -> List[int]:
    out = []
    for _ in range(length):
        code, d = divmod(code, base)
        out.append(d)
    return out


def _undigits(digits, base: int) -> int:
    code = 0
    for d in reversed(list(digits)):
        code = code * base + d
    return code


def _fp_poly_mod(a: List[int], modulus: Tuple[int, ...], p: int) -> List[int]:
    """Reduce a (low-to-high coefficients) modulo a monic polynomial over F_p"""
    a = [c % p for c in a]
    f = len(modulus) - 1
    for i in range(len(a) - 1, f - 1, -1):
        c = a[i]
        if c:
            for j in range(f + 1):
                a[i - f + j] = (a[i - f + j] - c * modulus[j]) % p
    return (a + [0] * f)[:f]


def _fp_poly_mul(a: List[int], b: List[int], p: int) -> List[int]:
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] = (out[i + j] + x * y) % p
    return out


@lru_cache(maxsize=None)
def least_irreducible(p: int, f: int) -> Tuple[int, ...]:
    """Lexicographically least monic irreducible polynomial of degree f over F_p

    Coefficients are returned low-to-high (the last one is the leading 1).
    Candidates are ordered by the base-p integer of their lower coefficients.
    """
    if f == 1:
        return (0, 1)
    for low in range(p ** f):
        cand = tuple(_digits(low, p, f)) + (1,)
        if _fp_is_irreducible(cand, p):
            return cand
    raise DomainError(f"No irreducible polynomial of degree {f} over F_{p}")


def _fp_is_irreducible(poly: Tuple[int, ...], p: int) -> bool:
    f = len(poly) - 1
    for d in range(1, f // 2 + 1):
        for low in range(p ** d):
            divisor = tuple(_digits(low, p, d)) + (1,)
            if not any(_fp_poly_mod(list(poly), divisor, p)):
                return False
    return True


class FiniteField:
    """F_q = F_p[x]/(g) with elements coded as base-p digit strings"""

    def __init__(self, p: int, f: int = 1):
        if not is_prime(p):
            raise UsageError(f"{p} is not prime")
        if f < 1:
            raise UsageError("Residue degree must be >= 1")
        self.p = p
        self.f = f
        self.q = p ** f
        self.modulus = least_irreducible(p, f)
        self._mul_table = None
        self._inv_table = None

    def __repr__(self):
        return f"FiniteField(p={self.p}, f={self.f})"

    def add(self, a: int, b: int) -> int:
        if self.f == 1:
            return (a + b) % self.p
        p = self.p
        return _undigits([(x + y) % p for x, y in zip(_digits(a, p, self.f), _digits(b, p, self.f))], p)

    def neg(self, a: int) -> int:
        if self.f == 1:
            return (-a) % self.p
        p = self.p
        return _undigits([(-x) % p for x in _digits(a, p, self.f)], p)

    def sub(self, a: int, b: int) -> int:
        return self.add(a, self.neg(b))

    def _mul_raw(self, a: int, b: int) -> int:
        if self.f == 1:
            return (a * b) % self.p
        prod = _fp_poly_mul(_digits(a, self.p, self.f), _digits(b, self.p, self.f), self.p)
        return _undigits(_fp_poly_mod(prod, self.modulus, self.p), self.p)

    def mul(self, a: int, b: int) -> int:
        if self.f == 1:
            return (a * b) % self.p
        if self._mul_table is None:
            q = self.q
            self._mul_table = [[self._mul_raw(a_, b_) for b_ in range(q)] for a_ in range(q)]
        return self._mul_table[a][b]

    def inv(self, a: int) -> int:
        if a == 0:
            raise DomainError("Zero has no inverse in the residue field")
        if self.f == 1:
            return pow(a, -1, self.p)
        if self._inv_table is None:
            table = [0] * self.q
            for x in range(1, self.q):
                for y in range(1, self.q):
                    if self.mul(x, y) == 1:
                        table[x] = y
                        break
            self._inv_table = table
        return self._inv_table[a]

    def elements(self) -> List[int]:
        return list(range(self.q))


_RING_PATTERN_Z = re.compile(r"^Z/(\d+)(?:\^(\d+))?$")
_RING_PATTERN_F = re.compile(r"^F_?(\d+)(?:\^(\d+))?\[t\]/\(?t(?:\^(\d+))?\)?$")


@dataclass(frozen=True)
class RingSpec:
    """A finite chain ring; immutable and safe to share across workers"""
    kind: str
    p: int
    e: int
    f: int = 1

    def __post_init__(self):
        if self.kind not in (ZMOD, POLY):
            raise UsageError(f"Unknown ring kind {self.kind!r}")
        if not is_prime(self.p):
            raise UsageError(f"{self.p} is not prime")
        if self.e < 1 or self.f < 1:
            raise UsageError("Ring length and residue degree must be >= 1")
        if self.kind == ZMOD and self.f != 1:
            raise UsageError("Z/p^e has residue degree 1; Galois rings with e>1, f>1 are not supported")

    @classmethod
    def zmod(cls, p: int, e: int) -> "RingSpec":
        return cls(ZMOD, p, e, 1)

    @classmethod
    def poly(cls, q: int, e: int) -> "RingSpec":
        pk = prime_power(q)
        if pk is None:
            raise UsageError(f"{q} is not a prime power")
        return cls(POLY, pk[0], e, pk[1])

    @property
    def q(self) -> int:
        return self.p ** self.f

    @property
    def size(self) -> int:
        return self.q ** self.e

    @property
    def irreducible(self) -> Tuple[int, ...]:
        return least_irreducible(self.p, self.f)

    @cached_property
    def residue_field(self) -> FiniteField:
        return FiniteField(self.p, self.f)

    def __str__(self):
        return format_ring(self)

    # -- element constructors -------------------------------------------------

    def element(self, value) -> "RingElem":
        if isinstance(value, RingElem):
            self._check_same(value.ring)
            return value
        return RingElem(self, self.normalize(int(value)))

    def normalize(self, code: int) -> int:
        if self.kind == ZMOD:
            return code % self.size
        if not 0 <= code < self.size:
            raise UsageError(f"Code {code} is not an element of {self}")
        return code

    @property
    def zero(self) -> "RingElem":
        return RingElem(self, 0)

    @property
    def one(self) -> "RingElem":
        return RingElem(self, 1 % self.size)

    @property
    def pi(self) -> "RingElem":
        return RingElem(self, self.pi_power(1))

    def pi_power(self, j: int) -> int:
        return self.q ** j if j < self.e else 0

    def _check_same(self, other: "RingSpec"):
        if other != self:
            raise UsageError(f"Ring mismatch: {self} vs {other}")

    # -- arithmetic on codes --------------------------------------------------

    @cached_property
    def _tables(self):
        if self.kind == ZMOD or self.size > TABLE_LIMIT:
            return None
        n = self.size
        add = np.zeros((n, n), dtype=np.int64)
        mul = np.zeros((n, n), dtype=np.int64)
        for a in range(n):
            for b in range(a, n):
                add[a, b] = add[b, a] = self._poly_add(a, b)
                mul[a, b] = mul[b, a] = self._poly_mul(a, b)
        neg = np.array([self._poly_neg(a) for a in range(n)], dtype=np.int64)
        logger.debug("Built arithmetic tables for %s", self)
        return add, mul, neg

    def _coeffs(self, code: int) -> List[int]:
        return _digits(code, self.q, self.e)

    def _poly_add(self, a: int, b: int) -> int:
        if self.p == 2:
            return a ^ b
        p = self.p
        da, db = _digits(a, p, self.e * self.f), _digits(b, p, self.e * self.f)
        return _undigits([(x + y) % p for x, y in zip(da, db)], p)

    def _poly_neg(self, a: int) -> int:
        p = self.p
        return _undigits([(-x) % p for x in _digits(a, p, self.e * self.f)], p)

    def _poly_mul(self, a: int, b: int) -> int:
        F = self.residue_field
        ca, cb = self._coeffs(a), self._coeffs(b)
        out = [0] * self.e
        for i, x in enumerate(ca):
            if x:
                for j in range(self.e - i):
                    y = cb[j]
                    if y:
                        out[i + j] = F.add(out[i + j], F.mul(x, y))
        return _undigits(out, self.q)

    def add(self, a: int, b: int) -> int:
        if self.kind == ZMOD:
            return (a + b) % self.size
        tables = self._tables
        return int(tables[0][a, b]) if tables is not None else self._poly_add(a, b)

    def neg(self, a: int) -> int:
        if self.kind == ZMOD:
            return (-a) % self.size
        tables = self._tables
        return int(tables[2][a]) if tables is not None else self._poly_neg(a)

    def sub(self, a: int, b: int) -> int:
        return self.add(a, self.neg(b))

    def mul(self, a: int, b: int) -> int:
        if self.kind == ZMOD:
            return (a * b) % self.size
        tables = self._tables
        return int(tables[1][a, b]) if tables is not None else self._poly_mul(a, b)

    # numpy-vectorised versions used by the matrix code

    def vadd(self, a, b):
        if self.kind == ZMOD:
            return (np.asarray(a, dtype=np.int64) + b) % self.size
        tables = self._tables
        if tables is not None:
            return tables[0][a, b]
        return np.vectorize(self._poly_add, otypes=[np.int64])(a, b)

    def vneg(self, a):
        if self.kind == ZMOD:
            return (-np.asarray(a, dtype=np.int64)) % self.size
        tables = self._tables
        if tables is not None:
            return tables[2][a]
        return np.vectorize(self._poly_neg, otypes=[np.int64])(a)

    def vsub(self, a, b):
        return self.vadd(a, self.vneg(b))

    def vmul(self, a, b):
        if self.kind == ZMOD:
            return (np.asarray(a, dtype=np.int64) * b) % self.size
        tables = self._tables
        if tables is not None:
            return tables[1][a, b]
        return np.vectorize(self._poly_mul, otypes=[np.int64])(a, b)

    # -- valuation and units --------------------------------------------------

    def valuation(self, a: int) -> int:
        if a == 0:
            return self.e
        v = 0
        q = self.q
        while a % q == 0:
            a //= q
            v += 1
        return v

    def is_unit(self, a: int) -> bool:
        return a % self.q != 0

    def div_pi_power(self, a: int, v: int) -> int:
        """a / pi^v for an element of valuation >= v (any lift of the quotient)"""
        return a // self.q ** v

    def mod_pi_power(self, a: int, v: int) -> int:
        """Canonical residue of a modulo pi^v"""
        return a % self.q ** v

    def unit_part(self, a: int) -> Tuple[int, int]:
        """Return (u, v) with a = u * pi^v and u a unit (a != 0)"""
        v = self.valuation(a)
        if v == self.e:
            raise DomainError("Zero has no unit part")
        return self.div_pi_power(a, v), v

    def inverse(self, a: int) -> int:
        if not self.is_unit(a):
            raise DomainError(f"{a} is not a unit of {self}")
        if self.kind == ZMOD:
            return pow(a, -1, self.size)
        F = self.residue_field
        ca = self._coeffs(a)
        inv0 = F.inv(ca[0])
        b = [inv0] + [0] * (self.e - 1)
        for k in range(1, self.e):
            acc = 0
            for i in range(1, k + 1):
                acc = F.add(acc, F.mul(ca[i], b[k - i]))
            b[k] = F.mul(F.neg(inv0), acc)
        return _undigits(b, self.q)

    def residue(self, a: int) -> int:
        """Image in the residue field R/m (coded as an element of F_q)"""
        return a % self.q

    def coefficients(self, a: int) -> Tuple[int, ...]:
        if self.kind == ZMOD:
            return (a,)
        return tuple(self._coeffs(a))

    # -- enumeration ------------------------------------------------------------

    def enumerate_elements(self) -> List[int]:
        return list(range(self.size))

    def enumerate_units(self) -> List[int]:
        return [a for a in range(self.size) if self.is_unit(a)]

    def enumerate_ideals(self) -> List["Ideal"]:
        """The chain (pi^0) > (pi^1) > ... > (pi^e) = 0"""
        return [Ideal(self, j) for j in range(self.e + 1)]

    def additive_generators(self) -> List[int]:
        """Codes generating R as an abelian group"""
        if self.kind == ZMOD:
            return [1 % self.size]
        return [self.p ** i * self.q ** j for j in range(self.e) for i in range(self.f)]

    def enumerate_subrngs(self) -> List[frozenset]:
        """All subsets containing 0 closed under +, - and * (1 not required)"""
        if self.size > SUBRNG_LIMIT:
            raise ResourceLimitError(f"Sub-rng enumeration is capped at |R| <= {SUBRNG_LIMIT}")
        found = {frozenset([0])}
        frontier = [frozenset([0])]
        while frontier:
            nxt = []
            for s in frontier:
                for x in range(self.size):
                    if x in s:
                        continue
                    closed = self._rng_closure(s | {x})
                    if closed not in found:
                        found.add(closed)
                        nxt.append(closed)
            frontier = nxt
        return sorted(found, key=lambda s: (len(s), sorted(s)))

    def _rng_closure(self, seed) -> frozenset:
        elems = set(seed)
        work = list(elems)
        while work:
            x = work.pop()
            for y in list(elems):
                for z in (self.add(x, y), self.sub(x, y), self.sub(y, x), self.mul(x, y), self.mul(x, x)):
                    if z not in elems:
                        elems.add(z)
                        work.append(z)
        return frozenset(elems)


@dataclass(frozen=True)
class Ideal:
    """The ideal (pi^j) of a chain ring"""
    ring: RingSpec
    j: int

    @property
    def size(self) -> int:
        return self.ring.q ** (self.ring.e - self.j)

    @property
    def quotient_size(self) -> int:
        return self.ring.q ** self.j

    @property
    def generator(self) -> int:
        return self.ring.pi_power(self.j)

    def elements(self) -> frozenset:
        step = self.ring.q ** self.j
        return frozenset(range(0, self.ring.size, step)) if self.j < self.ring.e else frozenset([0])

    def quotient_units(self) -> int:
        """|(R/I)*|; the zero ring R/R has one unit"""
        if self.j == 0:
            return 1
        q = self.ring.q
        return q ** self.j - q ** (self.j - 1)

    def __contains__(self, code: int) -> bool:
        return code % (self.ring.q ** self.j) == 0 if self.j < self.ring.e else code == 0

    def __str__(self):
        if self.j == self.ring.e:
            return "(0)"
        if self.j == 0:
            return "(1)"
        return f"(pi^{self.j})" if self.j > 1 else "(pi)"


@dataclass(frozen=True)
class RingElem:
    ring: RingSpec
    code: int

    def _other(self, other) -> Optional[int]:
        if isinstance(other, RingElem):
            self.ring._check_same(other.ring)
            return other.code
        if isinstance(other, (int, np.integer)):
            return self.ring.normalize(int(other))
        return None

    def __add__(self, other):
        b = self._other(other)
        if b is None:
            return NotImplemented
        return RingElem(self.ring, self.ring.add(self.code, b))

    __radd__ = __add__

    def __sub__(self, other):
        b = self._other(other)
        if b is None:
            return NotImplemented
        return RingElem(self.ring, self.ring.sub(self.code, b))

    def __neg__(self):
        return RingElem(self.ring, self.ring.neg(self.code))

    def __mul__(self, other):
        b = self._other(other)
        if b is None:
            return NotImplemented
        return RingElem(self.ring, self.ring.mul(self.code, b))

    __rmul__ = __mul__

    def valuation(self) -> int:
        return self.ring.valuation(self.code)

    def is_unit(self) -> bool:
        return self.ring.is_unit(self.code)

    def inverse(self) -> "RingElem":
        return RingElem(self.ring, self.ring.inverse(self.code))

    def residue(self) -> int:
        return self.ring.residue(self.code)

    @property
    def coefficients(self) -> Tuple[int, ...]:
        return self.ring.coefficients(self.code)

    def __int__(self):
        return self.code

    def __str__(self):
        return str(self.code)


def parse_ring(text: str) -> RingSpec:
    """Parse "Z/p^e" style ("Z/4", "Z/2^3") or "F_q[t]/t^e" style ("F2[t]/t^2")"""
    s = text.replace(" ", "")
    m = _RING_PATTERN_Z.match(s)
    if m:
        base = int(m.group(1))
        power = int(m.group(2)) if m.group(2) else 1
        pk = prime_power(base)
        if pk is None:
            raise UsageError(f"{text!r}: modulus must be a prime power")
        return RingSpec.zmod(pk[0], pk[1] * power)
    m = _RING_PATTERN_F.match(s)
    if m:
        q = int(m.group(1)) ** (int(m.group(2)) if m.group(2) else 1)
        e = int(m.group(3)) if m.group(3) else 1
        return RingSpec.poly(q, e)
    raise UsageError(f"Cannot parse ring {text!r}; expected e.g. 'Z/4' or 'F2[t]/t^2'")


def format_ring(ring: RingSpec) -> str:
    if ring.kind == ZMOD:
        return f"Z/{ring.size}"
    return f"F{ring.q}[t]/t^{ring.e}" if ring.e > 1 else f"F{ring.q}[t]/t"


def enumerate_tuples(ring: RingSpec, length: int):
    """All length-tuples of ring codes, in lexicographic order"""
    return product(range(ring.size), repeat=length)
