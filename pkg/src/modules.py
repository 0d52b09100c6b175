"""
Finite modules over a chain ring R

A module type is the partition lambda with M = R/pi^lambda_1 + ... + R/pi^lambda_r.
ConcreteModule gives such a type explicit elements (indices into a mixed-radix
table) so that subgroups, submodules and measures can be enumerated.
"""
import logging
import re
from dataclasses import dataclass
from functools import cached_property
from itertools import product
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

import config
from errors import ResourceLimitError, UsageError
from ring import FiniteField, RingSpec

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ModuleType:
    """Isomorphism class of a finite R-module, exponents non-increasing"""
    ring: RingSpec
    lam: Tuple[int, ...] = ()

    def __post_init__(self):
        lam = tuple(sorted((int(a) for a in self.lam if a != 0), reverse=True))
        for a in lam:
            if not 1 <= a <= self.ring.e:
                raise UsageError(f"Exponent {a} outside [1, {self.ring.e}] for {self.ring}")
        object.__setattr__(self, "lam", lam)

    @property
    def size(self) -> int:
        return self.ring.q ** sum(self.lam)

    @property
    def rank(self) -> int:
        """Minimal number of generators"""
        return len(self.lam)

    @property
    def free_rank(self) -> int:
        return sum(1 for a in self.lam if a == self.ring.e)

    def is_cyclic(self) -> bool:
        return len(self.lam) <= 1

    def conjugate(self) -> Tuple[int, ...]:
        """lam'_j = #{i : lam_i >= j} for j = 1..e"""
        return tuple(sum(1 for a in self.lam if a >= j) for j in range(1, self.ring.e + 1))

    @property
    def short(self) -> str:
        return "[" + ",".join(str(a) for a in self.lam) + "]"

    def __str__(self):
        if not self.lam:
            return "0"
        return " + ".join("R/pi" if a == 1 else f"R/pi^{a}" for a in self.lam)


_FACTOR = re.compile(r"^R/pi(?:\^(\d+))?$")


def parse_module_type(text: str, ring: RingSpec) -> ModuleType:
    """Accepts "[2,1]", "[]", "0" and "R/pi^2 + R/pi" (R alone means the free module)"""
    s = text.replace(" ", "")
    if s in ("0", "[]", ""):
        return ModuleType(ring, ())
    if s.startswith("[") and s.endswith("]"):
        try:
            return ModuleType(ring, tuple(int(x) for x in s[1:-1].split(",") if x))
        except ValueError as e:
            raise UsageError(f"Cannot parse module type {text!r}") from e
    lam = []
    for part in s.split("+"):
        if part == "R":
            lam.append(ring.e)
            continue
        m = _FACTOR.match(part)
        if not m:
            raise UsageError(f"Cannot parse module factor {part!r} in {text!r}")
        lam.append(int(m.group(1)) if m.group(1) else 1)
    return ModuleType(ring, tuple(lam))


def free_module(ring: RingSpec, n: int) -> ModuleType:
    return ModuleType(ring, (ring.e,) * n)


def residue_module(ring: RingSpec, n: int = 1) -> ModuleType:
    """k^n viewed as an R-module"""
    return ModuleType(ring, (1,) * n)


def d_invariant(A: ModuleType) -> int:
    """Generators minus relations of a minimal presentation; the free rank over a chain ring"""
    return A.free_rank


def aut_count(A: ModuleType) -> int:
    """|Aut(A)| from the type-lambda formula for modules over a chain ring

    With exponents ascending e_1 <= ... <= e_n, d_k = max{l : e_l = e_k} and
    c_k = min{l : e_l = e_k}:
      prod_k (q^d_k - q^(k-1)) * prod_j q^(e_j (n - d_j)) * prod_i q^((e_i - 1)(n - c_i + 1))
    """
    q = A.ring.q
    ex = sorted(A.lam)
    n = len(ex)
    total = 1
    for k in range(1, n + 1):
        ek = ex[k - 1]
        d = max(l for l in range(1, n + 1) if ex[l - 1] == ek)
        c = min(l for l in range(1, n + 1) if ex[l - 1] == ek)
        total *= (q ** d - q ** (k - 1))
        total *= q ** (ek * (n - d))
        total *= q ** ((ek - 1) * (n - c + 1))
    return total


def hom_count(A: ModuleType, B: ModuleType) -> int:
    if A.ring != B.ring:
        raise UsageError(f"Ring mismatch: {A.ring} vs {B.ring}")
    return A.ring.q ** sum(min(a, b) for a in A.lam for b in B.lam)


def sur_count(A: ModuleType, B: ModuleType, cap: Optional[int] = None) -> int:
    """#Sur(A, B) by Moebius inversion over the submodule lattice of B"""
    if A.ring != B.ring:
        raise UsageError(f"Ring mismatch: {A.ring} vs {B.ring}")
    if not B.lam:
        return 1
    if B.rank > A.rank:
        return 0
    lattice = SubmoduleLattice(ConcreteModule(B, cap=cap))
    top = lattice.top
    total = 0
    for i in range(len(lattice)):
        mu = lattice.mobius(i, top)
        if mu:
            total += mu * hom_count(A, lattice.type_of(i))
    return total


def enumerate_module_types(ring: RingSpec, max_size: int) -> List[ModuleType]:
    """All module types with |A| <= max_size, ordered by size then partition"""
    out = []
    max_weight = 0
    while ring.q ** (max_weight + 1) <= max_size:
        max_weight += 1

    def parts(remaining, largest):
        if remaining == 0:
            yield ()
            return
        for a in range(min(largest, remaining), 0, -1):
            for rest in parts(remaining - a, a):
                yield (a,) + rest

    for w in range(max_weight + 1):
        for lam in parts(w, ring.e):
            out.append(ModuleType(ring, lam))
    return out


def fq_rank(rows: Sequence[Sequence[int]], field: FiniteField) -> int:
    """Rank of a matrix over F_q (entries coded as field elements)"""
    m = [list(r) for r in rows]
    if not m:
        return 0
    rank = 0
    cols = len(m[0])
    for c in range(cols):
        pivot = next((i for i in range(rank, len(m)) if m[i][c]), None)
        if pivot is None:
            continue
        m[rank], m[pivot] = m[pivot], m[rank]
        inv = field.inv(m[rank][c])
        m[rank] = [field.mul(inv, x) for x in m[rank]]
        for i in range(len(m)):
            if i != rank and m[i][c]:
                f = m[i][c]
                m[i] = [field.sub(x, field.mul(f, y)) for x, y in zip(m[i], m[rank])]
        rank += 1
    return rank


@dataclass(frozen=True)
class Subgroup:
    """An additive subgroup of a ConcreteModule, as a set of element indices"""
    elements: frozenset
    is_R_module: bool

    @property
    def size(self) -> int:
        return len(self.elements)

    def __contains__(self, index: int) -> bool:
        return index in self.elements

    def __len__(self):
        return len(self.elements)


class ConcreteModule:
    """Explicit elements of R/pi^lam_1 + ... + R/pi^lam_r

    Element i has coordinates coords[i]; coordinate k is the canonical code of
    a residue modulo pi^lam_k. Index 0 is the zero element.
    """

    def __init__(self, mtype: ModuleType, cap: Optional[int] = None):
        self.type = mtype
        self.ring = mtype.ring
        self.cap = cap if cap is not None else config.MODULE_CAP
        if mtype.size > self.cap:
            raise ResourceLimitError(f"|M| = {mtype.size} exceeds module cap {self.cap}")
        q = self.ring.q
        self.moduli = [q ** a for a in mtype.lam]
        self.strides = []
        stride = 1
        for m in self.moduli:
            self.strides.append(stride)
            stride *= m
        self.size = stride

    def __repr__(self):
        return f"ConcreteModule({self.type.short} over {self.ring})"

    def __len__(self):
        return self.size

    @cached_property
    def coords(self) -> np.ndarray:
        idx = np.arange(self.size, dtype=np.int64)
        out = np.zeros((self.size, len(self.moduli)), dtype=np.int64)
        for k, (m, s) in enumerate(zip(self.moduli, self.strides)):
            out[:, k] = (idx // s) % m
        return out

    def index_of(self, coords: Sequence[int]) -> int:
        return int(sum((int(c) % m) * s for c, m, s in zip(coords, self.moduli, self.strides)))

    def _index_array(self, coord_array: np.ndarray) -> np.ndarray:
        out = np.zeros(coord_array.shape[:-1], dtype=np.int64)
        for k, (m, s) in enumerate(zip(self.moduli, self.strides)):
            out += (coord_array[..., k] % m) * s
        return out

    @cached_property
    def add_table(self) -> np.ndarray:
        c = self.coords
        summed = np.stack(
            [self.ring.vadd(c[:, None, k], c[None, :, k]) for k in range(len(self.moduli))], axis=-1
        ) if self.moduli else np.zeros((self.size, self.size, 0), dtype=np.int64)
        return self._index_array(summed)

    @cached_property
    def neg_table(self) -> np.ndarray:
        c = self.coords
        if not self.moduli:
            return np.zeros(1, dtype=np.int64)
        negated = np.stack([self.ring.vneg(c[:, k]) for k in range(len(self.moduli))], axis=-1)
        return self._index_array(negated)

    @cached_property
    def act_table(self) -> np.ndarray:
        """act_table[r, i] = index of r * m_i"""
        c = self.coords
        r = np.arange(self.ring.size, dtype=np.int64)
        if not self.moduli:
            return np.zeros((self.ring.size, 1), dtype=np.int64)
        prod_ = np.stack(
            [self.ring.vmul(r[:, None], c[None, :, k]) for k in range(len(self.moduli))], axis=-1
        )
        return self._index_array(prod_)

    def add(self, i: int, j: int) -> int:
        return int(self.add_table[i, j])

    def neg(self, i: int) -> int:
        return int(self.neg_table[i])

    def act(self, r: int, i: int) -> int:
        return int(self.act_table[r, i])

    def elements(self) -> range:
        return range(self.size)

    def generators(self) -> List[int]:
        """Unit vectors: a minimal R-module generating set"""
        return [self.index_of([1 if j == k else 0 for j in range(len(self.moduli))])
                for k in range(len(self.moduli))]

    def additive_generators(self) -> List[int]:
        gens = []
        for k in range(len(self.moduli)):
            for g in self.ring.additive_generators():
                if g % self.moduli[k]:
                    gens.append(self.index_of([g if j == k else 0 for j in range(len(self.moduli))]))
        return gens

    def order(self, i: int) -> int:
        """Additive order of element i"""
        n, x = 1, i
        while x != 0:
            x = self.add(x, i)
            n += 1
        return n

    def annihilated_by(self, j: int) -> frozenset:
        """M[pi^j] = {m : pi^j m = 0}"""
        col = self.act_table[self.ring.pi_power(j)]
        return frozenset(np.flatnonzero(col == 0).tolist())

    def pi_power_image(self, j: int) -> frozenset:
        """pi^j M"""
        return frozenset(np.unique(self.act_table[self.ring.pi_power(j)]).tolist())

    # -- closures -------------------------------------------------------------

    def subgroup_closure(self, seed: Iterable[int], base: Optional[Iterable[int]] = None) -> frozenset:
        """Smallest subgroup containing base (assumed a subgroup) and seed"""
        current = set(base) if base is not None else {0}
        current.add(0)
        for x in seed:
            current = self._join_cyclic(current, int(x))
        return frozenset(current)

    def _join_cyclic(self, group: set, x: int) -> set:
        if x in group:
            return group
        members = np.fromiter(group, dtype=np.int64)
        out = set(group)
        y = x
        while y not in group:
            out.update(self.add_table[members, y].tolist())
            y = self.add(y, x)
        return out

    def submodule_closure(self, seed: Iterable[int], base: Optional[Iterable[int]] = None) -> frozenset:
        ring_gens = self.ring.additive_generators()
        spread = [self.act(g, int(x)) for x in seed for g in ring_gens]
        return self.subgroup_closure(spread, base)

    def coset_labels(self, subgroup: Iterable[int]) -> np.ndarray:
        """labels[x] = least element of x + S"""
        key = frozenset(subgroup)
        cache = self.__dict__.setdefault("_coset_cache", {})
        if key not in cache:
            members = np.fromiter(key, dtype=np.int64)
            cache[key] = self.add_table[:, members].min(axis=1)
        return cache[key]

    def is_submodule(self, elements: Iterable[int]) -> bool:
        s = frozenset(elements)
        members = np.fromiter(s, dtype=np.int64)
        for g in self.ring.additive_generators():
            if not set(self.act_table[g, members].tolist()) <= s:
                return False
        return True

    # -- enumeration ------------------------------------------------------------

    def enumerate_subgroups(self, budget: Optional[int] = None) -> List[Subgroup]:
        """All additive subgroups, each flagged with whether it is an R-submodule"""
        found = self._enumerate(self.subgroup_closure, budget)
        return [Subgroup(s, self.is_submodule(s)) for s in found]

    def enumerate_submodules(self, budget: Optional[int] = None) -> List[Subgroup]:
        found = self._enumerate(self.submodule_closure, budget)
        return [Subgroup(s, True) for s in found]

    def _enumerate(self, closure, budget: Optional[int]) -> List[frozenset]:
        budget = budget if budget is not None else config.ENUMERATION_BUDGET
        zero = frozenset([0])
        found = {zero}
        frontier = [zero]
        while frontier:
            nxt = []
            for s in frontier:
                seen_cosets = set()
                members = np.fromiter(s, dtype=np.int64)
                for x in range(self.size):
                    if x in s or x in seen_cosets:
                        continue
                    seen_cosets.update(self.add_table[members, x].tolist())
                    bigger = closure([x], s)
                    if bigger not in found:
                        found.add(bigger)
                        nxt.append(bigger)
                        if len(found) > budget:
                            raise ResourceLimitError(
                                f"More than {budget} subgroups in {self}; raise CHAIN_ENUMERATION_BUDGET")
            frontier = nxt
        logger.debug("Enumerated %d subsets of %s", len(found), self)
        return sorted(found, key=lambda s: (len(s), sorted(s)))

    # -- isomorphism types ---------------------------------------------------------

    def module_type_of(self, submodule: Iterable[int]) -> ModuleType:
        """Type of a submodule N from the sizes |pi^j N|"""
        n = np.fromiter(frozenset(submodule), dtype=np.int64)
        sizes = [len(set(self.act_table[self.ring.pi_power(j), n].tolist())) for j in range(self.ring.e + 1)]
        return self._type_from_sizes(sizes)

    def quotient_type(self, submodule: Iterable[int]) -> ModuleType:
        """Type of M/N from |pi^j M + N| / |N|"""
        N = frozenset(submodule)
        sizes = []
        for j in range(self.ring.e + 1):
            joined = self.subgroup_closure(self.pi_power_image(j), N)
            sizes.append(len(joined) // len(N))
        return self._type_from_sizes(sizes)

    def _type_from_sizes(self, sizes: List[int]) -> ModuleType:
        q = self.ring.q
        conj = []
        for j in range(self.ring.e):
            ratio = sizes[j] // sizes[j + 1]
            c = 0
            while ratio > 1:
                ratio //= q
                c += 1
            conj.append(c)
        lam = [sum(1 for c in conj if c >= i) for i in range(1, (conj[0] if conj else 0) + 1)]
        return ModuleType(self.ring, tuple(lam))

    def homomorphisms_from_free(self, l: int):
        """Homomorphisms R^l -> M are tuples of l elements"""
        return product(range(self.size), repeat=l)

    def generates(self, elements: Sequence[int]) -> bool:
        """Nakayama: elements generate M iff their residues span M/mM"""
        field = self.ring.residue_field
        if not self.moduli:
            return True
        rows = [[self.ring.residue(int(c)) for c in self.coords[x]] for x in elements]
        return fq_rank(rows, field) == len(self.moduli) if rows else False


def aut_count_bruteforce(A: ModuleType, cap: Optional[int] = None) -> int:
    """Count automorphisms by enumerating images of the generators"""
    M = ConcreteModule(A, cap=cap)
    candidates = [sorted(M.annihilated_by(a)) for a in A.lam]
    total = 0
    for images in product(*candidates):
        if M.generates(images):
            total += 1
    return total


def hom_count_bruteforce(A: ModuleType, B: ModuleType) -> int:
    """Generator images of A that respect the relations pi^a_i g_i = 0"""
    MB = ConcreteModule(B)
    count = 1
    for a in A.lam:
        count *= len(MB.annihilated_by(a))
    return count


def sur_count_bruteforce(A: ModuleType, B: ModuleType) -> int:
    MB = ConcreteModule(B)
    candidates = [sorted(MB.annihilated_by(a)) for a in A.lam]
    return sum(1 for images in product(*candidates) if MB.generates(images))


class SubmoduleLattice:
    """Submodules of a ConcreteModule ordered by inclusion, with a memoised Moebius function"""

    def __init__(self, module: ConcreteModule, submodules: Optional[List[Subgroup]] = None):
        self.module = module
        self.submodules = submodules if submodules is not None else module.enumerate_submodules()
        self.index: Dict[frozenset, int] = {s.elements: i for i, s in enumerate(self.submodules)}
        self._mobius: Dict[Tuple[int, int], int] = {}
        self._types: Dict[int, ModuleType] = {}
        self._quotients: Dict[int, ModuleType] = {}

    def __len__(self):
        return len(self.submodules)

    def __getitem__(self, i: int) -> Subgroup:
        return self.submodules[i]

    @property
    def bottom(self) -> int:
        return 0

    @property
    def top(self) -> int:
        return len(self.submodules) - 1

    def leq(self, i: int, j: int) -> bool:
        return self.submodules[i].elements <= self.submodules[j].elements

    @cached_property
    def up_sets(self) -> List[List[int]]:
        """up_sets[i] = indices of submodules containing submodule i"""
        n = len(self)
        return [[j for j in range(n) if self.leq(i, j)] for i in range(n)]

    def mobius(self, i: int, j: int) -> int:
        key = (i, j)
        if key in self._mobius:
            return self._mobius[key]
        if i == j:
            value = 1
        elif not self.leq(i, j):
            value = 0
        else:
            value = -sum(self.mobius(i, k) for k in self.up_sets[i] if k != j and self.leq(k, j))
        self._mobius[key] = value
        return value

    def type_of(self, i: int) -> ModuleType:
        if i not in self._types:
            self._types[i] = self.module.module_type_of(self.submodules[i].elements)
        return self._types[i]

    def quotient_type(self, i: int) -> ModuleType:
        if i not in self._quotients:
            self._quotients[i] = self.module.quotient_type(self.submodules[i].elements)
        return self._quotients[i]

    def join(self, i: int, j: int) -> int:
        joined = self.module.subgroup_closure(self.submodules[j].elements, self.submodules[i].elements)
        return self.index[joined]

    def find(self, elements: Iterable[int]) -> int:
        key = frozenset(elements)
        if key not in self.index:
            raise UsageError("Not a submodule of this module")
        return self.index[key]

    def describe(self, i: int) -> List[Tuple[int, ...]]:
        """A generating set of submodule i as coordinate tuples"""
        gens: List[int] = []
        current = frozenset([0])
        target = self.submodules[i].elements
        for x in sorted(target):
            if x not in current:
                gens.append(x)
                current = self.module.submodule_closure([x], current)
            if current == target:
                break
        return [tuple(int(c) for c in self.module.coords[g]) for g in gens]
