"""
Exact signed measures on a finite module M over a chain ring

A measure nu splits into orthogonal pieces nu_N, one per submodule N, where
nu_N is constant on N-cosets and is killed by averaging over any submodule
strictly larger than N. The pieces come from Moebius inversion of
proj_N nu = sum_{N' >= N} nu_N' over the submodule lattice. Only N with
M/N cyclic carry a nonzero piece, since for a chain ring the dualizing
module is R itself and its submodules are the cyclic modules.
"""
import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from sympy import QQ
from sympy.polys.matrices import DomainMatrix

import config
from errors import UsageError
from modules import ConcreteModule, ModuleType, SubmoduleLattice
from ring import Ideal, RingSpec

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SignedMeasure:
    module: ConcreteModule
    weights: Tuple[Fraction, ...]

    def __post_init__(self):
        if len(self.weights) != self.module.size:
            raise UsageError(f"Measure has {len(self.weights)} weights for a module of size {self.module.size}")

    @classmethod
    def from_weights(cls, module: ConcreteModule, weights: Sequence) -> "SignedMeasure":
        return cls(module, tuple(Fraction(w) for w in weights))

    @classmethod
    def zero(cls, module: ConcreteModule) -> "SignedMeasure":
        return cls(module, (Fraction(0),) * module.size)

    @classmethod
    def delta(cls, module: ConcreteModule, index: int = 0) -> "SignedMeasure":
        w = [Fraction(0)] * module.size
        w[index] = Fraction(1)
        return cls(module, tuple(w))

    @classmethod
    def uniform(cls, module: ConcreteModule) -> "SignedMeasure":
        return cls(module, (Fraction(1, module.size),) * module.size)

    def _check(self, other: "SignedMeasure"):
        if other.module is not self.module and (other.module.type != self.module.type):
            raise UsageError("Measures live on different modules")

    def __add__(self, other: "SignedMeasure") -> "SignedMeasure":
        self._check(other)
        return SignedMeasure(self.module, tuple(a + b for a, b in zip(self.weights, other.weights)))

    def __sub__(self, other: "SignedMeasure") -> "SignedMeasure":
        self._check(other)
        return SignedMeasure(self.module, tuple(a - b for a, b in zip(self.weights, other.weights)))

    def scale(self, c) -> "SignedMeasure":
        c = Fraction(c)
        return SignedMeasure(self.module, tuple(c * a for a in self.weights))

    @property
    def mass(self) -> Fraction:
        return sum(self.weights, Fraction(0))

    def is_zero(self) -> bool:
        return not any(self.weights)

    def is_probability(self) -> bool:
        return all(w >= 0 for w in self.weights) and self.mass == 1

    def l1_norm(self) -> Fraction:
        return sum((abs(w) for w in self.weights), Fraction(0))

    def l2_squared(self) -> Fraction:
        return sum((w * w for w in self.weights), Fraction(0))

    def l2_norm(self) -> float:
        return float(self.l2_squared()) ** 0.5

    def linf_norm(self) -> Fraction:
        return max((abs(w) for w in self.weights), default=Fraction(0))

    def inner(self, other: "SignedMeasure") -> Fraction:
        self._check(other)
        return sum((a * b for a, b in zip(self.weights, other.weights)), Fraction(0))

    def tv_distance(self, other: "SignedMeasure") -> Fraction:
        return (self - other).l1_norm() / 2

    def pushforward(self, subgroup) -> Dict[int, Fraction]:
        """Law on M/S keyed by coset label"""
        labels = self.module.coset_labels(subgroup)
        out: Dict[int, Fraction] = {}
        for x, w in enumerate(self.weights):
            if w:
                key = int(labels[x])
                out[key] = out.get(key, Fraction(0)) + w
        return out


def inner_product(mu: SignedMeasure, nu: SignedMeasure) -> Fraction:
    return mu.inner(nu)


def tv_distance(mu: SignedMeasure, nu: SignedMeasure) -> Fraction:
    return mu.tv_distance(nu)


def average_over(nu: SignedMeasure, subgroup) -> SignedMeasure:
    """Spread the mass of each S-coset evenly over the coset"""
    S = frozenset(subgroup)
    labels = nu.module.coset_labels(S)
    totals = nu.pushforward(S)
    size = len(S)
    return SignedMeasure(nu.module, tuple(totals.get(int(labels[x]), Fraction(0)) / size
                                          for x in range(nu.module.size)))


def proj(N, nu: SignedMeasure) -> SignedMeasure:
    """proj_N nu: average nu over the submodule N"""
    elements = N.elements if hasattr(N, "elements") else frozenset(N)
    if not nu.module.is_submodule(elements) or 0 not in elements:
        raise UsageError("proj needs a submodule")
    return average_over(nu, elements)


@dataclass(frozen=True)
class ChiClass:
    """A class of surjections M -> omega_I up to units; images of the generators in R"""
    images: Tuple[int, ...]
    kernel: frozenset
    size: int


@dataclass
class DecompositionComponent:
    kernel_index: int
    kernel: frozenset
    quotient: ModuleType
    component: SignedMeasure
    chi_class: Optional[ChiClass] = None

    @property
    def is_fourier(self) -> bool:
        return self.quotient.is_cyclic()


@dataclass(frozen=True)
class DualizingData:
    """omega = R; omega_I = Hom(R/I, omega) is pi^(e-j) R for I = (pi^j)"""
    ring: RingSpec

    def omega(self, j: int) -> frozenset:
        return Ideal(self.ring, self.ring.e - j).elements()

    def size(self, j: int) -> int:
        return len(self.omega(j))

    def check_duality(self) -> bool:
        """|omega_I| = |R/I| and I -> omega_I reverses inclusion"""
        ring = self.ring
        for j in range(ring.e + 1):
            if self.size(j) != Ideal(ring, j).quotient_size:
                return False
            if j and not self.omega(j - 1) < self.omega(j):
                return False
        return True


class MeasureSpace:
    """Signed measures on M together with the submodule lattice they decompose over"""

    def __init__(self, module: ConcreteModule, lattice: Optional[SubmoduleLattice] = None):
        self.module = module
        self.ring = module.ring
        self.lattice = lattice if lattice is not None else SubmoduleLattice(module)
        self._chi: Dict[int, List[ChiClass]] = {}

    @classmethod
    def of(cls, mtype: ModuleType, cap: Optional[int] = None) -> "MeasureSpace":
        return cls(ConcreteModule(mtype, cap=cap))

    def projections(self, nu: SignedMeasure) -> List[SignedMeasure]:
        return [average_over(nu, s.elements) for s in self.lattice.submodules]

    def decompose(self, nu: SignedMeasure) -> List[DecompositionComponent]:
        lat = self.lattice
        projected = self.projections(nu)
        out = []
        for i, s in enumerate(lat.submodules):
            acc = [Fraction(0)] * self.module.size
            for k in lat.up_sets[i]:
                mu = lat.mobius(i, k)
                if mu:
                    for x, w in enumerate(projected[k].weights):
                        if w:
                            acc[x] += mu * w
            quotient = lat.quotient_type(i)
            chi = self.chi_class_of(i) if quotient.is_cyclic() else None
            out.append(DecompositionComponent(i, s.elements, quotient, SignedMeasure(self.module, tuple(acc)), chi))
        return out

    # -- characters M -> omega --------------------------------------------------

    def chi_classes(self, j: int) -> List[ChiClass]:
        """Sur(M, omega_I)/R* for I = (pi^j), one lexicographically least representative per class"""
        if j in self._chi:
            return self._chi[j]
        ring, M = self.ring, self.module
        if not 0 <= j <= ring.e:
            raise UsageError(f"Ideal exponent {j} outside [0, {ring.e}]")
        target = sorted(DualizingData(ring).omega(j))
        generator_val = ring.e - j
        options = []
        for lam in M.type.lam:
            # images must be killed by pi^lam
            options.append([y for y in target if ring.mul(ring.pi_power(lam), y) == 0])
        classes: Dict[frozenset, List[Tuple[int, ...]]] = {}
        coords = M.coords
        for images in _product_lists(options):
            if j and not any(ring.valuation(y) == generator_val for y in images):
                continue
            values = [self._evaluate(coords[x], images) for x in range(M.size)]
            kernel = frozenset(x for x, val in enumerate(values) if val == 0)
            classes.setdefault(kernel, []).append(images)
        result = [ChiClass(min(reps), kernel, len(reps))
                  for kernel, reps in sorted(classes.items(), key=lambda kv: min(kv[1]))]
        self._chi[j] = result
        return result

    def _evaluate(self, coords, images) -> int:
        ring = self.ring
        total = 0
        for c, y in zip(coords, images):
            total = ring.add(total, ring.mul(int(c), y))
        return total

    def chi_class_of(self, kernel_index: int) -> Optional[ChiClass]:
        quotient = self.lattice.quotient_type(kernel_index)
        if not quotient.is_cyclic():
            return None
        j = quotient.lam[0] if quotient.lam else 0
        kernel = self.lattice[kernel_index].elements
        return next((c for c in self.chi_classes(j) if c.kernel == kernel), None)

    # -- dimensions ----------------------------------------------------------------

    def space_dimension(self, kernel_index: int, method: str = "formula") -> int:
        """dim V(M, N)

        formula: |(R/I)*| when M/N = R/I is cyclic, else 0
        trace: sum_{N' >= N} mu(N, N') |M/N'|, the trace of the projector onto V(M, N)
        construct: rank computation on N-coset-constant measures killed by proj over covers of N
        """
        lat = self.lattice
        if method == "formula":
            return fourier_dimension(lat.quotient_type(kernel_index))
        if method == "trace":
            return sum(lat.mobius(kernel_index, k) * (self.module.size // len(lat[k]))
                       for k in lat.up_sets[kernel_index])
        if method == "construct":
            return self._constructed_dimension(kernel_index)
        raise UsageError(f"Unknown dimension method {method!r}")

    def _constructed_dimension(self, kernel_index: int) -> int:
        lat, M = self.lattice, self.module
        labels = M.coset_labels(lat[kernel_index].elements)
        cosets = sorted(set(int(c) for c in labels))
        position = {c: i for i, c in enumerate(cosets)}
        free = len(cosets)
        covers = [k for k in lat.up_sets[kernel_index] if k != kernel_index
                  and not any(k2 != kernel_index and k2 != k and lat.leq(k2, k)
                              for k2 in lat.up_sets[kernel_index])]
        if not covers:
            return free
        rows = []
        for k in covers:
            big = M.coset_labels(lat[k].elements)
            big_cosets = sorted(set(int(c) for c in big))
            # proj over N' of an N-coset indicator is constant on N'-cosets, so one row per N'-coset
            for bc in big_cosets:
                row = [QQ(0)] * free
                for x in range(M.size):
                    if big[x] == bc:
                        row[position[int(labels[x])]] += QQ(1)
                rows.append(row)
        constraint = DomainMatrix(rows, (len(rows), free), QQ)
        return free - constraint.rank()

    def dimension_audit(self, method: str = "formula") -> bool:
        """sum_N dim V(M,N) = |M|"""
        return sum(self.space_dimension(i, method) for i in range(len(self.lattice))) == self.module.size

    # -- isotypic pieces ---------------------------------------------------------

    def isotypic_projection(self, nu: SignedMeasure, j: int) -> SignedMeasure:
        """Component of nu in W(M, IM) for I = (pi^j): proj_{pi^j M} nu - proj_{pi^(j-1) M} nu"""
        M = self.module
        if not 0 <= j <= self.ring.e:
            raise UsageError(f"Ideal exponent {j} outside [0, {self.ring.e}]")
        upper = average_over(nu, M.pi_power_image(j))
        if j == 0:
            return upper
        return upper - average_over(nu, M.pi_power_image(j - 1))

    # -- inequalities --------------------------------------------------------------

    def verify_main_inequality(self, nu: SignedMeasure, j: int,
                               components: Optional[List[DecompositionComponent]] = None) -> "InequalityCheck":
        """(1/|M/IM|) sum_{M/N = omega_I} |nu_N|_1 <= |nu mod I|_2 / sqrt(|(R/I)*|), compared squared"""
        ring, M = self.ring, self.module
        comps = components if components is not None else self.decompose(nu)
        IM = M.pi_power_image(j)
        quotient_size = M.size // len(IM)
        total = sum((c.component.l1_norm() for c in comps
                     if c.quotient.is_cyclic() and (c.quotient.lam[0] if c.quotient.lam else 0) == j),
                    Fraction(0))
        lhs_sq = (total / quotient_size) ** 2
        pushed = nu.pushforward(IM)
        rhs_sq = sum((w * w for w in pushed.values()), Fraction(0)) / Ideal(ring, j).quotient_units()
        return InequalityCheck(lhs_sq, rhs_sq)

    def verify_l1_bound(self, nu: SignedMeasure,
                        components: Optional[List[DecompositionComponent]] = None) -> List["InequalityCheck"]:
        """|nu_chi|_1 <= sqrt(|im chi|) for a probability measure, one check per Fourier component"""
        if not nu.is_probability():
            raise UsageError("The L1 bound is stated for probability measures")
        comps = components if components is not None else self.decompose(nu)
        return [InequalityCheck(c.component.l1_norm() ** 2, Fraction(c.quotient.size), c.kernel_index)
                for c in comps if c.quotient.is_cyclic()]


@dataclass(frozen=True)
class InequalityCheck:
    """lhs <= rhs, held as exact squares"""
    lhs_sq: Fraction
    rhs_sq: Fraction
    kernel_index: Optional[int] = None

    @property
    def holds(self) -> bool:
        return self.lhs_sq <= self.rhs_sq

    @property
    def lhs(self) -> float:
        return float(self.lhs_sq) ** 0.5

    @property
    def rhs(self) -> float:
        return float(self.rhs_sq) ** 0.5


def fourier_dimension(A: ModuleType) -> int:
    """dim V(A, 0): |(R/I)*| when A = R/I, otherwise 0"""
    if not A.is_cyclic():
        return 0
    if not A.lam:
        return 1
    q, j = A.ring.q, A.lam[0]
    return q ** j - q ** (j - 1)


def fourier_module_test(A: ModuleType) -> bool:
    """A embeds in omega = R iff it is cyclic"""
    return A.is_cyclic()


def _product_lists(options: List[List[int]]):
    if not options:
        yield ()
        return
    for head in options[0]:
        for rest in _product_lists(options[1:]):
            yield (head,) + rest


def random_signed_measure(module: ConcreteModule, rng: np.random.Generator, bound: int = 9,
                          denominator: int = 7) -> SignedMeasure:
    nums = rng.integers(-bound, bound + 1, size=module.size)
    return SignedMeasure(module, tuple(Fraction(int(a), denominator) for a in nums))


def random_probability_measure(module: ConcreteModule, rng: np.random.Generator, bound: int = 9,
                               sparsity: float = 0.5) -> SignedMeasure:
    nums = rng.integers(0, bound + 1, size=module.size)
    nums[rng.random(module.size) < sparsity] = 0
    if nums.sum() == 0:
        nums[int(rng.integers(0, module.size))] = 1
    total = int(nums.sum())
    return SignedMeasure(module, tuple(Fraction(int(a), total) for a in nums))


@dataclass
class SweepReport:
    module: str
    ideal: int
    trials: int
    main_violations: int = 0
    l1_violations: int = 0
    reconstruction_failures: int = 0
    orthogonality_failures: int = 0

    @property
    def passed(self) -> bool:
        return not (self.main_violations or self.l1_violations
                    or self.reconstruction_failures or self.orthogonality_failures)


def measure_sweep(space: MeasureSpace, trials: int, rng: np.random.Generator,
                  check_structure: bool = True) -> List[SweepReport]:
    """Random measures through decomposition, the main inequality for every ideal, and the L1 bound"""
    M = space.module
    ideals = list(range(space.ring.e + 1))
    reports = {j: SweepReport(M.type.short, j, trials) for j in ideals}
    for t in config.progress(range(trials), desc=f"measures {M.type.short}"):
        nu = random_signed_measure(M, rng) if t % 2 == 0 else random_probability_measure(M, rng)
        comps = space.decompose(nu)
        if check_structure:
            total = SignedMeasure.zero(M)
            for c in comps:
                total = total + c.component
            if total != nu:
                reports[0].reconstruction_failures += 1
            live = [c.component for c in comps if not c.component.is_zero()]
            for a in range(len(live)):
                for b in range(a + 1, len(live)):
                    if live[a].inner(live[b]) != 0:
                        reports[0].orthogonality_failures += 1
        for j in ideals:
            if not space.verify_main_inequality(nu, j, comps).holds:
                reports[j].main_violations += 1
        if nu.is_probability():
            bad = sum(1 for c in space.verify_l1_bound(nu, comps) if not c.holds)
            reports[0].l1_violations += bad
    logger.info("Swept %d measures on %s", trials, M)
    return [reports[j] for j in ideals]
