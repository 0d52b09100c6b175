"""
Dense matrices over a finite chain ring

Smith normal form for cokernels, lifted Bareiss elimination for determinants,
and the Howell form of a column span (canonical generators plus coset labels).
"""
import logging
from dataclasses import dataclass, field
from itertools import product
from typing import List, Optional, Sequence, Set, Tuple

import numpy as np

from errors import UsageError
from modules import ModuleType
from ring import ZMOD, RingSpec

logger = logging.getLogger(__name__)


class MatrixOverR:
    """An n x m matrix of ring codes"""

    def __init__(self, ring: RingSpec, data, ncols: Optional[int] = None):
        self.ring = ring
        arr = np.array(data, dtype=np.int64)
        if arr.size == 0:
            rows = arr.shape[0] if arr.ndim >= 1 else 0
            arr = np.zeros((rows, ncols or 0), dtype=np.int64)
        if arr.ndim != 2:
            raise UsageError("Matrix data must be two-dimensional")
        if arr.min(initial=0) < 0 or arr.max(initial=0) >= ring.size:
            raise UsageError(f"Matrix entries must be canonical codes in [0, {ring.size})")
        self.data = arr

    @classmethod
    def identity(cls, ring: RingSpec, n: int) -> "MatrixOverR":
        return cls(ring, np.eye(n, dtype=np.int64), ncols=n)

    @classmethod
    def zeros(cls, ring: RingSpec, n: int, m: int) -> "MatrixOverR":
        return cls(ring, np.zeros((n, m), dtype=np.int64), ncols=m)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.data.shape

    @property
    def nrows(self) -> int:
        return self.data.shape[0]

    @property
    def ncols(self) -> int:
        return self.data.shape[1]

    def copy(self) -> "MatrixOverR":
        return MatrixOverR(self.ring, self.data.copy(), ncols=self.ncols)

    def columns(self) -> List[Tuple[int, ...]]:
        return [tuple(int(x) for x in self.data[:, j]) for j in range(self.ncols)]

    def __eq__(self, other):
        return (isinstance(other, MatrixOverR) and self.ring == other.ring
                and self.shape == other.shape and np.array_equal(self.data, other.data))

    def __matmul__(self, other: "MatrixOverR") -> "MatrixOverR":
        if self.ring != other.ring:
            raise UsageError(f"Ring mismatch: {self.ring} vs {other.ring}")
        if self.ncols != other.nrows:
            raise UsageError(f"Shape mismatch: {self.shape} @ {other.shape}")
        ring = self.ring
        n, m = self.nrows, other.ncols
        if ring.kind == ZMOD:
            out = (self.data.astype(object) @ other.data.astype(object)) % ring.size
            return MatrixOverR(ring, out.astype(np.int64).reshape(n, m), ncols=m)
        out = np.zeros((n, m), dtype=np.int64)
        for k in range(self.ncols):
            out = ring.vadd(out, ring.vmul(self.data[:, k:k + 1], other.data[k:k + 1, :]))
        return MatrixOverR(ring, out, ncols=m)

    def to_text(self) -> str:
        return ";".join(",".join(str(int(x)) for x in row) for row in self.data)

    def __str__(self):
        return self.to_text()

    def __repr__(self):
        return f"MatrixOverR({self.ring}, {self.to_text()!r})"


def parse_matrix(text: str, ring: RingSpec) -> MatrixOverR:
    """Rows separated by ';', entries by ',', e.g. "2,3;0,2" """
    try:
        rows = [[int(x) for x in row.split(",")] for row in text.replace(" ", "").split(";") if row]
    except ValueError as e:
        raise UsageError(f"Cannot parse matrix {text!r}") from e
    if not rows or any(len(r) != len(rows[0]) for r in rows):
        raise UsageError(f"Matrix {text!r} is empty or ragged")
    return MatrixOverR(ring, rows)


@dataclass
class SmithForm:
    exponents: Tuple[int, ...]
    diagonal: MatrixOverR
    U: Optional[MatrixOverR] = None
    V: Optional[MatrixOverR] = None


def smith_normal_form(M: MatrixOverR, transforms: bool = False) -> SmithForm:
    """Diagonalize M as U M V = diag(pi^a_1, ..., pi^a_k), a_1 <= ... <= a_k

    The pivot is an entry of minimal valuation in the trailing block, leftmost
    column first and then topmost row; it divides everything else there.
    """
    ring = M.ring
    A = M.data.copy()
    n, m = A.shape
    U = np.eye(n, dtype=np.int64) if transforms else None
    V = np.eye(m, dtype=np.int64) if transforms else None
    exponents = []
    vals = np.vectorize(ring.valuation, otypes=[np.int64])

    for t in range(min(n, m)):
        block = A[t:, t:]
        bv = vals(block) if block.size else block
        v = int(bv.min())
        if v >= ring.e:
            exponents.extend([ring.e] * (min(n, m) - t))
            break
        # leftmost column, then topmost row
        cols = np.flatnonzero((bv == v).any(axis=0))
        c = int(cols[0])
        r = int(np.flatnonzero(bv[:, c] == v)[0])
        pr, pc = t + r, t + c
        if pr != t:
            A[[t, pr]] = A[[pr, t]]
            if transforms:
                U[[t, pr]] = U[[pr, t]]
        if pc != t:
            A[:, [t, pc]] = A[:, [pc, t]]
            if transforms:
                V[:, [t, pc]] = V[:, [pc, t]]
        unit, _ = ring.unit_part(int(A[t, t]))
        inv = ring.inverse(unit)
        A[t] = ring.vmul(inv, A[t])
        if transforms:
            U[t] = ring.vmul(inv, U[t])
        for i in range(t + 1, n):
            b = int(A[i, t])
            if b:
                f = ring.div_pi_power(b, v)
                A[i] = ring.vsub(A[i], ring.vmul(f, A[t]))
                if transforms:
                    U[i] = ring.vsub(U[i], ring.vmul(f, U[t]))
        for j in range(t + 1, m):
            b = int(A[t, j])
            if b:
                f = ring.div_pi_power(b, v)
                A[:, j] = ring.vsub(A[:, j], ring.vmul(f, A[:, t]))
                if transforms:
                    V[:, j] = ring.vsub(V[:, j], ring.vmul(f, V[:, t]))
        exponents.append(v)

    return SmithForm(
        exponents=tuple(exponents),
        diagonal=MatrixOverR(ring, A, ncols=m),
        U=MatrixOverR(ring, U, ncols=n) if transforms else None,
        V=MatrixOverR(ring, V, ncols=m) if transforms else None,
    )


def cokernel(M: MatrixOverR) -> ModuleType:
    """R^n / column span of M"""
    exps = smith_normal_form(M).exponents
    n, m = M.shape
    free = [M.ring.e] * (n - min(n, m))
    return ModuleType(M.ring, tuple(list(exps) + free))


# -- determinants ---------------------------------------------------------------

class _IntegerCover:
    """Z as the Euclidean cover of Z/p^e"""

    def __init__(self, ring: RingSpec):
        self.ring = ring
        self.zero = 0

    def lift(self, code: int):
        return int(code)

    def mul(self, a, b):
        return a * b

    def sub(self, a, b):
        return a - b

    def neg(self, a):
        return -a

    def divexact(self, a, b):
        return a // b

    def is_zero(self, a) -> bool:
        return a == 0

    def reduce(self, a) -> int:
        return a % self.ring.size


class _PolyCover:
    """F_q[t] as the Euclidean cover of F_q[t]/(t^e); polynomials as trimmed coefficient lists"""

    def __init__(self, ring: RingSpec):
        self.ring = ring
        self.F = ring.residue_field
        self.zero = []

    def lift(self, code: int):
        return self._trim(list(self.ring.coefficients(code)))

    @staticmethod
    def _trim(a):
        while a and a[-1] == 0:
            a.pop()
        return a

    def mul(self, a, b):
        if not a or not b:
            return []
        F = self.F
        out = [0] * (len(a) + len(b) - 1)
        for i, x in enumerate(a):
            if x:
                for j, y in enumerate(b):
                    if y:
                        out[i + j] = F.add(out[i + j], F.mul(x, y))
        return self._trim(out)

    def sub(self, a, b):
        F = self.F
        size = max(len(a), len(b))
        a = a + [0] * (size - len(a))
        b = b + [0] * (size - len(b))
        return self._trim([F.sub(x, y) for x, y in zip(a, b)])

    def neg(self, a):
        return [self.F.neg(x) for x in a]

    def divexact(self, a, b):
        F = self.F
        a = list(a)
        if len(a) < len(b):
            return []
        inv_lead = F.inv(b[-1])
        quot = [0] * (len(a) - len(b) + 1)
        for i in range(len(a) - len(b), -1, -1):
            c = F.mul(a[i + len(b) - 1], inv_lead)
            quot[i] = c
            if c:
                for j, y in enumerate(b):
                    a[i + j] = F.sub(a[i + j], F.mul(c, y))
        return self._trim(quot)

    def is_zero(self, a) -> bool:
        return not a

    def reduce(self, a) -> int:
        coeffs = (list(a) + [0] * self.ring.e)[:self.ring.e]
        code = 0
        for c in reversed(coeffs):
            code = code * self.ring.q + c
        return code


def determinant(M: MatrixOverR) -> int:
    """Exact determinant by fraction-free elimination over the Euclidean cover, reduced at the end"""
    n, m = M.shape
    if n != m:
        raise UsageError(f"Determinant needs a square matrix, got {n}x{m}")
    ring = M.ring
    if n == 0:
        return 1 % ring.size
    cover = _IntegerCover(ring) if ring.kind == ZMOD else _PolyCover(ring)
    a = [[cover.lift(int(x)) for x in row] for row in M.data]
    sign_flip = False
    prev = cover.lift(1)
    for k in range(n - 1):
        if cover.is_zero(a[k][k]):
            swap = next((i for i in range(k + 1, n) if not cover.is_zero(a[i][k])), None)
            if swap is None:
                return 0
            a[k], a[swap] = a[swap], a[k]
            sign_flip = not sign_flip
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                num = cover.sub(cover.mul(a[i][j], a[k][k]), cover.mul(a[i][k], a[k][j]))
                a[i][j] = cover.divexact(num, prev)
        prev = a[k][k]
    det = a[n - 1][n - 1]
    if sign_flip:
        det = cover.neg(det)
    return cover.reduce(det)


def is_invertible(M: MatrixOverR) -> bool:
    return M.nrows == M.ncols and M.ring.is_unit(determinant(M))


def random_invertible(ring: RingSpec, n: int, rng: np.random.Generator) -> MatrixOverR:
    """Uniform over GL_n(R): resample until the reduction mod pi is invertible"""
    while True:
        M = MatrixOverR(ring, rng.integers(0, ring.size, size=(n, n)), ncols=n)
        if is_invertible(M):
            return M


# -- column spans -----------------------------------------------------------------

@dataclass
class HowellForm:
    """Howell form of the column span of an n x m matrix

    Each generator g has a pivot position c with g[c] = pi^v and zeros above it;
    entries of earlier generators at c are reduced modulo pi^v. Two matrices have
    equal HowellForm.key iff their column spans are equal.
    """
    ring: RingSpec
    n: int
    generators: List[List[int]] = field(default_factory=list)
    pivots: List[Tuple[int, int]] = field(default_factory=list)

    @classmethod
    def of(cls, M: MatrixOverR) -> "HowellForm":
        ring = M.ring
        n = M.nrows
        pending = [list(col) for col in M.columns() if any(col)]
        gens: List[List[int]] = []
        pivots: List[Tuple[int, int]] = []
        for c in range(n):
            live = [w for w in pending if w[c]]
            if not live:
                continue
            vals = [ring.valuation(w[c]) for w in live]
            v = min(vals)
            chosen = live[vals.index(v)]
            w = chosen
            unit, _ = ring.unit_part(w[c])
            w = _scale(ring, ring.inverse(unit), w)
            rest = []
            for x in pending:
                if x is chosen:
                    continue
                if x[c]:
                    x = _axpy(ring, ring.neg(ring.div_pi_power(x[c], v)), w, x)
                if any(x):
                    rest.append(x)
            aug = _scale(ring, ring.pi_power(ring.e - v), w)
            if any(aug):
                rest.append(aug)
            pending = rest
            gens.append(w)
            pivots.append((c, v))
        form = cls(ring, n, gens, pivots)
        form._back_reduce()
        return form

    def _back_reduce(self):
        ring = self.ring
        q = ring.q
        for k, (c, v) in enumerate(self.pivots):
            w = self.generators[k]
            for j in range(k):
                a = self.generators[j][c]
                s = a // q ** v
                if s:
                    self.generators[j] = _axpy(ring, ring.neg(s), w, self.generators[j])

    def reduce(self, x: Sequence[int]) -> Tuple[int, ...]:
        """Canonical representative of the coset x + span"""
        ring = self.ring
        q = ring.q
        x = [int(a) for a in x]
        for (c, v), w in zip(self.pivots, self.generators):
            s = x[c] // q ** v
            if s:
                x = _axpy(ring, ring.neg(s), w, x)
        return tuple(x)

    def contains(self, x: Sequence[int]) -> bool:
        return not any(self.reduce(x))

    @property
    def size(self) -> int:
        """Cardinality of the span"""
        q, e = self.ring.q, self.ring.e
        total = 1
        for _, v in self.pivots:
            total *= q ** (e - v)
        return total

    @property
    def quotient_size(self) -> int:
        return self.ring.size ** self.n // self.size

    @property
    def matrix(self) -> MatrixOverR:
        """Generators as the columns of an n x k matrix"""
        data = np.array(self.generators, dtype=np.int64).T if self.generators else np.zeros((self.n, 0))
        return MatrixOverR(self.ring, data.reshape(self.n, len(self.generators)), ncols=len(self.generators))

    @property
    def key(self) -> str:
        if not self.generators:
            return "0"
        return ";".join(",".join(str(a) for a in g) for g in self.generators)


def _scale(ring: RingSpec, s: int, w: List[int]) -> List[int]:
    return [ring.mul(s, a) for a in w]


def _axpy(ring: RingSpec, s: int, w: List[int], x: List[int]) -> List[int]:
    """x + s * w"""
    return [ring.add(b, ring.mul(s, a)) for a, b in zip(w, x)]


def howell_form(M: MatrixOverR) -> MatrixOverR:
    return HowellForm.of(M).matrix


def span_size(M: MatrixOverR) -> int:
    return HowellForm.of(M).size


def coset_representative(form: HowellForm, x: Sequence[int]) -> Tuple[int, ...]:
    return form.reduce(x)


def brute_force_span(M: MatrixOverR) -> Set[Tuple[int, ...]]:
    """All R-combinations of the columns of M"""
    ring = M.ring
    cols = M.columns()
    n = M.nrows
    span = set()
    for coeffs in product(range(ring.size), repeat=len(cols)):
        v = [0] * n
        for r, col in zip(coeffs, cols):
            if r:
                v = _axpy(ring, r, list(col), v)
        span.add(tuple(v))
    if not cols:
        span.add(tuple([0] * n))
    return span
