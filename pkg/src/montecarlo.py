"""
Reproducible sampling of random matrices over a chain ring

Samples are drawn in fixed-size blocks; block b of model m at size n uses the
stream PCG64(SeedSequence(seed, spawn_key=(n, m, b))). Histograms therefore do
not depend on how blocks are spread over worker processes.
"""
import logging
import math
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from itertools import product
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

import config
from equidist import EntryDistribution
from errors import InsufficientSignalError, ResourceLimitError, UsageError
from matrix import HowellForm, MatrixOverR, cokernel, determinant
from modules import parse_module_type
from ring import RingSpec, format_ring
from theory_dist import haar_limit_prob

logger = logging.getLogger(__name__)

IID, HAAR, SWAP = "iid", "haar", "swap"
MODEL_IDS = {IID: 0, HAAR: 1, SWAP: 2}


@dataclass
class ExperimentPlan:
    ring: RingSpec
    xi: EntryDistribution
    u: int = 0
    n_values: Tuple[int, ...] = (2,)
    samples: int = 1000
    invariant: str = "coker"
    seed: int = config.DEFAULT_SEED
    workers: int = config.DEFAULT_WORKERS
    block: int = config.SAMPLE_BLOCK

    def __post_init__(self):
        self.n_values = tuple(self.n_values)
        self.validate()

    def validate(self):
        if self.samples < 1:
            raise UsageError("samples must be >= 1")
        if self.workers < 1 or self.block < 1:
            raise UsageError("workers and block size must be >= 1")
        if self.invariant not in config.INVARIANTS:
            raise UsageError(f"invariant must be one of {config.INVARIANTS}")
        if self.xi.ring != self.ring:
            raise UsageError("Entry law and plan use different rings")
        for n in self.n_values:
            if n < 1 or n + self.u < 0:
                raise UsageError(f"Need n >= 1 and n + u >= 0 (n={n}, u={self.u})")
        if "det" in self.invariant and self.u != 0:
            raise UsageError("Determinants need square matrices (u = 0)")

    def to_dict(self) -> dict:
        return {
            "ring": format_ring(self.ring),
            "entry": self.xi.to_text(),
            "u": self.u,
            "n_values": list(self.n_values),
            "samples": self.samples,
            "invariant": self.invariant,
            "seed": self.seed,
            "workers": self.workers,
            "block": self.block,
            "rng": config.RNG_IDENTITY,
        }


@dataclass
class EmpiricalDistribution:
    counts: Dict[str, int]
    total: int
    blocks: List[Dict[str, int]] = field(default_factory=list)

    def probability(self, key: str) -> float:
        return self.counts.get(key, 0) / self.total if self.total else 0.0

    def standard_error(self, key: str) -> float:
        p = self.probability(key)
        return math.sqrt(p * (1 - p) / self.total) if self.total else 0.0

    def histogram(self) -> List[dict]:
        items = sorted(self.counts.items(), key=lambda kv: (-kv[1], kv[0]))
        return [{"class": k, "count": c} for k, c in items]


def stream(seed: int, n: int, model: str, block: int) -> np.random.Generator:
    ss = np.random.SeedSequence(seed, spawn_key=(n, MODEL_IDS[model], block))
    return np.random.Generator(np.random.PCG64(ss))


def sample_matrix(ring: RingSpec, n: int, u: int, xi: Optional[EntryDistribution],
                  rng: np.random.Generator) -> MatrixOverR:
    """n x (n+u) matrix with independent entries; xi=None means Haar"""
    if n < 1 or n + u < 0:
        raise UsageError(f"Need n >= 1 and n + u >= 0 (n={n}, u={u})")
    m = n + u
    if xi is None:
        data = rng.integers(0, ring.size, size=(n, m), dtype=np.int64)
    else:
        data = xi.sample(rng, (n, m))
    return MatrixOverR(ring, data, ncols=m)


def invariant_key(M: MatrixOverR, invariant: str) -> str:
    if invariant == "coker":
        return cokernel(M).short
    if invariant == "det":
        return str(determinant(M))
    if invariant == "span":
        return HowellForm.of(M).key
    if invariant == "coker×det":
        return f"{cokernel(M).short}|{determinant(M)}"
    if invariant == "span×det":
        return f"{HowellForm.of(M).key}|{determinant(M)}"
    raise UsageError(f"Unknown invariant {invariant!r}")


def _run_block(task) -> Dict[str, int]:
    ring, xi, n, u, model, seed, block, count, invariant = task
    rng = stream(seed, n, model, block)
    law = None if model == HAAR else xi
    counts: Counter = Counter()
    for _ in range(count):
        counts[invariant_key(sample_matrix(ring, n, u, law, rng), invariant)] += 1
    return dict(counts)


def _tasks(plan: ExperimentPlan, n: int, model: str):
    blocks = -(-plan.samples // plan.block)
    for b in range(blocks):
        count = min(plan.block, plan.samples - b * plan.block)
        yield (plan.ring, plan.xi, n, plan.u, model, plan.seed, b, count, plan.invariant)


def run_experiment(plan: ExperimentPlan, models: Sequence[str] = (IID, HAAR)) -> Dict[Tuple[int, str], EmpiricalDistribution]:
    """Histogram of the plan's invariant for every n and model"""
    keys = [(n, model) for n in plan.n_values for model in models]
    tasks = []
    owners = []
    for key in keys:
        for task in _tasks(plan, *key):
            tasks.append(task)
            owners.append(key)
    logger.info("Sampling %d blocks (%d samples per n and model) with %d worker(s)",
                len(tasks), plan.samples, plan.workers)
    if plan.workers > 1:
        with ProcessPoolExecutor(max_workers=plan.workers) as pool:
            block_counts = list(config.progress(pool.map(_run_block, tasks), desc="blocks", total=len(tasks)))
    else:
        block_counts = [_run_block(t) for t in config.progress(tasks, desc="blocks")]

    results: Dict[Tuple[int, str], EmpiricalDistribution] = {}
    for key in keys:
        blocks = [c for c, owner in zip(block_counts, owners) if owner == key]
        merged: Counter = Counter()
        for c in blocks:
            merged.update(c)
        results[key] = EmpiricalDistribution(dict(merged), sum(merged.values()), blocks)
    return results


def exact_distribution(ring: RingSpec, n: int, u: int, xi: Optional[EntryDistribution],
                       invariant: str = "coker", budget: Optional[int] = None) -> Dict[str, Fraction]:
    """Exact law of the invariant by enumerating every matrix in the support"""
    budget = budget if budget is not None else config.ENUMERATION_BUDGET
    law = xi if xi is not None else EntryDistribution.haar(ring)
    m = n + u
    cells = n * m
    if len(law.support) ** cells > budget:
        raise ResourceLimitError(f"{len(law.support)}^{cells} matrices exceed the enumeration budget {budget}")
    out: Dict[str, Fraction] = {}
    for entries in config.progress(product(law.support, repeat=cells), desc="matrices",
                                   total=len(law.support) ** cells):
        prob = Fraction(1)
        for _, p in entries:
            prob *= p
        M = MatrixOverR(ring, np.array([a for a, _ in entries], dtype=np.int64).reshape(n, m), ncols=m)
        key = invariant_key(M, invariant)
        out[key] = out.get(key, Fraction(0)) + prob
    return out


@dataclass(frozen=True)
class TVEstimate:
    tv: float
    ci_low: float
    ci_high: float


def _tv_from_counts(p: np.ndarray, q: np.ndarray) -> float:
    return 0.5 * float(np.abs(p - q).sum())


def tv_estimate(P: EmpiricalDistribution, Q: EmpiricalDistribution, resamples: Optional[int] = None,
                rng: Optional[np.random.Generator] = None, level: float = 0.95) -> TVEstimate:
    """Plug-in TV with a percentile bootstrap interval from multinomial resampling"""
    resamples = resamples if resamples is not None else config.BOOTSTRAP_RESAMPLES
    rng = rng if rng is not None else np.random.default_rng(config.DEFAULT_SEED)
    classes = sorted(set(P.counts) | set(Q.counts))
    if not classes or not P.total or not Q.total:
        raise UsageError("TV needs two non-empty histograms")
    p = np.array([P.counts.get(c, 0) for c in classes], dtype=float) / P.total
    q = np.array([Q.counts.get(c, 0) for c in classes], dtype=float) / Q.total
    tv = _tv_from_counts(p, q)
    boot = np.empty(resamples)
    for b in range(resamples):
        ps = rng.multinomial(P.total, p) / P.total
        qs = rng.multinomial(Q.total, q) / Q.total
        boot[b] = _tv_from_counts(ps, qs)
    alpha = (1 - level) / 2
    low, high = np.percentile(boot, [100 * alpha, 100 * (1 - alpha)])
    return TVEstimate(tv, float(low), float(high))


def noise_floor(P: EmpiricalDistribution, seed: Optional[int] = None) -> float:
    """Self-TV between two halves of one sample, rescaled to full-sample comparisons"""
    if len(P.blocks) >= 2:
        a, b = Counter(), Counter()
        for i, blk in enumerate(P.blocks):
            (a if i % 2 == 0 else b).update(blk)
    else:
        classes = sorted(P.counts)
        counts = np.array([P.counts[c] for c in classes], dtype=np.int64)
        rng = np.random.default_rng(seed if seed is not None else config.DEFAULT_SEED)
        half = rng.multivariate_hypergeometric(counts, int(counts.sum()) // 2)
        a = Counter(dict(zip(classes, half.tolist())))
        b = Counter(dict(zip(classes, (counts - half).tolist())))
    na, nb = sum(a.values()), sum(b.values())
    if not na or not nb:
        return 1.0
    classes = set(a) | set(b)
    tv = 0.5 * sum(abs(a.get(c, 0) / na - b.get(c, 0) / nb) for c in classes)
    return tv / math.sqrt(2)


def limit_tv(P: EmpiricalDistribution, ring: RingSpec, u: int) -> float:
    """TV between a coker histogram and the limit law; unseen classes count with their full mass"""
    seen_mass = 0.0
    tv = 0.0
    for key, count in P.counts.items():
        limit = haar_limit_prob(parse_module_type(key, ring), u).value
        seen_mass += limit
        tv += abs(count / P.total - limit)
    tv += max(0.0, 1.0 - seen_mass)
    return 0.5 * tv


# -- column swapping -----------------------------------------------------------------

@dataclass
class SwapResult:
    n: int
    mean_tv: float
    per_matrix: List[Fraction] = field(default_factory=list)

    @property
    def stderr(self) -> float:
        if len(self.per_matrix) < 2:
            return 0.0
        return float(np.std([float(x) for x in self.per_matrix], ddof=1) / math.sqrt(len(self.per_matrix)))


def swap_distance(M: MatrixOverR, xi: EntryDistribution) -> Fraction:
    """TV between xi^n and the uniform law, both pushed to R^n / im(M)"""
    form = HowellForm.of(M)
    n = M.nrows
    if len(xi.support) ** n > config.SWAP_BUDGET:
        raise ResourceLimitError(f"{len(xi.support)}^{n} vectors exceed the swap budget {config.SWAP_BUDGET}")
    pushed: Dict[Tuple[int, ...], Fraction] = {}
    for entries in product(xi.support, repeat=n):
        prob = Fraction(1)
        for _, p in entries:
            prob *= p
        key = form.reduce([a for a, _ in entries])
        pushed[key] = pushed.get(key, Fraction(0)) + prob
    uniform = Fraction(1, form.quotient_size)
    unseen = form.quotient_size - len(pushed)
    return (sum((abs(p - uniform) for p in pushed.values()), Fraction(0)) + unseen * uniform) / 2


def column_swap_exact(ring: RingSpec, n: int, u: int, xi: EntryDistribution, matrices: int,
                      seed: int = config.DEFAULT_SEED) -> SwapResult:
    """Average over sampled i.i.d. M of the exact swap distance"""
    rng = stream(seed, n, SWAP, 0)
    values = []
    for _ in config.progress(range(matrices), desc=f"swap n={n}"):
        values.append(swap_distance(sample_matrix(ring, n, u, xi, rng), xi))
    mean = float(sum(values, Fraction(0)) / len(values)) if values else 0.0
    return SwapResult(n, mean, values)


# -- decay rates ---------------------------------------------------------------------

@dataclass
class RateFit:
    points: List[dict]
    slope: float
    theta_hat: float
    theta_ci: Tuple[float, float]
    theta_bound: Optional[float]
    slack: float = config.RATE_SLACK

    def within(self, limit: float) -> bool:
        return self.theta_hat <= limit

    @property
    def within_bound(self) -> Optional[bool]:
        """theta_hat <= theta_bound * slack; None when there is no bound (Haar entries)"""
        if self.theta_bound is None:
            return None
        return self.theta_hat <= self.theta_bound * self.slack

    def to_dict(self) -> dict:
        data = asdict(self)
        data["within_bound"] = self.within_bound
        return data


def fit_rate(ns: Sequence[int], tvs: Sequence[float], theta_bound: Optional[float] = None,
             noise: Optional[Sequence[float]] = None, cis: Optional[Sequence[Tuple[float, float]]] = None,
             slack: Optional[float] = None) -> RateFit:
    """Least squares on log TV against n using the points above the noise floor"""
    noise = list(noise) if noise is not None else [0.0] * len(ns)
    points = []
    for i, (n, tv) in enumerate(zip(ns, tvs)):
        point = {"n": int(n), "tv": float(tv), "noise": float(noise[i]), "used": tv > noise[i] and tv > 0}
        if cis is not None:
            point["ci"] = [float(cis[i][0]), float(cis[i][1])]
        points.append(point)
    used = [p for p in points if p["used"]]
    slack = slack if slack is not None else config.RATE_SLACK
    if slack <= 0:
        raise UsageError("Rate slack must be positive")
    if len(used) < 3:
        raise InsufficientSignalError(f"Only {len(used)} point(s) above the noise floor; need 3")
    fit = stats.linregress([p["n"] for p in used], [math.log(p["tv"]) for p in used])
    half = 1.96 * fit.stderr
    return RateFit(points, float(fit.slope), math.exp(fit.slope),
                   (math.exp(fit.slope - half), math.exp(fit.slope + half)), theta_bound, slack)


def build_report(plan: ExperimentPlan, results: Dict[Tuple[int, str], EmpiricalDistribution],
                 rate: Optional[RateFit] = None, resamples: Optional[int] = None) -> dict:
    per_n = []
    for n in plan.n_values:
        iid, haar = results.get((n, IID)), results.get((n, HAAR))
        estimate = tv_estimate(iid, haar, resamples, stream(plan.seed, n, IID, 10 ** 6)) if iid and haar else None
        for model in (IID, HAAR):
            dist = results.get((n, model))
            if dist is None:
                continue
            per_n.append({
                "n": n,
                "model": model,
                "histogram": dist.histogram(),
                "tv_vs_haar": estimate.tv if estimate and model == IID else None,
                "ci": [estimate.ci_low, estimate.ci_high] if estimate and model == IID else None,
                "noise_floor": noise_floor(dist, plan.seed),
            })
    return {
        "schema": config.REPORT_SCHEMA,
        "seed": plan.seed,
        "plan": plan.to_dict(),
        "per_n": per_n,
        "rate_fit": rate.to_dict() if rate else None,
    }
