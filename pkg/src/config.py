"""
Runtime configuration for the chain-ring universality toolkit
Defaults come from the environment (a .env file is honoured); experiment plans
and verification sweeps can also be described by a JSON document (--config).
"""
import json
import os
from dataclasses import asdict, dataclass, fields
from fractions import Fraction
from typing import Any, Dict, List, Optional

from dotenv import load_dotenv
from tqdm import tqdm

from errors import UsageError

load_dotenv()

# Reproducibility
DEFAULT_SEED = int(os.getenv("CHAIN_SEED", "20240601"))
DEFAULT_WORKERS = int(os.getenv("CHAIN_WORKERS", "1"))

# Enumeration caps
MODULE_CAP = int(os.getenv("CHAIN_MODULE_CAP", "256"))
ENUMERATION_BUDGET = int(os.getenv("CHAIN_ENUMERATION_BUDGET", str(2 ** 20)))
SWAP_BUDGET = int(os.getenv("CHAIN_SWAP_BUDGET", "65536"))

# Limit laws
TRUNCATION_TERMS = int(os.getenv("CHAIN_TRUNCATION_TERMS", "64"))
MP_DPS = int(os.getenv("CHAIN_MP_DPS", "40"))

# Monte Carlo
BOOTSTRAP_RESAMPLES = int(os.getenv("CHAIN_BOOTSTRAP_RESAMPLES", "200"))
SAMPLE_BLOCK = int(os.getenv("CHAIN_SAMPLE_BLOCK", "1000"))
# fitted theta may exceed theta_bound by this factor
RATE_SLACK = float(os.getenv("CHAIN_RATE_SLACK", "1.2"))
RNG_IDENTITY = "numpy.PCG64/SeedSequence(seed, spawn_key=(n, model, block))/v1"

# Equidistribution parameters (0 < EPS < EPS0)
EPS0 = Fraction(os.getenv("CHAIN_EPS0", "1/10"))
EPS = Fraction(os.getenv("CHAIN_EPS", "1/20"))
EPS_PRIME = Fraction(os.getenv("CHAIN_EPS_PRIME", "1/5"))
FOURIER_SLACK = 1e-20

LOG_LEVEL = os.getenv("CHAIN_LOG_LEVEL", "INFO")
QUIET = os.getenv("CHAIN_QUIET", "0") == "1"
REPORT_SCHEMA = "v1"

INVARIANTS = ("coker", "det", "span", "coker×det", "span×det")


@dataclass
class Config:
    """JSON-backed plan: an ExperimentPlan mirror plus sweep parameters"""
    ring: Optional[str] = None
    entry: Optional[str] = None
    u: Optional[int] = None
    n_values: Optional[List[int]] = None
    samples: Optional[int] = None
    invariant: Optional[str] = None
    seed: Optional[int] = None
    workers: Optional[int] = None
    max_module: Optional[int] = None
    trials: Optional[int] = None
    module_cap: Optional[int] = None
    resamples: Optional[int] = None
    eps0: Optional[str] = None
    eps: Optional[str] = None
    eps_prime: Optional[str] = None

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Config":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise UsageError(f"Unknown config keys: {', '.join(unknown)}")
        cfg = cls(**data)
        cfg.validate()
        return cfg

    @classmethod
    def from_json(cls, path: str) -> "Config":
        try:
            with open(path, "r") as f:
                data = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            raise UsageError(f"Cannot read config {path}: {e}") from e
        if not isinstance(data, dict):
            raise UsageError("Config document must be a JSON object")
        return cls.from_dict(data)

    def validate(self):
        for name in ("samples", "workers", "max_module", "trials", "module_cap", "resamples"):
            value = getattr(self, name)
            if value is not None and (not isinstance(value, int) or value < 1):
                raise UsageError(f"Config field '{name}' must be a positive integer")
        if self.u is not None and not isinstance(self.u, int):
            raise UsageError("Config field 'u' must be an integer")
        if self.n_values is not None:
            if not self.n_values or not all(isinstance(n, int) and n >= 1 for n in self.n_values):
                raise UsageError("Config field 'n_values' must be a non-empty list of positive integers")
        if self.invariant is not None and self.invariant not in INVARIANTS:
            raise UsageError(f"Config field 'invariant' must be one of {INVARIANTS}")
        for name in ("eps0", "eps", "eps_prime"):
            value = getattr(self, name)
            if value is not None:
                try:
                    if Fraction(str(value)) <= 0:
                        raise ValueError
                except (ValueError, ZeroDivisionError) as e:
                    raise UsageError(f"Config field '{name}' must be a positive fraction") from e
        if self.eps is not None and self.eps0 is not None and Fraction(str(self.eps)) >= Fraction(str(self.eps0)):
            raise UsageError("Config requires eps < eps0")

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        return {k: v for k, v in data.items() if v is not None}


def progress(iterable, desc: str, total: Optional[int] = None):
    """Progress bar for the long sweeps; silent under --quiet and when stderr is not a terminal"""
    return tqdm(iterable, desc=desc, total=total, disable=True if QUIET else None, leave=False)
