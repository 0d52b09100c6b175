"""
Exception types shared by the chain-ring toolkit
"""


class ChainRingError(Exception):
    pass


class UsageError(ChainRingError, ValueError):
    """Malformed input, mismatched rings, or flags that do not fit together"""


class DomainError(ChainRingError, ArithmeticError):
    """Arithmetic outside the domain of an operation (e.g. inverting a non-unit)"""


class ResourceLimitError(ChainRingError, RuntimeError):
    """An enumeration cap or budget would be exceeded"""


class InsufficientSignalError(ChainRingError, ValueError):
    """Too few points above the noise floor to fit a decay rate"""
