"""Exception types shared across the package."""


class NotPositiveDefiniteError(Exception):
    """Cholesky factorization found a non-positive (or below-tolerance) pivot."""


class IllConditionedError(Exception):
    """Correlation matrix could not be factorized even at the maximum nugget."""


class OptimizerFailedError(Exception):
    """Every likelihood-optimization start failed."""


class SamplerError(Exception):
    """An MCMC update failed irrecoverably; carries the offending scan index."""

    def __init__(self, scan: int, message: str):
        super().__init__(f"scan {scan}: {message}")
        self.scan = scan


class BenchmarkError(Exception):
    """Too many benchmark replicates failed; carries the partial report."""

    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report
