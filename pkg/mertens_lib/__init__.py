"""
Mertens Function Toolkit

Exact values and statistics of the Mertens function M(x):
- Segmented log-space Mobius sieve with pre-sieve wheel and bucketed primes
- Isolated M(x) in O(x^(2/3+eps)) with checkpointed full-range scans
- Zero statistics of M: V(x), M+(x), gap histograms, band multipliers
- Explicit-formula estimates and LLL bound certificates from zeta zeros
"""

__version__ = "1.0.0"
__description__ = "Mertens function sieve, isolated values and analytic bounds"

from .certificate import BoundCertificate, bound_search, verify_certificate
from .combinatorial import IsolatedQuery, mertens_at, mertens_isolated
from .errors import IntegrityError, ParameterError, PrecisionError
from .logger import get_logger, setup_logging
from .scan import bucket_scan, mertens_scan
from .sieve import mertens_table, mobius_table
from .threadpool import ThreadPool

__all__ = [
    "BoundCertificate",
    "bound_search",
    "verify_certificate",
    "IsolatedQuery",
    "mertens_at",
    "mertens_isolated",
    "IntegrityError",
    "ParameterError",
    "PrecisionError",
    "get_logger",
    "setup_logging",
    "bucket_scan",
    "mertens_scan",
    "mertens_table",
    "mobius_table",
    "ThreadPool",
]
