"""Gamma(alpha, beta) variates for alpha >= 1 by rejection from a Gamma proposal."""

from .baselines import MethodId, asymptotic_ar, reference_ar, sample
from .errors import ConvergenceError, DomainError
from .gamma_core import (
    GammaParams,
    ProposalParams,
    SampleBatch,
    build_proposal,
    sample_m1,
    theoretical_ar_m1,
)
from .rng import UniformSource, seed_stream

__version__ = "0.1.0"
