"""kawalab: a numerical laboratory for boundary-feedback stabilization of the
Kawahara equation with delayed (memory-type) feedback.

Modules:
    model           closed-form stability certificates (gains, lengths, rates)
    discretization  finite-difference spatial operator with ghost closures
    memory          boundary-trace history buffer and kernel quadratures
    solver          IMEX time integration
    diagnostics     energies, decay fits, a priori / observability / spectral checks
    cli             the `kaw` command line
    rng             seeded 64-bit LCG for reproducible randomized suites
"""

from .model import (Certificate, ConditionError, FeedbackGains, MemoryKernel,
                    PhysicalParams, build_certificate, critical_length,
                    mu_guaranteed, r_max)
from .solver import RunResult, SimConfig, SolverAbort, run

__all__ = [
    "Certificate", "ConditionError", "FeedbackGains", "MemoryKernel",
    "PhysicalParams", "build_certificate", "critical_length", "mu_guaranteed",
    "r_max", "RunResult", "SimConfig", "SolverAbort", "run",
]

__version__ = "0.1.0"
