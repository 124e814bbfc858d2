"""One-pass submodular summarization with an accept threshold, a reject
threshold and a bounded buffer, plus baselines, bound certificates and
brute-force oracles."""

from .algorithms import (
    RunResult,
    Telemetry,
    Thresholds,
    greedy,
    lazy_greedy,
    minibatch_secretary,
    naive_stream_clipper,
    proof_conditions,
    sieve_streaming,
    stream_clipper,
    swap_streaming,
)
from .bounds import BoundInputs, BoundReport, case_bound, certify_run, g_eval, g_min
from .constraints import KnapsackSpec, MatroidSpec, knapsack_clipper, matroid_clipper
from .errors import (
    BoundDomainError,
    CertificationFailure,
    ConfigError,
    DuplicateElementError,
    IngestError,
    OracleRefusal,
    StreamClipError,
)
from .objective import FEATURE_OBJECTIVE, Element, ObjectiveSpec, SolutionState

__version__ = "0.1.0"
