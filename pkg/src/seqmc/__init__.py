"""Sequential Monte Carlo tests with a uniform bound on the resampling risk."""
from .binom import BinomialParams, binom_pmf, log_binom_pmf
from .core import BoundaryExhausted, BoundaryPair, Decision, RunResult, SourceExhausted, TestConfig
from .csm import CsmBoundaryTable, csm_boundaries, csm_run, csm_should_stop
from .kernels import BACKEND
from .risk import (
    expected_stopping_time,
    evolve,
    hitting_probabilities,
    initial_state,
    resampling_risk,
    spend_rate_series,
)
from .simctest import (
    SimctestBuilder,
    SpendingSequence,
    load_boundaries,
    save_boundaries,
    simctest_boundaries,
    simctest_run,
    spending_at,
)
from .sources import fixed_p_source, penguin_bootstrap_source, welch_t
from .truncated import TruncatedConfig, truncated_risk_curve, truncated_run

__version__ = "0.1.0"
