"""Estimation and asymptotic normality for discrete-time semi-Markov chains."""

from .asymptotics import (
    V_P,
    V_R,
    V_psi,
    V_q,
    CovarianceTable,
    confidence_interval,
    plug_in,
    v_P_1d,
    v_psi_1d,
    v_q_1d,
    v_R_1d,
)
from .chain import (
    ChainSummary,
    PartitionUD,
    SemiMarkovKernel,
    StateSpace,
    check_assumptions,
    embedded_matrix,
    load_kernel,
    random_kernel,
    save_kernel,
    summarize,
)
from .estimators import (
    EstimateBundle,
    KernelEstimate,
    estimate_all,
    estimate_distribution,
    estimate_kernel,
    estimate_psi,
    estimate_reliability,
)
from .renewal import distribution_sequence, markov_renewal_function, reliability_sequence
from .simulate import Trajectory, counts, semi_markov_state, simulate
from .validation import ExperimentConfig, run_clt_experiment, run_consistency_sweep, run_coverage

__version__ = "0.1.0"
