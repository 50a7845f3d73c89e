"""Rank aggregation from noisy pairwise comparisons.

Estimates a full ranking of M items from N possibly contradictory signed
comparisons by minimizing an iteratively reweighted softplus surrogate of
the 0-1 disagreement count, one convex subproblem at a time with a
primal-dual splitting solver.  The final per-comparison weights double as a
confidence measure on each observation.  Ships with Borda and Bradley-Terry
baselines, brute-force and projected-gradient oracles, synthetic data
generators, metrics, and a Monte Carlo benchmark harness.
"""

from .baselines import (BTScores, borda, brute_force_01, bt_fit,
                        projected_gradient_subproblem, zero_one_cost)
from .data import (ComparisonDataset, DataError, compress, load_csv,
                   scores_to_ranking, signed_matvec, signed_rmatvec,
                   signed_row, write_csv)
from .experiment import (AggregateRecord, ExperimentResult, ExperimentSpec,
                         TrialRecord, emit, read_result_csv, run_experiment,
                         spec_hash)
from .metrics import kendall_tau, label_accuracy
from .pdhg import (DivergenceError, PdhgConfig, PdhgTrace, pdhg_solve,
                   subproblem_cost)
from .prox import (dual_softplus_prox, prox_ridge_centered, softplus_prox,
                   spectral_norm)
from .reweight import (PDRankConfig, PDRankResult, confidence_report,
                       outer_converged, pd_rank, update_weights,
                       write_confidence_csv)
from .simulate import (BTGenConfig, GroundTruth, ToggleNoiseConfig,
                       generate_bt, generate_toggle, sample_pairs,
                       standard_trials_to_n)

__version__ = "0.1.0"

__all__ = [
    "AggregateRecord", "BTGenConfig", "BTScores", "ComparisonDataset",
    "DataError", "DivergenceError", "ExperimentResult", "ExperimentSpec",
    "GroundTruth", "PDRankConfig", "PDRankResult", "PdhgConfig", "PdhgTrace",
    "ToggleNoiseConfig", "TrialRecord", "borda", "brute_force_01", "bt_fit",
    "compress", "confidence_report", "dual_softplus_prox", "emit",
    "generate_bt", "generate_toggle", "kendall_tau", "label_accuracy",
    "load_csv", "outer_converged", "pd_rank", "pdhg_solve",
    "projected_gradient_subproblem", "prox_ridge_centered", "read_result_csv",
    "run_experiment", "sample_pairs", "scores_to_ranking", "signed_matvec",
    "signed_rmatvec", "signed_row", "softplus_prox", "spec_hash",
    "spectral_norm", "standard_trials_to_n", "subproblem_cost",
    "update_weights", "write_confidence_csv", "write_csv", "zero_one_cost",
]
