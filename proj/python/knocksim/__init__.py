"""Knockoff filter simulator for correlated Gaussian designs.

Thin wrapper around the C++ core: knockoff constructions (equi, ASDP, CI),
coordinate-descent lasso with debiasing, the knockoff filter, and effective
signal deficiency diagnostics.
"""

from ._core import (  # noqa: F401
    ConfigError,
    CovMatrix,
    EsdReport,
    KnockoffSpec,
    LassoFit,
    NumericError,
    RngStream,
    asdp_s,
    build_cov,
    chow_liu_tree,
    cholesky_psd,
    ci_exists,
    ci_s,
    cv_lambda,
    debias,
    default_lambda_grid,
    equi_s,
    esd_ci_tree,
    esd_equi,
    esd_knockoff_generic,
    esd_lasso,
    extend_covariance,
    extended_precision,
    fit_lasso_cd,
    forest_pattern,
    invert_spd,
    knockoff_threshold,
    lp_distance_zero,
    make_knockoff_spec,
    oracle_threshold_select,
    run_experiment,
    sample_knockoffs,
    sample_mvn,
    select,
    standardize,
    statistics_delta,
    trial_metrics,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
