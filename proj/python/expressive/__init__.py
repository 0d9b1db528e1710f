"""Emotional expressiveness measurement and prediction.

Thin Python layer over the native core: reliability (ICC), Bayesian CFA,
visual kinematics, lexicon percentages, the three regressors, metrics and
the paired bootstrap. ``run_cli`` runs any command-line subcommand in-process.
"""

from ._core import (
    ExpressiveError,
    Model,
    bootstrap_differences,
    category_percentages,
    fit_cfa,
    fit_elastic_net,
    fit_mlp,
    fit_svr,
    icc_average_raters,
    kinematics,
    metrics,
    run_cli,
    tokenize,
)

__all__ = [
    "ExpressiveError",
    "Model",
    "bootstrap_differences",
    "category_percentages",
    "fit_cfa",
    "fit_elastic_net",
    "fit_mlp",
    "fit_svr",
    "icc_average_raters",
    "kinematics",
    "metrics",
    "run_cli",
    "tokenize",
]
