"""Sliding-window causal networks of risk factor returns.

VAR-LiNGAM structure learning with resampling-based edge significance,
network stability analytics, tail-risk indicators and Poisson regression
of network density.
"""

__version__ = "0.1.0"

from .exceptions import (ConfigError, ConvergenceError, DataError, EstimationError,
                         FactorCausalError, RankDeficiencyError)
from .glm import PoissonGLM, fit_poisson, regress_density
from .graph import edge_counts, edge_set, is_dag, jaccard, out_degree, rolling_mean
from .lingam import CausalModel, DirectLiNGAM, VARLiNGAM, causal_order, var_lingam
from .netinfer import (FactorNetwork, FactorNetworkEstimator, causal_network, correlation_network,
                       resample_significance)
from .panel import (IndicatorSeries, ReturnPanel, WindowSpec, align, load_indicator, load_panel,
                    load_spread, make_windows, slice_panel, write_panel)
from .stats import ccf, indicator_zscores, summary_stats, tail_es
from .var import VAR, fit_var, select_lag

__all__ = [
    "ConfigError", "ConvergenceError", "DataError", "EstimationError", "FactorCausalError",
    "RankDeficiencyError", "PoissonGLM", "fit_poisson", "regress_density", "edge_counts", "edge_set",
    "is_dag", "jaccard", "out_degree", "rolling_mean", "CausalModel", "DirectLiNGAM", "VARLiNGAM",
    "causal_order", "var_lingam", "FactorNetwork", "FactorNetworkEstimator", "causal_network",
    "correlation_network", "resample_significance", "IndicatorSeries", "ReturnPanel", "WindowSpec",
    "align", "load_indicator", "load_panel", "load_spread", "make_windows", "slice_panel",
    "write_panel", "ccf", "indicator_zscores", "summary_stats", "tail_es", "VAR", "fit_var",
    "select_lag",
]
