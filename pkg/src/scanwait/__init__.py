"""Performance analysis of scan-and-wait diversity receivers over correlated Nakagami-m fading."""

from .corr_model import CorrelationSpec, GaussianMap
from .error_prob import Modulation, sec_error_prob, single_branch_error_prob, swc_error_prob
from .joint_stats import FadingModel, SeriesConfig, SeriesNotConverged, joint_cdf, joint_pdf
from .metrics import ThresholdProfile, metrics
from .montecarlo import McConfig
from .thresholds import match_sec_anpe, optimize_sec_threshold, solve_anpe_constraint

__version__ = "0.1.0"
