"""Cross-validation and intrinsic Bayes factors with the Bridge Rule."""

__version__ = "0.1.0"

from .bridge import bridge_linear_fit, bridge_m, bridge_value  # noqa: E402
from .splitkit import (  # noqa: E402
    LogBF,
    SplitPlan,
    arithmetic_avg_log,
    cvbf_log_split,
    geometric_avg_log,
    make_splits,
    trimmed_mean,
)

__all__ = [
    "__version__",
    "LogBF",
    "SplitPlan",
    "arithmetic_avg_log",
    "bridge_linear_fit",
    "bridge_m",
    "bridge_value",
    "cvbf_log_split",
    "geometric_avg_log",
    "make_splits",
    "trimmed_mean",
]
