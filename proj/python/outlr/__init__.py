from ._core import (
    ConsensusResult,
    OutlrError,
    SfmReport,
    exact_consensus,
    fit_linear,
    gen_regression,
    sfm_remove_outliers,
    write_scene,
)

__all__ = [
    "ConsensusResult",
    "OutlrError",
    "SfmReport",
    "exact_consensus",
    "fit_linear",
    "gen_regression",
    "sfm_remove_outliers",
    "write_scene",
]
__version__ = "0.1.0"
