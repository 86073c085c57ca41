"""Bootstrap bias-corrected cross-validation (BBC-CV) and early dropping (BCED-CV)."""

__version__ = "0.1.0"

from .errors import (
    BBCError,
    DegenerateMetricError,
    GridError,
    LearnerError,
    ParseError,
    ResamplingError,
    SelectionError,
)
from .io import ReportDocument, parse_prediction_matrix, write_prediction_matrix
from .learners import ConfigGrid, Configuration, Dataset, expand_grid, train
from .metrics import (
    MetricSpec,
    as_loss,
    auc,
    concordance_index,
    get_metric,
    squared_error,
    zero_one_loss,
)
from .protocols import (
    ProtocolReport,
    bbc,
    bbc_repeated,
    bced_on_store,
    count_models,
    run_bbc_cv,
    run_bced,
    run_cv,
    run_cvt,
    run_ncv,
    run_tt,
    tt_correct,
)
from .resampling import FoldPlan, SeedPlan, bootstrap_draw, percentile_ci, stratified_fold_plan
from .selection import PredictionStore, css

from .simulation import SimSetting, generate_instance, run_bias_study, simulate_ncv_on_matrix
