"""Distributional predictors of child vocabulary acquisition.

Pipeline: transcripts -> cumulative age slices -> forward-window
co-occurrence counts -> per-word predictors (frequency, lexical diversity,
document diversity, pro-kwo) -> correlation reports and mixed-effects
logistic models of binary word production.
"""

from .analysis import (
    DesignMatrix,
    FitResult,
    ModelSpec,
    build_design,
    fit_model,
    item_prediction_error,
    wald_inference,
)
from .cooccurrence import CooccurrenceCounter, CooccurrenceMatrix, build_cooccurrence
from .corpus import (
    Corpus,
    CorpusSlice,
    Document,
    Utterance,
    cumulative_slice,
    normalize_tokens,
    parse_chat,
    parse_normalized,
)
from .errors import (
    ChatParseError,
    ConfigError,
    ConstantInputError,
    ConvergenceError,
    DataError,
    InsufficientDataError,
    NumericalError,
    ProkwoError,
    SeparationError,
)
from .glm import LogisticIRLS
from .glmm import MixedLogisticRegression
from .lexicon import (
    Administration,
    Lexicon,
    MCDIpTable,
    ProductionRecord,
    compute_mcdip,
    load_lexicon,
    production_records,
)
from .predictors import (
    PredictorTable,
    document_diversity,
    lexical_diversity,
    log_frequency,
    predictor_table,
    pro_kwo,
    pro_kwo_shuffle,
)
from .stats import (
    CorrelationReport,
    correlate_predictors,
    correlate_with_outcome,
    pearson,
    pearson_pvalue,
    standardize,
)

__version__ = "0.1.0"

__all__ = [
    "Administration",
    "ChatParseError",
    "ConfigError",
    "ConstantInputError",
    "ConvergenceError",
    "CooccurrenceCounter",
    "CooccurrenceMatrix",
    "Corpus",
    "CorpusSlice",
    "CorrelationReport",
    "DataError",
    "DesignMatrix",
    "Document",
    "FitResult",
    "InsufficientDataError",
    "Lexicon",
    "LogisticIRLS",
    "MCDIpTable",
    "MixedLogisticRegression",
    "ModelSpec",
    "NumericalError",
    "ProductionRecord",
    "ProkwoError",
    "PredictorTable",
    "SeparationError",
    "Utterance",
    "build_cooccurrence",
    "build_design",
    "compute_mcdip",
    "correlate_predictors",
    "correlate_with_outcome",
    "cumulative_slice",
    "document_diversity",
    "fit_model",
    "item_prediction_error",
    "lexical_diversity",
    "load_lexicon",
    "log_frequency",
    "normalize_tokens",
    "parse_chat",
    "parse_normalized",
    "pearson",
    "pearson_pvalue",
    "predictor_table",
    "pro_kwo",
    "pro_kwo_shuffle",
    "production_records",
    "standardize",
    "wald_inference",
]
