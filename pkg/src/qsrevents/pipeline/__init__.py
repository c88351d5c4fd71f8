from .features import (
    EVENT_KINDS,
    FACTOR_MODELS,
    FACTOR_NAMES,
    FRAME_KINDS,
    KINDS,
    FactorModel,
    FeatureExtractor,
    FeatureMatrix,
    derived_points,
    embed,
    event_features,
    extract,
    qual_features,
    quant_features,
    raw_features,
    read_feature_csv,
)
from .session import (
    DEFAULT_SCHEMA,
    Segment,
    Session,
    Span,
    interpolate_gaps,
    load_session,
    preprocess,
    resample,
    save_session,
    session_from_dict,
    session_to_dict,
    slice_segments,
)

__all__ = [
    "DEFAULT_SCHEMA", "EVENT_KINDS", "FACTOR_MODELS", "FACTOR_NAMES", "FRAME_KINDS", "KINDS",
    "FactorModel", "FeatureExtractor", "FeatureMatrix", "Segment", "Session", "Span",
    "derived_points", "embed", "event_features", "extract", "interpolate_gaps", "load_session",
    "preprocess", "qual_features", "quant_features", "raw_features", "read_feature_csv", "resample",
    "save_session", "session_from_dict", "session_to_dict", "slice_segments",
]
