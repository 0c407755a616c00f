"""Python bindings for the AVGCN trajectory forecasting core."""

from ._avgcn import (
    AttentionNet,
    ConfigError,
    ContractError,
    DataError,
    Dataset,
    DimensionError,
    Error,
    IoError,
    ParseError,
    Predictor,
    RangeError,
    SceneWindow,
    SchemaError,
    ade,
    best_of_k,
    constant_velocity_baseline,
    crowd_corpus,
    fde,
    ground_truth_attention,
    parse_config,
    parse_windows,
    run_command,
    star_adjacency,
    synth,
    validate_report,
    validate_session,
    visual_filter,
)

__all__ = [name for name in dir() if not name.startswith("_")]
