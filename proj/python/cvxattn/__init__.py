"""Convexified attention gesture classifier."""

from ._cvxattn import (
    Dataset,
    FormatError,
    Model,
    SynthConfig,
    TrainConfig,
    convexity_check,
    evaluate,
    kfold_evaluate,
    load_csv,
    nuclear_ball_project,
    nuclear_norm,
    preset,
    preset_names,
    save_csv,
    simplex_project,
    singular_values,
    softmax_counterexample,
    softmax_ref,
    squared_distance_to_simplex,
    synth_generate,
    train,
)

__all__ = [
    "Dataset",
    "FormatError",
    "Model",
    "SynthConfig",
    "TrainConfig",
    "convexity_check",
    "evaluate",
    "kfold_evaluate",
    "load_csv",
    "nuclear_ball_project",
    "nuclear_norm",
    "preset",
    "preset_names",
    "save_csv",
    "simplex_project",
    "singular_values",
    "softmax_counterexample",
    "softmax_ref",
    "squared_distance_to_simplex",
    "synth_generate",
    "train",
]
