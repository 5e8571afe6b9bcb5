"""Combinatorial feature-combination networks for tabular data.

The library expands a feature vector into products (or pairwise sums of
products) over all m-subsets, feeds the expanded representation through a
small residual network, and trains the whole thing with hand-written
reverse-mode gradients. Everything is deterministic given a seed.
"""

from .data import (
    PRODUCT_SIGN,
    THREE_WAY_PRODUCT_SIGN,
    Dataset,
    NormStats,
    load_csv,
    save_csv,
    stratified_split,
    synth_interaction,
    zscore_apply,
    zscore_fit,
)
from .errors import (
    CapacityError,
    ConfigError,
    DataError,
    ParseError,
    SchemaError,
    ShapeError,
    StateError,
)
from .featcomb import (
    MULTIPLICATIVE,
    PAIRWISE_SUM,
    CombinationSpec,
    CombinedFeatures,
    combine_backward,
    combine_multiplicative,
    combine_pairwise_sum,
    combined_feature_names,
    enumerate_subsets,
    global_interaction,
    transform_dataset,
)
from .layers import (
    INFER,
    TRAIN,
    BatchNorm,
    Conv1D,
    Dense,
    Dropout,
    ParamBlock,
    ReLULayer,
    ResidualBlock,
    he_init,
    relu,
    softmax_cross_entropy,
)
from .model import (
    Checkpoint,
    ModelConfig,
    ModelGraph,
    backward,
    build_baseline,
    build_tcn,
    forward,
    load_checkpoint,
    predict,
    save_checkpoint,
)
from .ndcore import RNG_ALGORITHM, Rng
from .train import (
    AdamState,
    EvalResult,
    TrainConfig,
    TrainHistory,
    adam_step,
    evaluate,
    find_check_batch,
    grad_check,
    grad_check_report,
    kink_distance,
    l2_penalty,
    train_loop,
)

__version__ = "0.1.0"

__all__ = [
    "RNG_ALGORITHM",
    "Rng",
    "MULTIPLICATIVE",
    "PAIRWISE_SUM",
    "CombinationSpec",
    "CombinedFeatures",
    "combine_multiplicative",
    "combine_pairwise_sum",
    "combine_backward",
    "combined_feature_names",
    "enumerate_subsets",
    "global_interaction",
    "transform_dataset",
    "TRAIN",
    "INFER",
    "ParamBlock",
    "Dense",
    "ReLULayer",
    "BatchNorm",
    "Dropout",
    "ResidualBlock",
    "Conv1D",
    "relu",
    "he_init",
    "softmax_cross_entropy",
    "ModelConfig",
    "ModelGraph",
    "build_tcn",
    "build_baseline",
    "forward",
    "backward",
    "predict",
    "Checkpoint",
    "save_checkpoint",
    "load_checkpoint",
    "Dataset",
    "NormStats",
    "load_csv",
    "save_csv",
    "zscore_fit",
    "zscore_apply",
    "stratified_split",
    "synth_interaction",
    "PRODUCT_SIGN",
    "THREE_WAY_PRODUCT_SIGN",
    "TrainConfig",
    "TrainHistory",
    "EvalResult",
    "AdamState",
    "adam_step",
    "l2_penalty",
    "train_loop",
    "evaluate",
    "grad_check",
    "grad_check_report",
    "find_check_batch",
    "kink_distance",
    "ShapeError",
    "CapacityError",
    "DataError",
    "ParseError",
    "SchemaError",
    "ConfigError",
    "StateError",
]
