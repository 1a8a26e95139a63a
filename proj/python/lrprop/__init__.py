"""Python bindings for the lrprop alignment and representation-learning core."""

from ._lrprop import (
    EncoderDims,
    EncoderParams,
    EncoderSettings,
    HyperParams,
    SynthConfig,
    TrainConfig,
    count_paths,
    distance_matrix,
    dtw_accuracy,
    dtw_cost,
    dtw_path,
    encode,
    encode_backward,
    generate_dataset,
    init_params,
    kendall_tau,
    kl_row,
    pair_loss,
    propagation_prior,
    run_checks,
    run_cli,
    same_video_prior,
    similarity_distribution,
    soft_min,
    softdtw_cost,
    softdtw_grad_embeddings,
    train,
)

__all__ = [name for name in dir() if not name.startswith("_")]
