from .bias import BiasModel, fit_biases
from .hybrid import (
    COMPONENTS,
    HybridRatingModel,
    build_train_index,
    component_matrix,
    evaluate_mse,
    fit_betas,
    fit_hybrid,
    load_model,
    predict_hybrid,
    predict_text_term,
    save_model,
)
from .nmf import FactorModel, fit_nmf, masked_nmf, masked_objective, nmf_dense, predict_mf
from .profiles import (
    LATENT,
    NONE,
    RAW,
    ProfileSet,
    TextProfile,
    build_profile_set,
    build_text_profile,
    profile_from_vector,
    similarity_latent,
    similarity_raw,
    text_similarity,
)

__all__ = [
    "BiasModel",
    "COMPONENTS",
    "FactorModel",
    "HybridRatingModel",
    "LATENT",
    "NONE",
    "ProfileSet",
    "RAW",
    "TextProfile",
    "build_profile_set",
    "build_text_profile",
    "build_train_index",
    "component_matrix",
    "evaluate_mse",
    "fit_betas",
    "fit_biases",
    "fit_hybrid",
    "fit_nmf",
    "load_model",
    "masked_nmf",
    "masked_objective",
    "nmf_dense",
    "predict_hybrid",
    "predict_mf",
    "predict_text_term",
    "profile_from_vector",
    "save_model",
    "similarity_latent",
    "similarity_raw",
    "text_similarity",
]
