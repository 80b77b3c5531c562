"""Slum mapping from multi-band imagery: GLCM texture features and
canonical correlation forests."""

from ._slummap import (
    BandStack,
    CcaDegenerate,
    CcfModel,
    DegenerateData,
    IoError,
    LabelMask,
    ModelError,
    RasterError,
    cca_fit,
    cooccurrence,
    evaluate,
    extract_spectral,
    extract_texture,
    format_percent,
    haralick,
    load_band_stack,
    load_label_mask,
    make_two_texture_scene,
    predict,
    quantize,
    run_experiment,
    save_band_stack,
    save_label_mask,
    save_prediction_map,
    train_forest,
)

__all__ = [
    "BandStack",
    "CcaDegenerate",
    "CcfModel",
    "DegenerateData",
    "IoError",
    "LabelMask",
    "ModelError",
    "RasterError",
    "cca_fit",
    "cooccurrence",
    "evaluate",
    "extract_spectral",
    "extract_texture",
    "format_percent",
    "haralick",
    "load_band_stack",
    "load_label_mask",
    "make_two_texture_scene",
    "predict",
    "quantize",
    "run_experiment",
    "save_band_stack",
    "save_label_mask",
    "save_prediction_map",
    "train_forest",
]
