"""Half-face mirror stitching and Eigenfaces recognition."""

from ._halfface import (
    EigenModel,
    HalffaceError,
    RecognitionResult,
    StitchParams,
    SymmetryAxis,
    classify,
    cr,
    hflip,
    load_image,
    load_model,
    mirror_search_axis,
    mse,
    occlude,
    photometric_normalize,
    project,
    reconstruct,
    save_image,
    save_model,
    stitch_face,
    train,
)

__all__ = [
    "EigenModel",
    "HalffaceError",
    "RecognitionResult",
    "StitchParams",
    "SymmetryAxis",
    "classify",
    "cr",
    "hflip",
    "load_image",
    "load_model",
    "mirror_search_axis",
    "mse",
    "occlude",
    "photometric_normalize",
    "project",
    "reconstruct",
    "save_image",
    "save_model",
    "stitch_face",
    "train",
]
