"""Deformable wireframe skeletons: projection, fitting, and interpretation."""

from ._core import (
    BaseShapeSet,
    Error,
    HeatmapStack,
    Range,
    SamplerConfig,
    SkeletonSpec,
    SynthSample,
    argmax_keypoints,
    azimuth_error,
    compose_skeleton,
    corrupt_salt_pepper,
    diagonal_length,
    fit_keypoints,
    generate_dataset,
    load_base_shapes,
    param_vector_size,
    parse_base_shapes,
    project_skeleton,
    projection_jacobian,
    render_heatmaps,
    rmse_3d,
)

__all__ = [
    "BaseShapeSet",
    "Error",
    "HeatmapStack",
    "Range",
    "SamplerConfig",
    "SkeletonSpec",
    "SynthSample",
    "argmax_keypoints",
    "azimuth_error",
    "compose_skeleton",
    "corrupt_salt_pepper",
    "diagonal_length",
    "fit_keypoints",
    "generate_dataset",
    "load_base_shapes",
    "param_vector_size",
    "parse_base_shapes",
    "project_skeleton",
    "projection_jacobian",
    "render_heatmaps",
    "rmse_3d",
]
