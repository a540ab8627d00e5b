"""Differentiable SDF renderer with warped-area silhouette gradients."""

from warpsdf._core import (
    Camera,
    ConfigError,
    InsideStartError,
    NumericalError,
    Scene,
    eval_sdf,
    fd_gradient_image,
    fit,
    geometric_init,
    gradient_image,
    kronecker_probe,
    lemma_bound,
    load_scene,
    parse_scene,
    render,
    sdf_gradient,
    trace,
    warp_v,
)

__all__ = [
    "Camera",
    "ConfigError",
    "InsideStartError",
    "NumericalError",
    "Scene",
    "eval_sdf",
    "fd_gradient_image",
    "fit",
    "geometric_init",
    "gradient_image",
    "kronecker_probe",
    "lemma_bound",
    "load_scene",
    "parse_scene",
    "render",
    "sdf_gradient",
    "trace",
    "warp_v",
]
