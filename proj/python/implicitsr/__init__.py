"""Continuous-scale diffusion super-resolution core."""

from ._core import (
    Model,
    NoiseSchedule,
    __version__,
    build_schedule,
    consistency,
    degrade,
    normalize_alphas,
    psnr,
    q_sample,
    q_sample_gamma,
    read_png,
    resize_bicubic,
    scaled_size,
    ssim,
    to_unit_range,
    write_png,
)

__all__ = [
    "Model",
    "NoiseSchedule",
    "__version__",
    "build_schedule",
    "consistency",
    "degrade",
    "normalize_alphas",
    "psnr",
    "q_sample",
    "q_sample_gamma",
    "read_png",
    "resize_bicubic",
    "scaled_size",
    "ssim",
    "to_unit_range",
    "write_png",
]
