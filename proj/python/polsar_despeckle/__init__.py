"""Dual-pol SAR covariance despeckling: transforms, simulation, change detection, CNN inference, metrics.

Covariance rasters are (H, W, 2, 2) complex arrays; intensity band stacks are (4, H, W)
float arrays ordered VV, I, Q, VH.
"""

from ._polsar import (
    Error,
    FormatError,
    InvalidArgument,
    IoError,
    SingularMatrixError,
    boxcar_multilook,
    change_mask,
    change_probability,
    chi2_cdf,
    despeckle,
    enl,
    epd_roa,
    forward_transform,
    inverse_transform,
    omnibus_lnq,
    project_psd,
    read_raster,
    set_thread_count,
    simulate,
    ssim,
    thread_count,
    write_covariance,
)

__version__ = "0.1.0"

__all__ = [
    "Error",
    "FormatError",
    "InvalidArgument",
    "IoError",
    "SingularMatrixError",
    "boxcar_multilook",
    "change_mask",
    "change_probability",
    "chi2_cdf",
    "despeckle",
    "enl",
    "epd_roa",
    "forward_transform",
    "inverse_transform",
    "omnibus_lnq",
    "project_psd",
    "read_raster",
    "set_thread_count",
    "simulate",
    "ssim",
    "thread_count",
    "write_covariance",
]
