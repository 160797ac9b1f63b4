"""Spatially adapted first- and second-order image regularisation (SA-TV-TV2).

The regulariser weights the first- and second-order total variation by
``alpha(u) = |grad beta(u)|`` and ``beta(u) = 1/sqrt(1 + |grad u|^2)``, which
come from the Weingarten map of the image surface. :mod:`satvtv2.admm` solves
the denoising, deblurring and inpainting problems with ADMM.
"""

from .admm import SolverConfig, SolverDiverged, TraceRecord, run, run_with_deltas
from .problems import ProblemSpec, average_kernel, gaussian_kernel
from .weights import Constant, Dynamic, Observed, Oracle

__all__ = [
    "Constant",
    "Dynamic",
    "Observed",
    "Oracle",
    "ProblemSpec",
    "SolverConfig",
    "SolverDiverged",
    "TraceRecord",
    "average_kernel",
    "gaussian_kernel",
    "run",
    "run_with_deltas",
]

__version__ = "0.1.0"
