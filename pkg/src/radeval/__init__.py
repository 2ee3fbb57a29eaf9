"""Toolkit for curating similarity-scored radiology report pair corpora,
training a referenceless estimator metric on them, and validating the metric
against classical metrics and radiologist error annotations."""

from ._kernels import BACKEND as kernel_backend

__version__ = "0.1.0"

__all__ = ["kernel_backend", "__version__"]
