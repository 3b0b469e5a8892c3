"""Data complexity as the negative entropy of a Gaussian fitted to feature activations."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import linalg

from ._validation import as_float_array, check_scalar
from .exceptions import ValidationError

__all__ = ["EntropyReport", "gaussian_negative_entropy", "DEFAULT_REL_SHRINKAGE"]

DEFAULT_REL_SHRINKAGE = 1e-6

_LOG_2PIE = np.log(2 * np.pi * np.e)


@dataclass(frozen=True)
class EntropyReport:
    """Result of :func:`gaussian_negative_entropy`.

    ``neg_entropy == -(d/2) log(2 pi e) - logdet/2``.  ``singular`` is set when the
    regularised covariance is not positive definite; ``logdet`` is then ``-inf``
    and ``neg_entropy`` is ``+inf``.
    """

    neg_entropy: float
    logdet: float
    shrinkage: float
    d: int
    N: int
    singular: bool = False

    def to_dict(self):
        return {"neg_entropy": self.neg_entropy, "logdet": self.logdet,
                "shrinkage": self.shrinkage, "d": self.d, "N": self.N,
                "singular": self.singular}


def gaussian_negative_entropy(A, epsilon: Optional[float] = None) -> EntropyReport:
    """Negative differential entropy (nats) of the Gaussian fitted to the rows of ``A``.

    Parameters
    ----------
    A : array of shape (N, d)
        Activations, one sample per row.  ``N >= 2``.
    epsilon : float, optional
        Ridge added to the covariance diagonal.  Defaults to
        ``1e-6 * trace(cov) / d``, which keeps the result exactly equivariant
        under rescaling of the features.  Pass 0 for no shrinkage.
    """
    A = as_float_array(A, "activations")
    if A.ndim == 1:
        A = A[:, None]
    if A.ndim != 2:
        raise ValidationError(f"activations must be a matrix, got shape {A.shape}")
    N, d = A.shape
    if N < 2:
        raise ValidationError(f"need at least 2 samples, got {N}")
    if d < 1:
        raise ValidationError("need at least one feature column")
    cov = np.atleast_2d(np.cov(A, rowvar=False, ddof=1))
    if epsilon is None:
        epsilon = DEFAULT_REL_SHRINKAGE * float(np.trace(cov)) / d
    else:
        epsilon = check_scalar(epsilon, "epsilon", min_val=0)
    cov = cov + epsilon * np.eye(d)
    try:
        chol = linalg.cholesky(cov, lower=True)
        diag = np.diag(chol)
        # pivots at rounding level mean the matrix is numerically singular
        if np.any(diag**2 <= d * np.finfo(float).eps * np.max(np.diag(cov))):
            raise linalg.LinAlgError("zero pivot")
        logdet = 2.0 * float(np.sum(np.log(diag)))
        singular = False
    except linalg.LinAlgError:
        logdet, singular = float("-inf"), True
    return EntropyReport(float(-0.5 * d * _LOG_2PIE - 0.5 * logdet), logdet, float(epsilon), d, N,
                         singular)
