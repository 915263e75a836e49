import numpy as np

from .errors import DataError


def nrmse(predicted, target, skip: int = 0) -> float:
    """Root mean squared error over rows ``skip:``, normalized by the target variance.

    The variance is the population variance of the target over the same
    window, pooled over output columns. Zero for a perfect prediction, one for
    the constant predictor that outputs the window mean.
    """
    p = np.asarray(predicted, dtype=np.float64)
    y = np.asarray(target, dtype=np.float64)
    if p.shape != y.shape:
        raise DataError(f"prediction shape {p.shape} != target shape {y.shape}")
    if not 0 <= skip < y.shape[0]:
        raise DataError(f"skip={skip} must be in [0, {y.shape[0]})")
    p, y = p[skip:], y[skip:]
    var = float(np.var(y, axis=0).mean()) if y.ndim > 1 else float(np.var(y))
    if var <= 0.0:
        raise DataError("target has zero variance over the evaluated window")
    return float(np.sqrt(np.mean((p - y) ** 2) / var))
