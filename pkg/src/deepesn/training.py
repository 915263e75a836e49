"""Ridge-regression readouts and single-reservoir training."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg

from .errors import DataError, NumericalError
from .metrics import nrmse
from .reservoir import Esn, as_sequence


@dataclass
class RidgeProblem:
    X: np.ndarray
    Y: np.ndarray
    ridge: float = 0.0

    def __post_init__(self):
        self.X = np.atleast_2d(np.asarray(self.X, dtype=np.float64))
        Y = np.asarray(self.Y, dtype=np.float64)
        self.Y = Y[:, None] if Y.ndim == 1 else Y
        if self.X.shape[0] < 1:
            raise DataError("ridge problem needs at least one row")
        if self.X.shape[0] != self.Y.shape[0]:
            raise DataError(
                f"X has {self.X.shape[0]} rows but Y has {self.Y.shape[0]}"
            )
        if not self.ridge >= 0:
            raise DataError(f"ridge must be >= 0, got {self.ridge}")


def ridge_fit(problem: RidgeProblem) -> np.ndarray:
    """Readout ``U`` (M x N) with ``U.T = (X'X + ridge**2 I)^-1 X'Y``.

    For ``ridge > 0`` the regularized normal equations are Cholesky-factored.
    For ``ridge == 0`` the plain least-squares problem is solved by SVD after
    checking that ``X`` has full column rank.
    """
    X, Y, lam = problem.X, problem.Y, float(problem.ridge)
    n = X.shape[1]
    if lam == 0.0:
        sol, _, rank, _ = np.linalg.lstsq(X, Y, rcond=None)
        if rank < n:
            raise NumericalError(
                f"singular system: X has rank {rank} < {n} columns and ridge is 0"
            )
        return sol.T
    G = X.T @ X
    G[np.diag_indices(n)] += lam * lam
    try:
        factor = scipy.linalg.cho_factor(G, lower=True, check_finite=True)
        return scipy.linalg.cho_solve(factor, X.T @ Y).T
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError):
        # Round-off can make a tiny-ridge Gram matrix lose definiteness.
        aug_X = np.vstack([X, lam * np.eye(n)])
        aug_Y = np.vstack([Y, np.zeros((n, Y.shape[1]))])
        return np.linalg.lstsq(aug_X, aug_Y, rcond=None)[0].T


@dataclass
class TrainResult:
    """Outcome of fitting one readout.

    ``outputs`` is the fitted readout applied to every training state,
    washout rows included. ``train_nrmse`` is ``None`` when the target has no
    variance over the fitted window.
    """

    readout: np.ndarray
    outputs: np.ndarray
    train_nrmse: Optional[float]
    washout: int


def train_esn(esn: Esn, inputs, targets, washout: int, ridge: Optional[float] = None) -> TrainResult:
    """Run the reservoir, fit its readout on rows ``washout:`` and install it."""
    inputs = as_sequence(inputs, esn.config.input_dim)
    targets = as_sequence(targets, esn.config.output_dim)
    T = inputs.shape[0]
    if targets.shape[0] != T:
        raise DataError(f"{T} input rows but {targets.shape[0]} target rows")
    if not 0 <= washout < T:
        raise DataError(f"washout {washout} leaves no training rows out of {T}")
    states = esn.run(inputs, washout).states
    lam = esn.config.ridge if ridge is None else ridge
    U = ridge_fit(RidgeProblem(states[washout:], targets[washout:], lam))
    esn.U = U
    outputs = states @ U.T
    fitted = targets[washout:]
    score = None
    if np.var(fitted, axis=0).mean() > 0:
        score = nrmse(outputs, targets, washout)
    return TrainResult(U, outputs, score, washout)
