"""Hot inner loops, compiled with numba when available.

Each kernel exists twice: a pure-numpy reference (``*_py``) and a jitted
version. The public names (``drive_reservoir``, ``narma_recurrence``) point at
the jitted versions unless numba is missing or ``DEEPESN_DISABLE_NUMBA`` is
set to a truthy value before import.

The two backends agree to round-off, not bitwise: numba's tanh comes from
libm, numpy's from its own vectorized loops.
"""

import os

import numpy as np

_DISABLE = os.environ.get("DEEPESN_DISABLE_NUMBA", "").strip().lower() in {
    "1",
    "true",
    "yes",
    "on",
}

try:
    if _DISABLE:
        raise ImportError
    from numba import njit

    HAS_NUMBA = True
except ImportError:
    HAS_NUMBA = False


def drive_reservoir_py(W, drive, x0, identity):
    """x(t) = f(drive[t] + W x(t-1)), starting from x0; returns all states."""
    T, N = drive.shape
    states = np.empty((T, N))
    x = x0.copy()
    for t in range(T):
        pre = drive[t] + W @ x
        x = pre if identity else np.tanh(pre)
        states[t] = x
    return states


def narma_recurrence_py(s, tau, bound):
    T = s.shape[0]
    y = np.zeros(T)
    prev = 0.0
    for t in range(T):
        delayed = s[t - tau] if t >= tau else 0.0
        cur = 0.7 * delayed + (1.0 - prev) * prev + 0.1
        if not abs(cur) <= bound:
            return y, t
        y[t] = cur
        prev = cur
    return y, -1


if HAS_NUMBA:

    @njit(cache=True, nogil=True)
    def _drive_reservoir_nb(W, drive, x0, identity):
        T, N = drive.shape
        states = np.empty((T, N))
        x = x0.copy()
        for t in range(T):
            pre = W @ x  # BLAS gemv; a hand-written loop is slower from N ~ 30
            for i in range(N):
                v = drive[t, i] + pre[i]
                x[i] = v if identity else np.tanh(v)
                states[t, i] = x[i]
        return states

    @njit(cache=True, nogil=True)
    def _narma_recurrence_nb(s, tau, bound):
        T = s.shape[0]
        y = np.zeros(T)
        prev = 0.0
        for t in range(T):
            delayed = s[t - tau] if t >= tau else 0.0
            cur = 0.7 * delayed + (1.0 - prev) * prev + 0.1
            if not abs(cur) <= bound:
                return y, t
            y[t] = cur
            prev = cur
        return y, -1

    def drive_reservoir(W, drive, x0, identity):
        return _drive_reservoir_nb(
            np.ascontiguousarray(W, dtype=np.float64),
            np.ascontiguousarray(drive, dtype=np.float64),
            np.ascontiguousarray(x0, dtype=np.float64),
            bool(identity),
        )

    def narma_recurrence(s, tau, bound):
        y, bad = _narma_recurrence_nb(
            np.ascontiguousarray(s, dtype=np.float64), int(tau), float(bound)
        )
        return y, int(bad)

else:
    drive_reservoir = drive_reservoir_py
    narma_recurrence = narma_recurrence_py


BACKEND = "numba" if HAS_NUMBA else "numpy"
