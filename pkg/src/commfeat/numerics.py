"""Numerically stable scalar links shared by the factorization and the classifier."""

import numpy as np

# Smallest/largest doubles strictly inside (0, 1); used to keep probabilities
# off the boundary so downstream logs stay finite.
_P_LO = np.finfo(float).tiny
_P_HI = np.nextafter(1.0, 0.0)


def sigmoid(x):
    """Logistic function 1 / (1 + e^{-x}), overflow-safe for any real x.

    Args:
        x: scalar or array of logits.
    Returns:
        Array (or scalar) of the same shape with values in [0, 1].
    """
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out if out.ndim else float(out)


def log_sigmoid(x):
    """log σ(x) via the two-branch form that never overflows.

    For x ≥ 0 uses -log(1 + e^{-x}); for x < 0 uses x - log(1 + e^{x}).

    Args:
        x: scalar or array of logits.
    Returns:
        Array (or scalar) of log-probabilities, always finite.
    """
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = -np.log1p(np.exp(-x[pos]))
    out[~pos] = x[~pos] - np.log1p(np.exp(x[~pos]))
    return out if out.ndim else float(out)


def logit(p):
    """Inverse of :func:`sigmoid` for p strictly inside (0, 1)."""
    p = np.asarray(p, dtype=float)
    out = np.log(p) - np.log1p(-p)
    return out if out.ndim else float(out)


def clip_probability(p):
    """Clamp probabilities strictly inside (0, 1) without visibly moving them."""
    return np.clip(p, _P_LO, _P_HI)
