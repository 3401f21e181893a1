"""Input-validation helpers raising :class:`~commfeat.errors.InputError`."""

import numpy as np

from .errors import InputError


def check_node_index(v, n, name="node id"):
    """Validate a node index against [0, n)."""
    v = int(v)
    if not 0 <= v < n:
        raise InputError(f"{name} {v} out of range [0, {n})")
    return v


def check_binary_array(a, name):
    """Coerce to a 1-D integer array with entries in {0, 1}."""
    a = np.asarray(a)
    if a.ndim != 1:
        raise InputError(f"{name} must be 1-dimensional, got shape {a.shape}")
    a = a.astype(int)
    bad = ~np.isin(a, (0, 1))
    if bad.any():
        raise InputError(f"{name} must be binary; found value {a[bad][0]}")
    return a


def check_same_length(*named_arrays):
    """Validate that all (name, array) pairs share one length; return it."""
    lengths = {name: len(arr) for name, arr in named_arrays}
    if len(set(lengths.values())) > 1:
        raise InputError(f"length mismatch: {lengths}")
    n = next(iter(lengths.values()))
    if n == 0:
        raise InputError("empty input")
    return n


def check_confidences(t, name="confidences"):
    """Coerce to a float array with entries strictly inside (0, 1)."""
    t = np.asarray(t, dtype=float)
    if t.size and (t.min() <= 0.0 or t.max() >= 1.0):
        raise InputError(f"{name} must lie strictly inside (0, 1)")
    return t


def check_matrix(x, name, n_rows=None):
    """Coerce to a 2-D float array with all-finite entries."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 2:
        raise InputError(f"{name} must be 2-dimensional, got shape {x.shape}")
    if not np.isfinite(x).all():
        raise InputError(f"{name} contains non-finite entries")
    if n_rows is not None and x.shape[0] != n_rows:
        raise InputError(f"{name} has {x.shape[0]} rows, expected {n_rows}")
    return x
