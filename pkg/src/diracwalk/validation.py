"""Input validation helpers shared by the estimator front end."""

import numpy as np


def check_state_array(x, spinor_dim, dim):
    """Complex array of shape (n_samples, *grid, spinor_dim).

    A single state without the batch axis is accepted and given one.
    Returns ``(array, had_batch_axis)``.
    """
    x = np.asarray(x)
    if not (np.issubdtype(x.dtype, np.number)):
        raise ValueError("state array must be numeric")
    x = x.astype(complex, copy=False)
    if x.ndim == dim + 1:
        batched, x = False, x[None]
    elif x.ndim == dim + 2:
        batched = True
    else:
        raise ValueError(
            f"expected shape (n_samples, {'n, ' * dim}{spinor_dim}) or a single state, got {x.shape}"
        )
    if x.shape[-1] != spinor_dim:
        raise ValueError(f"last axis must hold {spinor_dim} spinor components, got {x.shape[-1]}")
    if x.shape[0] == 0:
        raise ValueError("need at least one state")
    if not np.all(np.isfinite(x)):
        raise ValueError("state array contains non-finite values")
    return x, batched


def check_momenta(k, dim):
    """Float array of shape (n_points, dim); scalars and 1-D inputs are promoted."""
    k = np.asarray(k, dtype=float)
    if k.ndim == 0:
        k = k.reshape(1, 1)
    elif k.ndim == 1:
        k = k.reshape(-1, 1) if dim == 1 else k.reshape(1, -1)
    if k.ndim != 2 or k.shape[1] != dim:
        raise ValueError(f"momenta must have shape (n_points, {dim}), got {k.shape}")
    if not np.all(np.isfinite(k)):
        raise ValueError("momenta must be finite")
    return k


def check_positive(value, name):
    value = float(value)
    if not value > 0:
        raise ValueError(f"{name} must be positive, got {value}")
    return value
