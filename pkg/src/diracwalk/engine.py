"""Spinor fields on periodic index grids and their time evolution.

Each walk step reads the previous amplitude array and writes a fresh one,
so results never depend on evaluation order.
"""

from dataclasses import dataclass
import math

import numpy as np

from .walk import symbol


@dataclass(frozen=True, eq=False)
class SpinorField:
    """Amplitudes of shape ``grid_dims + (spinor_dim,)`` with per-axis spacing."""

    amplitudes: np.ndarray
    spacing: tuple

    def __post_init__(self):
        amp = np.asarray(self.amplitudes, dtype=complex)
        if amp.ndim < 2:
            raise ValueError("amplitudes need at least one grid axis and a spinor axis")
        if len(self.spacing) != amp.ndim - 1:
            raise ValueError("spacing must have one entry per grid axis")
        if not np.all(np.isfinite(amp)):
            raise ValueError("amplitudes must be finite")
        object.__setattr__(self, "amplitudes", amp)
        object.__setattr__(self, "spacing", tuple(float(s) for s in self.spacing))

    @property
    def grid_dims(self):
        return self.amplitudes.shape[:-1]

    @property
    def spinor_dim(self):
        return self.amplitudes.shape[-1]

    def coordinates(self):
        """Physical coordinate arrays, one per axis (site index times spacing)."""
        axes = [np.arange(n) * h for n, h in zip(self.grid_dims, self.spacing)]
        return np.meshgrid(*axes, indexing="ij")

    def translated(self, offset):
        """Roll every component by a whole number of sites."""
        axes = tuple(range(len(self.grid_dims)))
        return SpinorField(np.roll(self.amplitudes, tuple(offset), axis=axes), self.spacing)


def _check_grid(grid):
    grid = tuple(int(n) for n in grid)
    if any(n < 4 for n in grid):
        raise ValueError(f"every grid axis needs at least 4 sites, got {grid}")
    return grid


def _spinor(spinor, spinor_dim):
    if spinor is None:
        v = np.zeros(spinor_dim, dtype=complex)
        v[0] = 1.0
        return v
    v = np.asarray(spinor, dtype=complex)
    if v.shape != (spinor_dim,):
        raise ValueError(f"spinor must have {spinor_dim} components")
    if not np.any(v):
        raise ValueError("spinor must be nonzero")
    return v


def _normalized(amp, spacing):
    return SpinorField(amp / math.sqrt(float(np.sum(np.abs(amp) ** 2))), spacing)


def init_state(grid, profile, spacing, spinor_dim=2, *, site=None, component=0,
               center=None, width=None, momentum=None, wavenumber=None, spinor=None):
    """Initial spinor field.

    point       unit amplitude in ``component`` at index ``site`` (default origin)
    gaussian    exp(-|x - center|^2 / (4 width^2)) exp(i momentum.x) * spinor,
                summed over the nearest periodic images so the profile is smooth
                on the torus; normalized
    plane_wave  exp(i k.x) * spinor with integer ``wavenumber`` per axis
                (k = 2 pi n / L) or a commensurate physical ``momentum``;
                normalized
    """
    grid = _check_grid(grid)
    spacing = tuple(float(h) for h in spacing)
    if len(spacing) != len(grid):
        raise ValueError("spacing must have one entry per grid axis")
    dim = len(grid)
    lengths = np.array([n * h for n, h in zip(grid, spacing)])

    if profile == "point":
        site = (0,) * dim if site is None else tuple(int(s) for s in site)
        if not 0 <= component < spinor_dim:
            raise ValueError("component out of range")
        amp = np.zeros(grid + (spinor_dim,), dtype=complex)
        amp[site + (component,)] = 1.0
        return SpinorField(amp, spacing)

    vec = _spinor(spinor, spinor_dim)
    coords = [np.arange(n) * h for n, h in zip(grid, spacing)]
    mesh = np.meshgrid(*coords, indexing="ij")

    if profile == "gaussian":
        if width is None or not width > 0:
            raise ValueError("gaussian profile needs width > 0")
        x0 = np.zeros(dim) if center is None else np.asarray(center, dtype=float)
        k0 = np.zeros(dim) if momentum is None else np.asarray(momentum, dtype=float)
        env = np.zeros(grid)
        for image in np.ndindex(*(3,) * dim):
            r2 = sum((m - c - (i - 1) * L) ** 2 for m, c, i, L in zip(mesh, x0, image, lengths))
            env += np.exp(-r2 / (4 * width**2))
        phase = np.exp(1j * sum(k * m for k, m in zip(k0, mesh)))
        return _normalized((env * phase)[..., None] * vec, spacing)

    if profile == "plane_wave":
        if wavenumber is not None:
            n = np.asarray(wavenumber, dtype=float)
            if np.any(n != np.round(n)):
                raise ValueError("wavenumbers must be integers")
            k = 2 * np.pi * n / lengths
        elif momentum is not None:
            k = np.asarray(momentum, dtype=float)
            n = k * lengths / (2 * np.pi)
            if np.any(np.abs(n - np.round(n)) > 1e-9):
                raise ValueError(f"momentum {tuple(k)} is not commensurate with the periodic grid")
        else:
            raise ValueError("plane_wave needs wavenumber or momentum")
        phase = np.exp(1j * sum(kj * m for kj, m in zip(k, mesh)))
        return _normalized(phase[..., None] * vec, spacing)

    raise ValueError(f"unknown profile {profile!r}")


def random_state(grid, spinor_dim, spacing, rng):
    """Normalized state with independent complex Gaussian amplitudes."""
    shape = tuple(grid) + (spinor_dim,)
    amp = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return _normalized(amp, spacing)


def _apply(amp, s):
    if s.kind == "shift":
        axes = tuple(range(amp.ndim - 1))
        out = np.empty_like(amp)
        for c, sign in enumerate(s.signs):
            out[..., c] = np.roll(amp[..., c], tuple(-sign * st for st in s.step), axis=axes)
        return out
    if s.kind == "uniform_coin":
        return amp @ s.matrix.T
    return np.einsum("...ij,...j->...i", s.coin_field, amp)


def _check_compatible(state, walk):
    if state.spinor_dim != walk.spinor_dim:
        raise ValueError(
            f"state has {state.spinor_dim} components, walk needs {walk.spinor_dim}"
        )
    if len(state.grid_dims) != walk.dim:
        raise ValueError(f"state grid is {len(state.grid_dims)}D, walk is {walk.dim}D")
    shape = walk.grid_shape
    if shape is not None and tuple(shape) != tuple(state.grid_dims):
        raise ValueError(f"walk potentials sampled on {shape}, state grid is {state.grid_dims}")
    if not np.allclose(state.spacing, walk.lattice.grid_spacing, rtol=1e-12, atol=0):
        raise ValueError("state spacing does not match the walk lattice")


def step(state, walk):
    """One application of the walk operator."""
    _check_compatible(state, walk)
    amp = state.amplitudes
    for s in walk.steps:
        amp = _apply(amp, s)
    return SpinorField(amp, state.spacing)


def evolve(state, walk, n_steps):
    if n_steps < 0 or int(n_steps) != n_steps:
        raise ValueError("n_steps must be a non-negative integer")
    _check_compatible(state, walk)
    amp = state.amplitudes
    for _ in range(int(n_steps)):
        for s in walk.steps:
            amp = _apply(amp, s)
    return SpinorField(amp, state.spacing)


def total_norm(state):
    return float(np.sum(np.abs(state.amplitudes) ** 2))


def site_probability(state):
    return np.sum(np.abs(state.amplitudes) ** 2, axis=-1)


def mean_position(state):
    """Probability-weighted mean of the site coordinates (no unwrapping)."""
    p = site_probability(state)
    total = float(np.sum(p))
    return np.array([float(np.sum(p * x)) / total for x in state.coordinates()])


def wrap_quasi_energy(e, dt):
    """Map to the Brillouin zone (-pi/dt, pi/dt]."""
    period = 2 * np.pi / dt
    e = np.asarray(e, dtype=float)
    w = e - period * np.floor((e + np.pi / dt) / period)
    return np.where(w <= -np.pi / dt, w + period, w)


def dispersion(walk, k):
    """Quasi-energies -arg(lambda)/dt of the one-step symbol, ascending."""
    lam = np.linalg.eigvals(symbol(walk, k))
    return np.sort(wrap_quasi_energy(-np.angle(lam) / walk.dt, walk.dt))
