"""Continuum Dirac references: Hamiltonian symbols, exact spectral
propagation on periodic grids, and the walk-vs-continuum convergence harness.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from .engine import SpinorField, evolve, init_state
from .exceptions import UnsupportedError
from .linalg import identity, kron, pauli


@dataclass(frozen=True)
class ContinuumScenario:
    """Free or constant-field Dirac Hamiltonian in the walk's representation.

    2-spinors: H = -A0 + (A1 - k1) s3 [+ (k2 - A2) s2] + m s1
    4-spinors: H = -A0 + m s3 x I + sum_j (k_j - A_j) s1 x s_j
    """

    dim: int
    spinor_dim: int
    mass: float = 0.0
    potentials: tuple = ()

    def __post_init__(self):
        pots = tuple(float(a) for a in self.potentials) or (0.0,) * (self.dim + 1)
        if len(pots) != self.dim + 1:
            raise ValueError(f"need {self.dim + 1} potentials, got {len(pots)}")
        if (self.spinor_dim, self.dim) not in ((2, 1), (2, 2), (4, 3)):
            raise ValueError(f"no continuum model for {self.dim}D with {self.spinor_dim}-spinors")
        object.__setattr__(self, "potentials", pots)

    def hamiltonian_symbol(self, k):
        return hamiltonian_symbol(self, k)


def continuum_for_walk(walk):
    fields = walk.fields
    if fields is not None and not fields.is_constant:
        raise UnsupportedError("continuum reference needs constant potentials")
    pots = fields.components if fields is not None else ()
    return ContinuumScenario(walk.dim, walk.spinor_dim, walk.mass, pots)


def _symbol_batch(scenario, kmesh):
    """H(k) for broadcastable momentum arrays, shape (..., N, N)."""
    a = scenario.potentials
    m = scenario.mass
    shape = np.broadcast(*kmesh).shape if len(kmesh) > 1 else np.shape(kmesh[0])

    def term(coef, mat):
        return np.asarray(coef, dtype=float)[..., None, None] * mat

    n = scenario.spinor_dim
    h = np.broadcast_to((-a[0]) * identity(n), shape + (n, n)).copy()
    if n == 2:
        h += m * pauli(1)
        h += term(a[1] - kmesh[0], pauli(3))
        if scenario.dim == 2:
            h += term(kmesh[1] - a[2], pauli(2))
    else:
        h += m * kron(pauli(3), pauli(0))
        for j in range(3):
            h += term(kmesh[j] - a[j + 1], kron(pauli(1), pauli(j + 1)))
    return h


def hamiltonian_symbol(scenario, k):
    """H(k): derivatives replaced by i k."""
    k = np.atleast_1d(np.asarray(k, dtype=float))
    if k.shape != (scenario.dim,):
        raise ValueError(f"momentum must have {scenario.dim} components")
    return _symbol_batch(scenario, [np.asarray(kj) for kj in k])


def dirac_exact_evolve(state, scenario, t):
    """exp(-i H t) applied mode by mode in Fourier space (exact on the grid).

    Wavenumbers follow ``numpy.fft.fftfreq``, so on even grids the Nyquist
    mode is taken at -k_N.
    """
    if len(state.grid_dims) != scenario.dim or state.spinor_dim != scenario.spinor_dim:
        raise ValueError("state does not match the continuum scenario")
    axes = tuple(range(scenario.dim))
    freqs = [2 * np.pi * np.fft.fftfreq(n, d=h) for n, h in zip(state.grid_dims, state.spacing)]
    kmesh = np.meshgrid(*freqs, indexing="ij")
    lam, vec = np.linalg.eigh(_symbol_batch(scenario, kmesh))
    prop = np.einsum("...ij,...j,...kj->...ik", vec, np.exp(-1j * lam * t), vec.conj())
    psi_k = np.fft.fftn(state.amplitudes, axes=axes)
    psi_k = np.einsum("...ij,...j->...i", prop, psi_k)
    return SpinorField(np.fft.ifftn(psi_k, axes=axes), state.spacing)


@dataclass
class ConvergenceReport:
    epsilons: list
    steps: list
    errors: list
    pair_orders: list = field(default_factory=list)
    fitted_order: float = float("nan")

    def to_csv(self):
        lines = ["epsilon,steps,l2_error,pair_order"]
        for i, (eps, n, err) in enumerate(zip(self.epsilons, self.steps, self.errors)):
            order = "" if i == 0 else f"{self.pair_orders[i - 1]:.17g}"
            lines.append(f"{eps:.17g},{n},{err:.17g},{order}")
        lines.append(f"# fitted_order={self.fitted_order:.17g}")
        return "\n".join(lines) + "\n"


def _whole(value, what, tol=1e-9):
    n = round(value)
    if n < 1 or abs(value - n) > tol * max(1.0, abs(value)):
        raise ValueError(f"{what} must be a whole multiple (got ratio {value:.12g})")
    return int(n)


def convergence_study(scenario, walk_builder, epsilons, t, box, profile):
    """Walk vs exact continuum at fixed physical time ``t``.

    ``walk_builder(eps)`` returns the walk at lattice scale eps; ``box`` is
    the physical periodic domain per axis (a whole number of grid cells for
    every eps); ``profile`` holds ``init_state`` keyword arguments. The order
    is the least-squares slope of log error against log eps.
    """
    epsilons = [float(e) for e in epsilons]
    if len(epsilons) < 2 or any(b >= a for a, b in zip(epsilons, epsilons[1:])):
        raise ValueError("epsilons must be at least two strictly decreasing values")
    profile = dict(profile)
    kind = profile.pop("profile", "gaussian")

    steps, errors = [], []
    for eps in epsilons:
        walk = walk_builder(eps)
        if walk.has_site_coins:
            raise UnsupportedError("convergence studies need constant potentials")
        spacing = walk.lattice.grid_spacing
        grid = tuple(_whole(L / h, f"box along axis {j + 1}") for j, (L, h) in enumerate(zip(box, spacing)))
        n = _whole(t / walk.dt, f"T = {t} in units of dt = {walk.dt}")
        psi0 = init_state(grid, kind, spacing, walk.spinor_dim, **profile)
        diff = evolve(psi0, walk, n).amplitudes - dirac_exact_evolve(psi0, scenario, n * walk.dt).amplitudes
        steps.append(n)
        errors.append(math.sqrt(float(np.sum(np.abs(diff) ** 2))))

    pair = [
        math.log(e0 / e1) / math.log(h0 / h1) if e0 > 0 and e1 > 0 else float("nan")
        for (h0, e0), (h1, e1) in zip(zip(epsilons, errors), zip(epsilons[1:], errors[1:]))
    ]
    pos = [(h, e) for h, e in zip(epsilons, errors) if e > 0]
    fitted = float("nan")
    if len(pos) >= 2:
        fitted = float(np.polyfit(np.log([h for h, _ in pos]), np.log([e for _, e in pos]), 1)[0])
    return ConvergenceReport(epsilons, steps, errors, pair, fitted)
