"""Coin synthesis: unitary conjugations of sigma_3, time-dilation roots,
and representation changes of whole walks."""

from dataclasses import dataclass, replace
import math

import numpy as np

from .exceptions import InfeasibleError
from .linalg import (
    dagger,
    hermitian_eigen2,
    hermiticity_residual,
    identity,
    max_norm,
    pauli,
    pauli_vector,
    unitarity_residual,
)

SPECTRUM_TOL = 1e-9
ROOT_TOL = 1e-9

#: returned by :func:`solve_time_dilation` when every factor holds for all alpha
UNCONSTRAINED = "unconstrained"

_R2 = 1 / math.sqrt(2)
_R3 = math.sqrt(3)

# Standard closed-form coins with the Hermitian target each must conjugate sigma_3 onto.
STANDARD_COINS = {
    "U": (
        np.array([[_R2, -1j * _R2], [-1j * _R2, _R2]]),
        -pauli(2),
    ),
    "U1": (np.array([[_R2, _R2], [_R2, -_R2]], dtype=complex), pauli(1)),
    "U2": (np.array([[_R2, _R2], [1j * _R2, -1j * _R2]]), pauli(2)),
    "U3": (identity(2), pauli(3)),
    "U_u": (
        np.array([[_R3 / 2, -0.5j], [-0.5j, _R3 / 2]]),
        0.5 * pauli(3) - (_R3 / 2) * pauli(2),
    ),
    "U_v": (
        np.array([[0.5j, _R3 / 2], [_R3 / 2, 0.5j]]),
        -(0.5 * pauli(3) + (_R3 / 2) * pauli(2)),
    ),
}


@dataclass(frozen=True)
class ConjugationSolution:
    target: np.ndarray
    u: np.ndarray
    residual: float


@dataclass(frozen=True)
class AffinePauliFactor:
    """Pauli-vector coefficients p_k(alpha) = const[k] + slope[k] * alpha."""

    const: tuple
    slope: tuple
    label: str = ""

    def __post_init__(self):
        const = tuple(float(c) for c in self.const)
        slope = tuple(float(s) for s in self.slope)
        if len(const) != 3 or len(slope) != 3:
            raise ValueError("AffinePauliFactor needs three (const, slope) pairs")
        if not all(math.isfinite(v) for v in const + slope):
            raise ValueError(f"factor {self.label!r} has non-finite coefficients")
        object.__setattr__(self, "const", const)
        object.__setattr__(self, "slope", slope)

    def coefficients(self, alpha):
        return tuple(c + s * alpha for c, s in zip(self.const, self.slope))

    def matrix(self, alpha):
        return pauli_vector(self.coefficients(alpha))

    def is_zero(self):
        return not any(self.const) and not any(self.slope)


def conjugation_residual(u, target):
    """max-norm of U sigma_3 U^dagger - target."""
    u = np.asarray(u, dtype=complex)
    return max_norm(u @ pauli(3) @ dagger(u) - target)


def solve_sigma3_conjugation(m):
    """Find unitary U with U sigma_3 U^dagger = m.

    Solvable exactly when m has eigenvalues +1 and -1. The columns of U are
    the (+1, -1) eigenvectors, phase-fixed so the result is deterministic.
    Raises :class:`InfeasibleError` (witness: the eigenvalues) otherwise.
    """
    m = np.asarray(m, dtype=complex)
    if m.shape != (2, 2):
        raise ValueError(f"target must be 2x2, got {m.shape}")
    if hermiticity_residual(m) > 1e-10:
        raise ValueError("target is not Hermitian")
    lam_p, lam_m, v_p, v_m = hermitian_eigen2(m)
    if abs(lam_p - 1) > SPECTRUM_TOL or abs(lam_m + 1) > SPECTRUM_TOL:
        raise InfeasibleError(
            f"no unitary conjugates sigma_3 onto a matrix with eigenvalues "
            f"({lam_p:.6g}, {lam_m:.6g})",
            witness={"eigenvalues": [lam_p, lam_m]},
        )
    u = np.column_stack([v_p, v_m])
    return ConjugationSolution(target=m, u=u, residual=conjugation_residual(u, m))


def _quadratic_roots(a, b, c):
    """Real roots of a x^2 + b x + c; None if the equation holds identically."""
    scale = max(abs(a), abs(b), abs(c), 1.0)
    if abs(a) <= 1e-15 * scale:
        if abs(b) <= 1e-15 * scale:
            return None if abs(c) <= ROOT_TOL else []
        return [-c / b]
    disc = b * b - 4 * a * c
    if disc < -1e-12 * scale * scale:
        return []
    sq = math.sqrt(max(disc, 0.0))
    q = -0.5 * (b + math.copysign(sq, b))
    if q == 0.0:
        return [0.0]
    return sorted({q / a, c / q})


def _admissible(alpha):
    return alpha > ROOT_TOL and abs(alpha - 1) > ROOT_TOL


def solve_time_dilation(factors):
    """Real alpha > 0, alpha != 1 making every factor sigma_3-conjugate.

    Each factor's Pauli vector must have unit length, which is a quadratic
    in alpha. Per-factor roots are intersected with an absolute tolerance of
    1e-9. Returns a sorted list of alphas, or :data:`UNCONSTRAINED` if no
    factor restricts alpha. Raises :class:`InfeasibleError` with the
    per-factor root sets when the intersection is empty.
    """
    factors = list(factors)
    if not factors:
        raise ValueError("need at least one factor")
    root_sets = {}
    candidates = None
    for i, f in enumerate(factors):
        if f.is_zero():
            raise ValueError(f"factor {f.label or i!r} is identically zero")
        a = sum(s * s for s in f.slope)
        b = 2 * sum(c * s for c, s in zip(f.const, f.slope))
        c = sum(c * c for c in f.const) - 1
        roots = _quadratic_roots(a, b, c)
        key = f.label or str(i)
        if roots is None:
            root_sets[key] = UNCONSTRAINED
            continue
        roots = [r for r in roots if _admissible(r)]
        root_sets[key] = roots
        if candidates is None:
            candidates = roots
        else:
            candidates = [r for r in candidates if any(abs(r - s) <= ROOT_TOL for s in roots)]

    if candidates is None:
        return UNCONSTRAINED
    if not candidates:
        raise InfeasibleError(
            "no real time dilation satisfies every factor",
            witness={"roots": root_sets},
        )
    return sorted(candidates)


def representation_transform(walk, u_tilde):
    """Walk for the representation rotated by ``u_tilde``: U W U^dagger."""
    from .walk import WalkStep

    u_tilde = np.asarray(u_tilde, dtype=complex)
    if u_tilde.shape != (walk.spinor_dim, walk.spinor_dim):
        raise ValueError(
            f"u_tilde shape {u_tilde.shape} does not match spinor dimension {walk.spinor_dim}"
        )
    if unitarity_residual(u_tilde) > 1e-10:
        raise ValueError("u_tilde is not unitary")
    steps = (
        (WalkStep.coin(dagger(u_tilde), label="repr_in"),)
        + tuple(walk.steps)
        + (WalkStep.coin(u_tilde, label="repr_out"),)
    )
    return replace(walk, steps=steps)
