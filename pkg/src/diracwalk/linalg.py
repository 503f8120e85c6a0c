"""Small dense complex matrices: Pauli/gamma constants and 2x2 helpers.

Matrices are plain ``numpy`` arrays of dtype complex128. Functions never
modify their inputs.
"""

import math

import numpy as np

_PAULI = (
    np.array([[1, 0], [0, 1]], dtype=complex),
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)
for _m in _PAULI:
    _m.setflags(write=False)


def pauli(index):
    """Return sigma_index; index 0 is the 2x2 identity."""
    if isinstance(index, bool) or not isinstance(index, (int, np.integer)):
        raise ValueError(f"pauli index must be an integer, got {index!r}")
    if not 0 <= index <= 3:
        raise ValueError(f"pauli index must be in 0..3, got {index}")
    return _PAULI[index].copy()


def identity(dim):
    return np.eye(dim, dtype=complex)


def kron(a, b):
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def dagger(a):
    return np.conj(np.asarray(a, dtype=complex)).T.copy()


def max_norm(a):
    """Largest absolute entry."""
    a = np.asarray(a)
    return float(np.max(np.abs(a))) if a.size else 0.0


def unitarity_residual(a):
    """max-norm of A^dagger A - I."""
    a = np.asarray(a, dtype=complex)
    return max_norm(dagger(a) @ a - np.eye(a.shape[0]))


def hermiticity_residual(a):
    a = np.asarray(a, dtype=complex)
    return max_norm(a - dagger(a))


def gamma_matrices():
    """Dirac-representation gammas (gamma^0 .. gamma^3) as 4x4 arrays."""
    s0, s1, s2, s3 = _PAULI
    isig2 = 1j * s2
    return (kron(s3, s0), kron(isig2, s1), kron(isig2, s2), kron(isig2, s3))


def pauli_vector(coeffs):
    """p1*sigma1 + p2*sigma2 + p3*sigma3."""
    p1, p2, p3 = coeffs
    return p1 * _PAULI[1] + p2 * _PAULI[2] + p3 * _PAULI[3]


def _phase_fix(v, tol=1e-14):
    # first component with non-negligible modulus becomes real positive
    for comp in v:
        if abs(comp) > tol:
            return v * (abs(comp) / comp)
    return v


def hermitian_eigen2(m, tol=1e-10):
    """Closed-form eigendecomposition of a Hermitian 2x2 matrix.

    Returns ``(lam_plus, lam_minus, v_plus, v_minus)`` with
    ``lam_plus >= lam_minus``. Eigenvectors are orthonormal and each has its
    first nonzero component real and positive.
    """
    m = np.asarray(m, dtype=complex)
    if m.shape != (2, 2):
        raise ValueError(f"expected a 2x2 matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    if hermiticity_residual(m) > tol:
        raise ValueError("matrix is not Hermitian")

    a = m[0, 0].real
    d = m[1, 1].real
    b = 0.5 * (m[0, 1] + np.conj(m[1, 0]))
    mean = 0.5 * (a + d)
    radius = float(np.hypot(0.5 * (a - d), abs(b)))
    lam_p, lam_m = mean + radius, mean - radius

    if abs(b) == 0.0 or radius == 0.0:
        if a >= d:
            v_p = np.array([1, 0], dtype=complex)
        else:
            v_p = np.array([0, 1], dtype=complex)
    else:
        # work with the traceless part scaled to unit radius (avoids underflow);
        # two equivalent null-space candidates, take the better conditioned one
        s = max(abs(0.5 * (a - d)), abs(b.real), abs(b.imag))
        h, bn = 0.5 * (a - d) / s, complex(b.real / s, b.imag / s)
        r = math.hypot(h, abs(bn))
        h, bn = h / r, bn / r
        c1 = np.array([bn, 1 - h], dtype=complex)
        c2 = np.array([1 + h, np.conj(bn)], dtype=complex)
        v_p = c1 if np.linalg.norm(c1) >= np.linalg.norm(c2) else c2
        v_p = v_p / np.linalg.norm(v_p)

    v_p = _phase_fix(v_p)
    v_m = _phase_fix(np.array([-np.conj(v_p[1]), np.conj(v_p[0])]))
    return lam_p, lam_m, v_p, v_m
