"""Complex oblique manifold: matrices with fixed-norm rows.

The beamformer W (M_T x (K+M_T)) lives on the manifold where every row
has Euclidean norm rho = sqrt(P_max/M_T), so each antenna transmits at
exactly its power share. Tangent projection, row-renormalizing
retraction, and projection-based vector transport are the three
operators the conjugate-gradient solver needs.
"""

import numpy as np

from .errors import NumericalError

ROW_TOL = 1e-10   # relative row-norm tolerance for manifold membership


def inner(a, b):
    """Real trace inner product Re tr(A B^H)."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError("shape mismatch in inner product")
    return float(np.sum(a.real * b.real + a.imag * b.imag))


def row_norms(w):
    return np.linalg.norm(w, axis=1)


def is_on_manifold(w, radius, tol=ROW_TOL):
    return bool(np.all(np.abs(row_norms(w) - radius) <= tol * radius))


def check_on_manifold(w, radius, tol=1e-8):
    # loose guard on hot paths; retraction keeps iterates far tighter
    if not is_on_manifold(w, radius, tol=tol):
        gap = np.abs(row_norms(w) - radius).max() / radius
        raise ValueError(f"point off manifold (relative row-norm gap {gap:.2e})")


def project_tangent(w, x, radius):
    """Project X onto the tangent space at W.

    Removes from each row of X its component along the same row of W:
    Pi(X) = X - (1/rho^2) Re{(W X^H) o I} W.
    """
    check_on_manifold(w, radius)
    coef = np.sum(w.real * x.real + w.imag * x.imag, axis=1) / radius**2
    return x - coef[:, None] * w


def retract(y, radius):
    """Map an ambient matrix back onto the manifold by row renormalization."""
    norms = row_norms(y)
    if np.any(norms == 0.0):
        raise NumericalError("retraction of a zero row is undefined")
    return y * (radius / norms)[:, None]


def transport(w_new, d, radius):
    """Move a tangent vector to the tangent space at w_new (by projection)."""
    return project_tangent(w_new, d, radius)


def random_point(num_rows, num_cols, radius, rng):
    """Random manifold point (rows of a complex Gaussian, renormalized)."""
    z = rng.standard_normal((num_rows, num_cols)) \
        + 1j * rng.standard_normal((num_rows, num_cols))
    return retract(z, radius)


def random_tangent(w, radius, rng):
    z = rng.standard_normal(w.shape) + 1j * rng.standard_normal(w.shape)
    return project_tangent(w, z, radius)
