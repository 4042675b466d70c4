"""Fisher information of the target angles and the sum-CRLB objective.

For echo snapshots Y = sum_t alpha_t G(theta_t) X + N with sample
covariance R_X = W W^H, the Fisher matrix of the angle vector has
entries F_ij = Re tr(W^H A_ij W) where

    A_ij = (2 L / sigma^2) conj(alpha_i) alpha_j Gdot(theta_i)^H Gdot(theta_j)

and Gdot is the angle derivative of the round-trip channel. The design
objective is f1 = tr(F^-1), the sum of the per-target CRLBs; its
Euclidean gradient is 2 Omega W with Omega assembled per target from
Cramer's rule, the restricted inverses coming from a rank-1 downdate of
F^-1 rather than cofactor expansions.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .arrays import target_channel_derivative
from .errors import NumericalError

COND_LIMIT = 1e12   # beyond this the target geometry is unresolvable


@dataclass(frozen=True)
class FisherState:
    matrix: np.ndarray      # F, real symmetric T x T
    inverse: np.ndarray
    objective: float        # tr(F^-1), the sum-CRLB

    @property
    def crlb_per_target(self):
        return np.diag(self.inverse).copy()


def coupling_matrices(scenario):
    """Precompute the A_ij grid, shape (T, T, M_T, M_T)."""
    angles = scenario.target_angles()
    t = angles.size
    if np.min(np.abs(angles[:, None] - angles[None, :]) + np.eye(t)) < 1e-9:
        raise NumericalError("duplicate target angles make the Fisher matrix singular")
    scale = 2.0 * scenario.snapshots / scenario.noise_power
    gdots = [target_channel_derivative(tg.angle, scenario.array) for tg in scenario.targets]
    alphas = np.array([tg.rcs for tg in scenario.targets])
    mt = scenario.array.num_tx
    a = np.empty((t, t, mt, mt), dtype=complex)
    for i in range(t):
        for j in range(t):
            a[i, j] = scale * np.conj(alphas[i]) * alphas[j] * (gdots[i].conj().T @ gdots[j])
    return a


def fisher_matrix(w, coupling):
    """Evaluate F, F^-1 and the sum-CRLB at a beamformer W."""
    w = np.asarray(w)
    t = coupling.shape[0]
    if w.shape[0] != coupling.shape[2]:
        raise ValueError("beamformer row count does not match the array")
    aw = np.einsum("ijmn,nc->ijmc", coupling, w)
    f = np.einsum("mc,ijmc->ij", w.conj(), aw).real
    asym = np.abs(f - f.T).max()
    if asym > 1e-9 * max(np.abs(f).max(), 1e-300):
        raise NumericalError("Fisher matrix lost symmetry")
    f = 0.5 * (f + f.T)
    eigs = np.linalg.eigvalsh(f)
    if eigs[0] <= 0 or eigs[-1] / eigs[0] > COND_LIMIT:
        raise NumericalError("Fisher matrix singular or near-singular: "
                             "targets not resolvable with this beamformer")
    chol = cho_factor(f, lower=True)
    inv = cho_solve(chol, np.eye(t))
    inv = 0.5 * (inv + inv.T)
    return FisherState(matrix=f, inverse=inv, objective=float(np.trace(inv)))


def _omega(state, coupling):
    """Auxiliary matrix with grad f1 = 2 Omega W.

    Per-target Cramer assembly: the derivative of [F^-1]_tt combines the
    inverse of F with row and column t removed (obtained by rank-1
    downdating F^-1) against the full inverse.
    """
    m = state.inverse
    t = m.shape[0]
    weights = np.zeros((t, t))
    for k in range(t):
        down = m - np.outer(m[:, k], m[k, :]) / m[k, k]
        # rows/columns k of the downdate vanish, leaving the restricted inverse
        weights += m[k, k] * (down - m)
    return np.einsum("ij,jimn->mn", weights, coupling)


def grad_f1(w, coupling, state=None):
    """Euclidean gradient of tr(F^-1) at W.

    Scaled so that f1(W + D) - f1(W) ~ Re tr(grad^H D) to first order.
    """
    if state is None:
        state = fisher_matrix(w, coupling)
    return 2.0 * _omega(state, coupling) @ np.asarray(w)
