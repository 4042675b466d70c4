"""Communication side: rates, precoding, and the rate-feasibility cone.

The per-user minimum-rate constraint rewrites as membership of a stacked
vector x_k(W) = H_k vec(W) + z in a second-order cone: the head of x_k
collects every beam seen by user k plus the noise standard deviation,
the tail carries sqrt(Gamma_k) times the user's own beam, and the
constraint is head-norm <= tail-modulus. f2 sums the squared distances
to the cones; driving it to zero restores all rate targets.

Also here: zero-forcing directions, the equal-rate power allocation
(all users exactly at the target rate given sensing interference), and
the max-min ZF rate found by bisection on the power budget.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleError, NumericalError

RANK_TOL = 1e-12


@dataclass(frozen=True)
class RateReport:
    sinr: np.ndarray        # linear, per user
    rate: np.ndarray        # bits/s/Hz, log2(1 + sinr)
    min_rate: float


@dataclass(frozen=True)
class SocInstance:
    matrix: np.ndarray      # H_k, (K+M_T+2) x M_T(K+M_T)
    offset: np.ndarray      # z, sigma in the second-to-last slot
    gamma: float            # SINR target 2^r_min - 1
    big_gamma: float        # 1 + 1/gamma
    user: int

    def x_of(self, w):
        return self.matrix @ np.reshape(w, -1, order="F") + self.offset


def rates(w, channels, noise_power):
    """SINR and rate of every user under beamformer W.

    ``channels`` holds user channel vectors as columns (M_T x K). The
    first K columns of W serve the users; every other column, sensing
    included, is interference.
    """
    h = np.asarray(channels)
    w = np.asarray(w)
    k = h.shape[1]
    if k == 0:
        return RateReport(np.zeros(0), np.zeros(0), np.inf)
    if h.shape[0] != w.shape[0]:
        raise ValueError("channel and beamformer row counts differ")
    if w.shape[1] < k:
        raise ValueError("fewer beamformer columns than users")
    p = np.abs(h.conj().T @ w) ** 2          # K x columns
    sig = p[np.arange(k), np.arange(k)]
    interf = p.sum(axis=1) - sig
    sinr = sig / (interf + noise_power)
    rate = np.log2(1.0 + sinr)
    return RateReport(sinr=sinr, rate=rate, min_rate=float(rate.min()))


def zf_precoder(channels):
    """Unit-norm zero-forcing directions, h_j^H v_k = 0 for j != k."""
    h = np.asarray(channels)
    k = h.shape[1]
    if k < 1:
        raise ValueError("zero-forcing needs at least one user")
    if k > h.shape[0]:
        raise NumericalError("more users than transmit antennas: ZF impossible")
    s = np.linalg.svd(h, compute_uv=False)
    if s[-1] <= RANK_TOL * s[0]:
        raise NumericalError("rank-deficient user channels: ZF impossible")
    v = np.linalg.pinv(h.conj().T)           # columns satisfy h_j^H v_k = delta_jk
    return v / np.linalg.norm(v, axis=0)


def _sensing_interference(channels, w_sensing):
    h = np.asarray(channels)
    if w_sensing is None or np.size(w_sensing) == 0:
        return np.zeros(h.shape[1])
    return (np.abs(h.conj().T @ np.asarray(w_sensing)) ** 2).sum(axis=1)


def equal_rate_power(channels, directions, w_sensing, noise_power, r_min):
    """Powers putting every user exactly at its target rate.

    With columns w_k = sqrt(p_k) v_k / ||v_k|| and fixed sensing block,
    rate_k = r_min for all k is a linear system in p. Componentwise
    nonnegativity of the solution is the feasibility test; a negative
    entry raises with the offending user index.
    """
    h = np.asarray(channels)
    v = np.asarray(directions)
    k = h.shape[1]
    r = np.broadcast_to(np.asarray(r_min, dtype=float), (k,))
    if np.any(r < 0):
        raise ValueError("rate targets must be nonnegative")
    gamma = 2.0 ** r - 1.0
    s = _sensing_interference(channels, w_sensing)
    p = np.zeros(k)
    active = gamma > 0.0
    if not np.any(active):
        return p
    idx = np.flatnonzero(active)
    vn2 = np.linalg.norm(v[:, idx], axis=0) ** 2
    g = np.abs(h.conj().T @ v[:, idx]) ** 2 / vn2[None, :]   # g[j, i] = |h_j^H v_i|^2/||v_i||^2
    g = g[idx, :]
    delta = -g
    delta[np.arange(idx.size), np.arange(idx.size)] = np.diag(g) / gamma[idx]
    try:
        sol = np.linalg.solve(delta, noise_power + s[idx])
    except np.linalg.LinAlgError as exc:
        raise InfeasibleError(
            "equal-rate system is singular: interference exactly balances "
            "the signal at the requested rates") from exc
    bad = np.flatnonzero(sol < 0)
    if bad.size:
        user = int(idx[bad[0]])
        raise InfeasibleError(
            f"equal-rate allocation needs negative power for user {user}",
            detail={"user": user, "power": float(sol[bad[0]])})
    p[idx] = sol
    return p


def max_min_zf_rate(channels, noise_power, p_max, tol=1e-6, bracket=(0.0, 40.0)):
    """Largest common rate a ZF design can give every user under p_max.

    Bisection on the rate until the equal-rate allocation consumes the
    whole budget (relative residual below ``tol``). No sensing block.
    """
    v = zf_precoder(channels)

    def total(rate):
        return equal_rate_power(channels, v, None, noise_power, rate).sum()

    lo, hi = bracket
    while total(hi) < p_max:
        hi *= 2.0
        if hi > 512.0:
            raise NumericalError("max-min rate bisection bracket exhausted")
    best = lo
    while hi - lo > 1e-13 * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        t = total(mid)
        if abs(t - p_max) <= tol * p_max:
            return mid
        if t > p_max:
            hi = mid
        else:
            lo = mid
            best = mid
    return best


def soc_assemble(channels, r_min, noise_power, num_streams=None):
    """Per-user cone data for the feasibility objective.

    x_k(W) stacks [h_k^H w_1, ..., h_k^H w_N, sigma,
    sqrt(Gamma_k) h_k^H w_k]; the rate constraint of user k is
    ||head|| <= |tail|. The noise slot carries sigma, not sigma^2, so
    that the squared norm reproduces the SINR inequality exactly.
    """
    h = np.asarray(channels)
    mt, k = h.shape
    if k < 1:
        raise ValueError("cone assembly needs at least one user")
    n = num_streams if num_streams is not None else k + mt
    if n < k:
        raise ValueError("stream count below user count")
    r = np.broadcast_to(np.asarray(r_min, dtype=float), (k,))
    if np.any(r <= 0):
        raise ValueError("rate targets must be positive for cone assembly")
    sigma = np.sqrt(noise_power)
    out = []
    for j in range(k):
        gamma = 2.0 ** r[j] - 1.0
        big_gamma = 1.0 + 1.0 / gamma
        head = np.kron(np.eye(n), h[:, j].conj()[None, :])
        tail = np.zeros((1, mt * n), dtype=complex)
        tail[0, j * mt:(j + 1) * mt] = np.sqrt(big_gamma) * h[:, j].conj()
        mat = np.vstack([head, np.zeros((1, mt * n)), tail])
        z = np.zeros(n + 2, dtype=complex)
        z[n] = sigma
        out.append(SocInstance(matrix=mat, offset=z, gamma=float(gamma),
                               big_gamma=float(big_gamma), user=j))
    return out


def soc_project(x):
    """Closed-form projection onto the cone {||head|| <= |tail|}.

    Three cases on (||head||, |tail|); the boundary-exterior case
    averages the two and keeps both the head direction and the tail
    phase (phase factor 1 when the tail is exactly zero).
    """
    x = np.asarray(x)
    if x.size < 2:
        raise ValueError("cone vectors have at least two entries")
    head, tail = x[:-1], x[-1]
    hn = np.linalg.norm(head)
    tm = abs(tail)
    if hn <= tm:
        return x.copy()
    if hn <= -tm:
        return np.zeros_like(x)
    mid = 0.5 * (hn + tm)
    phase = tail / tm if tm > 0 else 1.0
    y = np.empty_like(x)
    y[:-1] = mid * head / hn
    y[-1] = mid * phase
    return y


def f2_and_grad(w, instances):
    """Sum of squared cone distances and its Euclidean gradient.

    f2(W) = sum_k ||x_k(W) - proj(x_k(W))||^2, zero exactly when every
    user meets its rate target; grad = 2 unvec(sum_k H_k^H residual_k).
    """
    w = np.asarray(w)
    vec = np.reshape(w, -1, order="F")
    total = 0.0
    acc = np.zeros(vec.size, dtype=complex)
    for inst in instances:
        if inst.matrix.shape[1] != vec.size:
            raise ValueError("cone instance does not match beamformer size")
        x = inst.matrix @ vec + inst.offset
        resid = x - soc_project(x)
        total += float(np.vdot(resid, resid).real)
        acc += inst.matrix.conj().T @ resid
    grad = 2.0 * np.reshape(acc, w.shape, order="F")
    return total, grad
