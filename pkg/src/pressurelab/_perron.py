"""Power iteration for the Perron root of a nonnegative primitive matrix."""

from dataclasses import dataclass

import numpy as np

from pressurelab.errors import ConvergenceError

# Iterating on (M / rho + I)^(2^SQUARINGS), rho close to the Perron root,
# keeps the Perron vectors of M but pushes every other eigenvalue far below
# the leading one, even when M is close to periodic.
SQUARINGS = 8


@dataclass(frozen=True)
class PerronData:
    value: float
    left: np.ndarray
    right: np.ndarray
    residual: float
    iterations: int


def _residual(M, v):
    w = M @ v
    lam = w.sum() / v.sum()
    return lam, np.max(np.abs(w - lam * v)) / (lam * np.max(v))


def _spectral_radius_estimate(M, squarings=20):
    """Gelfand's formula on normalized repeated squares; a few digits suffice."""
    Q = M / M.max()
    log_scale = np.log(M.max())
    for _ in range(squarings):
        Q = Q @ Q
        top = Q.max()
        Q /= top
        log_scale = 2 * log_scale + np.log(top)
    return np.exp(log_scale / 2**squarings)


def _iterate(M, tol, max_iter):
    n = M.shape[0]
    # Shifting by roughly the Perron root keeps small entries of M visible.
    P = M / _spectral_radius_estimate(M) + np.eye(n)
    for _ in range(SQUARINGS):
        P = P @ P
        P /= P.max()
    v = np.full(n, 1.0 / n)
    lam, residual = _residual(M, v)
    for it in range(1, max_iter + 1):
        if residual <= tol:
            return lam, v, residual, it
        v = P @ v
        v /= v.sum()
        lam, residual = _residual(M, v)
    raise ConvergenceError("power iteration did not converge", residual, max_iter)


def perron(M, tol=1e-12, max_iter=100_000):
    """Leading eigenvalue with left and right Perron vectors of ``M``.

    The right vector sums to one and the left vector is scaled so that
    ``left @ right == 1``.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("matrix must be square")
    if np.any(M < 0):
        raise ValueError("matrix must be nonnegative")
    lam, right, res_r, it_r = _iterate(M, tol, max_iter)
    _, left, res_l, it_l = _iterate(M.T, tol, max_iter)
    left = left / (left @ right)
    return PerronData(
        value=float(lam),
        left=left,
        right=right,
        residual=float(max(res_r, res_l)),
        iterations=max(it_r, it_l),
    )
