"""Finite-state continuous-time Markov chains: twisted generators
``Q + diag(V)``, their principal eigendata, Donsker-Varadhan entropy,
Feynman-Kac semigroups (exact and Monte Carlo), the Doob transform and
occupation measures of its trajectories.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from pressurelab._perron import perron
from pressurelab.errors import ConvergenceError, ValidationError

log = logging.getLogger(__name__)

BLOCK_SIZE = 4096
_BOUNDARY_MIX = 1e-9


@dataclass(frozen=True, eq=False)
class MarkovGenerator:
    """Conservative rate matrix of an irreducible chain."""

    Q: np.ndarray

    def __post_init__(self):
        Q = np.array(self.Q, dtype=float)
        if Q.ndim != 2 or Q.shape[0] != Q.shape[1] or Q.shape[0] < 1:
            raise ValidationError("rate matrix must be square and nonempty")
        off = Q - np.diag(np.diag(Q))
        if (off < 0).any():
            raise ValidationError("off-diagonal rates must be nonnegative")
        scale = max(1.0, np.abs(Q).max())
        if np.abs(Q.sum(axis=1)).max() > 1e-12 * scale:
            raise ValidationError("rate matrix rows must sum to zero (conservative generator)")
        reach = (off > 0) | np.eye(len(Q), dtype=bool)
        for _ in range(len(Q)):
            reach = reach | ((reach.astype(int) @ reach.astype(int)) > 0)
        if not reach.all():
            raise ValidationError("rate graph is not strongly connected (chain is reducible)")
        Q.setflags(write=False)
        object.__setattr__(self, "Q", Q)

    @property
    def n(self) -> int:
        return self.Q.shape[0]


@dataclass(frozen=True)
class TwistedSpectrum:
    lambda_V: float
    r_V: np.ndarray
    l_V: np.ndarray
    mu_V: np.ndarray
    residual: float


@dataclass(frozen=True)
class Path:
    """Piecewise-constant trajectory: ``states[i]`` holds on ``[times[i], times[i+1])``."""

    times: np.ndarray
    states: np.ndarray


@dataclass(frozen=True)
class DVEntropyResult:
    value: float
    gradient_norm: float
    iterations: int
    converged: bool


def _check_V(L, V):
    V = np.asarray(V, dtype=float)
    if V.shape != (L.n,):
        raise ValidationError(f"potential must have {L.n} entries")
    return V


def twisted_spectrum(L: MarkovGenerator, V, tol: float = 1e-13, max_iter: int = 100_000) -> TwistedSpectrum:
    V = _check_V(L, V)
    K = L.Q + np.diag(V)
    s = 1.0 + np.abs(K).sum(axis=1).max()
    p = perron(K + s * np.eye(L.n), tol=tol, max_iter=max_iter)
    lam = p.value - s
    r, l = p.right, p.left
    residual = max(
        np.abs(K @ r - lam * r).max() / np.abs(r).max(),
        np.abs(l @ K - lam * l).max() / np.abs(l).max(),
    )
    mu = l * r
    return TwistedSpectrum(float(lam), r, l, mu / mu.sum(), float(residual))


def stationary_distribution(L: MarkovGenerator) -> np.ndarray:
    return twisted_spectrum(L, np.zeros(L.n)).mu_V


def expm(A: np.ndarray) -> np.ndarray:
    """Matrix exponential by scaling and squaring of a truncated Taylor series."""
    A = np.asarray(A, dtype=float)
    norm = np.abs(A).sum(axis=0).max()
    squarings = max(0, int(np.ceil(np.log2(norm / 0.5)))) if norm > 0.5 else 0
    B = A / 2.0**squarings
    result = np.eye(len(A))
    term = np.eye(len(A))
    for j in range(1, 60):
        term = term @ B / j
        result = result + term
        if np.abs(term).max() < 1e-16 * np.abs(result).max():
            break
    for _ in range(squarings):
        result = result @ result
    return result


def feynman_kac_exact(L: MarkovGenerator, V, t: float, g, x: int) -> float:
    """``E_x[g(X_t) exp(int_0^t V(X_s) ds)]`` from ``exp(t (Q + diag V)) g``."""
    if t < 0:
        raise ValidationError("t must be nonnegative")
    V = _check_V(L, V)
    g = np.asarray(g, dtype=float)
    if t == 0:
        return float(g[x])
    return float((expm(t * (L.Q + np.diag(V))) @ g)[x])


def _block_rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))


def _simulate_block(Q, V, t, x, size, rng):
    """Run ``size`` trajectories from ``x`` to time ``t``.

    Returns final states, ``int V`` along each path and the occupation times.
    """
    n = len(Q)
    rates = -np.diag(Q)
    with np.errstate(divide="ignore", invalid="ignore"):
        jump = np.where(rates[:, None] > 0, (Q - np.diag(np.diag(Q))) / rates[:, None], 0.0)
    cum = np.cumsum(jump, axis=1)
    state = np.full(size, x, dtype=np.int64)
    clock = np.zeros(size)
    integral = np.zeros(size)
    occupation = np.zeros((size, n))
    active = np.arange(size)
    while active.size:
        st = state[active]
        hold = rng.exponential(size=active.size)
        with np.errstate(divide="ignore"):
            hold = np.where(rates[st] > 0, hold / rates[st], np.inf)
        end = np.minimum(clock[active] + hold, t)
        dt = end - clock[active]
        integral[active] += V[st] * dt
        occupation[active, st] += dt
        clock[active] = end
        moving = end < t
        u = rng.random(active.size)
        movers = active[moving]
        nxt = (u[moving, None] > cum[st[moving]]).sum(axis=1)
        state[movers] = np.minimum(nxt, n - 1)
        active = movers
    return state, integral, occupation


def _run_blocks(task, trials, threads):
    sizes = [min(BLOCK_SIZE, trials - start) for start in range(0, trials, BLOCK_SIZE)]
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(task, range(len(sizes)), sizes))
    return [task(b, size) for b, size in enumerate(sizes)]


def feynman_kac_mc(
    L: MarkovGenerator,
    V,
    t: float,
    g,
    x: int,
    trials: int,
    seed: int,
    threads: int = 1,
) -> tuple[float, float]:
    """Monte Carlo estimate and standard error of the Feynman-Kac expectation.

    Trajectories are split into fixed blocks, each with its own stream keyed
    by ``(seed, block)``, so results do not depend on ``threads``.
    """
    if trials < 1:
        raise ValidationError("trials must be at least 1")
    if t < 0:
        raise ValidationError("t must be nonnegative")
    V = _check_V(L, V)
    g = np.asarray(g, dtype=float)

    def task(block, size):
        state, integral, _ = _simulate_block(L.Q, V, t, x, size, _block_rng(seed, block))
        return g[state] * np.exp(integral)

    values = np.concatenate(_run_blocks(task, trials, threads))
    mean = float(values.mean())
    if trials == 1 or np.all(values == values[0]):
        return mean, 0.0
    return mean, float(values.std(ddof=1) / np.sqrt(trials))


def doob_generator(L: MarkovGenerator, V) -> MarkovGenerator:
    """``diag(r)^-1 (Q + diag V - lambda I) diag(r)`` for the principal pair ``(lambda, r)``."""
    V = _check_V(L, V)
    spec = twisted_spectrum(L, V)
    r = spec.r_V
    Qt = (L.Q + np.diag(V) - spec.lambda_V * np.eye(L.n)) * r[None, :] / r[:, None]
    drift = np.abs(Qt.sum(axis=1)).max()
    if drift > 1e-9 * max(1.0, np.abs(Qt).max()):
        raise ConvergenceError("Doob transform is not conservative", drift)
    # Absorb the rounding residue into the diagonal.
    off = Qt - np.diag(np.diag(Qt))
    Qt = off - np.diag(off.sum(axis=1))
    return MarkovGenerator(Qt)


def _dv_objective(Q, mu, w):
    e = np.exp(w)
    ratio = (Q @ e) / e
    value = mu @ ratio
    off = Q - np.diag(np.diag(Q))
    # d/dw_j of sum_i mu_i sum_k Q_ik e^{w_k - w_i}
    M = mu[:, None] * off * e[None, :] / e[:, None]
    grad = M.sum(axis=0) - M.sum(axis=1)
    grad[0] = 0.0
    return value, grad


def dv_entropy_solve(
    L: MarkovGenerator, mu, tol: float = 1e-9, max_iter: int = 100_000
) -> DVEntropyResult:
    """Minimize ``phi(w) = sum_i mu_i (Q e^w)_i / e^{w_i}`` with ``w_0 = 0``.

    ``-phi`` at any iterate is a lower bound of the entropy.
    """
    mu = np.asarray(mu, dtype=float)
    if mu.shape != (L.n,) or (mu < 0).any() or not np.isclose(mu.sum(), 1.0, atol=1e-12):
        raise ValidationError("mu must be a probability vector on the states")
    if (mu == 0).any():
        mu = (1 - _BOUNDARY_MIX) * mu + _BOUNDARY_MIX / L.n
    w = np.zeros(L.n)
    value, grad = _dv_objective(L.Q, mu, w)
    step = 1.0
    it = 0
    converged = False
    for it in range(1, max_iter + 1):
        if np.linalg.norm(grad) <= tol:
            converged = True
            it -= 1
            break
        slack = 1e-15 * max(1.0, abs(value))
        while True:
            trial = w - step * grad
            t_value, t_grad = _dv_objective(L.Q, mu, trial)
            if t_value <= value - 1e-4 * step * (grad @ grad) + slack:
                break
            step *= 0.5
            if step < 1e-20:
                break
        if step < 1e-20:
            break
        s, y = trial - w, t_grad - grad
        sy = s @ y
        w, value, grad = trial, t_value, t_grad
        step = min(max((s @ s) / sy, 1e-10), 1e10) if sy > 0 else 2.0 * step
    else:
        converged = np.linalg.norm(grad) <= tol
    if not converged:
        log.warning("dv_entropy stopped with gradient norm %.3e", np.linalg.norm(grad))
    return DVEntropyResult(float(-value), float(np.linalg.norm(grad)), it, bool(converged))


def dv_entropy(L: MarkovGenerator, mu, tol: float = 1e-9, max_iter: int = 100_000) -> float:
    """Donsker-Varadhan entropy ``-inf_{u > 0} int (Lu / u) dmu``."""
    return dv_entropy_solve(L, mu, tol, max_iter).value


def dv_variational_check(L: MarkovGenerator, V) -> float:
    """``|lambda_V - (int V dmu_V - I(mu_V))|``."""
    V = _check_V(L, V)
    spec = twisted_spectrum(L, V)
    return abs(spec.lambda_V - (V @ spec.mu_V - dv_entropy(L, spec.mu_V)))


def simulate_path(L: MarkovGenerator, x: int, t: float, rng: np.random.Generator) -> Path:
    """One trajectory of the chain on ``[0, t]``."""
    times, states = [0.0], [int(x)]
    clock, state = 0.0, int(x)
    while True:
        rate = -L.Q[state, state]
        if rate <= 0:
            break
        clock += rng.exponential(1.0 / rate)
        if clock >= t:
            break
        probs = np.clip(L.Q[state], 0, None)
        probs[state] = 0.0
        state = int(rng.choice(L.n, p=probs / rate))
        times.append(clock)
        states.append(state)
    return Path(np.array(times), np.array(states, dtype=np.int64))


def occupation_measure(path: Path, t: float, n_states: int | None = None) -> np.ndarray:
    """Fraction of ``[0, t]`` spent in each state."""
    if t <= 0:
        raise ValidationError("occupation measure needs t > 0")
    n = n_states if n_states is not None else int(path.states.max()) + 1
    starts = np.minimum(path.times, t)
    ends = np.minimum(np.append(path.times[1:], t), t)
    return np.bincount(path.states, weights=ends - starts, minlength=n) / t


def ergodic_convergence_experiment(
    L: MarkovGenerator,
    V,
    t_list: Sequence[float],
    trials: int,
    seed: int,
    x: int = 0,
    threads: int = 1,
) -> list[tuple[float, float, np.ndarray]]:
    """Mean occupation measure of the Doob chain at each ``t`` and its L1 distance to ``mu_V``.

    Returns rows ``(t, l1, mean_occupation)``.
    """
    if trials < 100:
        raise ValidationError("ergodic experiment needs at least 100 trials")
    V = _check_V(L, V)
    doob = doob_generator(L, V)
    mu_V = twisted_spectrum(L, V).mu_V
    zero = np.zeros(L.n)
    rows = []
    for i, t in enumerate(t_list):
        if t <= 0:
            raise ValidationError("times must be positive")

        def task(block, size, i=i, t=t):
            _, _, occ = _simulate_block(doob.Q, zero, t, x, size, _block_rng(seed, i, block))
            return occ.sum(axis=0)

        occupation = np.sum(_run_blocks(task, trials, threads), axis=0) / (trials * t)
        rows.append((float(t), float(np.abs(occupation - mu_V).sum()), occupation))
    return rows
