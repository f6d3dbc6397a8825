"""Convex duality around the pressure.

``q_functional(omega) = P(f + omega) - P(f)`` and its conjugate
``J_f(mu) = sup_omega (<mu, omega> - q_functional(omega))``, computed over
locally constant ``omega`` of a fixed depth by supergradient ascent. Any
iterate gives a valid lower bound of ``J_f(mu)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from pressurelab._perron import perron
from pressurelab.empirical import CylinderMeasure, invariance_defect, marginalize
from pressurelab.errors import ConvergenceError, ValidationError
from pressurelab.oracle import pressure_oracle
from pressurelab.shiftspace import (
    LocallyConstantPotential,
    SubshiftSystem,
    admissible_words,
)


# Power iteration stops at a relative residual of 1e-12, which bounds how
# precisely objective values can be compared.
_VALUE_NOISE = 1e-12


@dataclass(frozen=True)
class RateResult:
    value: float
    maximizer: LocallyConstantPotential
    gradient_norm: float
    iterations: int
    converged: bool


def q_functional(S: SubshiftSystem, f: LocallyConstantPotential, omega: LocallyConstantPotential) -> float:
    m = max(f.depth, omega.depth)
    base = f.lift(m)
    return pressure_oracle(S, base + omega) - pressure_oracle(S, base)


def check_shift_invariance_of_q(
    S: SubshiftSystem, f: LocallyConstantPotential, omega: LocallyConstantPotential
) -> float:
    """``|Q_f(omega) - Q_f(omega o T)|``; zero up to rounding."""
    return abs(q_functional(S, f, omega) - q_functional(S, f, omega.shifted()))


class _DualObjective:
    """``omega -> <mu, omega> - Q_f(omega)`` over depth-``d`` tables, with its gradient.

    Everything is assembled at block depth ``m - 1`` with ``m = max(f.depth, d, 2)``
    so that each evaluation is a single Perron problem.
    """

    def __init__(self, S, f, mu_vec, d):
        self.d = d
        m = max(f.depth, d, 2)
        words = admissible_words(S, m)
        states = admissible_words(S, m - 1)
        index = {u: i for i, u in enumerate(states)}
        d_index = {w: i for i, w in enumerate(admissible_words(S, d))}
        self.rows = np.array([index[w[:-1]] for w in words])
        self.cols = np.array([index[w[1:]] for w in words])
        self.prefix = np.array([d_index[w[:d]] for w in words])
        self.n_states = len(states)
        self.f_vals = f.lift(m).vector()
        self.mu = mu_vec
        self.p_f = self._solve(np.zeros(len(d_index)))[0]

    def _solve(self, omega):
        M = np.zeros((self.n_states, self.n_states))
        M[self.rows, self.cols] = np.exp(self.f_vals + omega[self.prefix])
        p = perron(M)
        return np.log(p.value), M, p

    def __call__(self, omega):
        log_lam, M, p = self._solve(omega)
        value = self.mu @ omega - (log_lam - self.p_f)
        # Mass of each m-word under the equilibrium state of f + omega.
        word_mass = p.left[self.rows] * M[self.rows, self.cols] * p.right[self.cols] / p.value
        eq = np.bincount(self.prefix, weights=word_mass, minlength=len(omega))
        return value, self.mu - eq


def _safe_eval(objective, omega):
    # Far out along a divergent ray (mu outside the invariant marginals) the
    # transfer matrix overflows; treat that as a failed trial step.
    try:
        with np.errstate(over="raise", invalid="raise"):
            value, grad = objective(omega)
    except (ConvergenceError, FloatingPointError):
        return -np.inf, None
    return (value, grad) if np.isfinite(value) else (-np.inf, None)


def j_restricted(
    S: SubshiftSystem,
    f: LocallyConstantPotential,
    mu: CylinderMeasure,
    depth: int,
    tol: float = 1e-8,
    max_iter: int = 5000,
) -> RateResult:
    """Lower bound of ``J_f(mu)`` from the supremum over depth-``depth`` potentials."""
    if mu.system != S or f.system != S:
        raise ValidationError("measure and potential must live on the given system")
    if depth < 1 or mu.depth < depth:
        raise ValidationError(f"measure depth {mu.depth} is below the test-function depth {depth}")
    mu_d = marginalize(mu, depth).weights
    objective = _DualObjective(S, f, mu_d, depth)

    omega = np.zeros(len(mu_d))
    value, grad = objective(omega)
    step = 1.0
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        gnorm = np.abs(grad).sum()
        if gnorm <= tol:
            converged = True
            it -= 1
            break
        # Backtracking: halve until the Armijo condition holds, up to the
        # rounding floor of the Perron root.
        slack = _VALUE_NOISE * max(1.0, abs(value))
        while True:
            trial = omega + step * grad
            t_value, t_grad = _safe_eval(objective, trial)
            if t_value >= value + 1e-4 * step * (grad @ grad) - slack:
                break
            step *= 0.5
            if step < 1e-16:
                break
        if step < 1e-16:
            break
        # Barzilai-Borwein guess for the next trial step.
        s, y = trial - omega, t_grad - grad
        sy = s @ y
        omega, value, grad = trial, t_value, t_grad
        step = min(max(-(s @ s) / sy, 1e-8), 1e8) if sy < 0 else 2.0 * step
    else:
        converged = np.abs(grad).sum() <= tol

    return RateResult(
        value=float(value),
        maximizer=LocallyConstantPotential.from_vector(S, depth, omega),
        gradient_norm=float(np.abs(grad).sum()),
        iterations=it,
        converged=bool(converged),
    )


def _entropy(p: np.ndarray) -> float:
    p = p[p > 0]
    return float(-(p * np.log(p)).sum())


def markov_entropy(mu: CylinderMeasure) -> float:
    """Entropy of the ``(depth-1)``-step Markov measure with marginal ``mu``.

    Depth 1 is read as the Bernoulli measure, which must be supported by the
    transition table.
    """
    if mu.depth == 1:
        S = mu.system
        support = np.nonzero(mu.weights > 0)[0]
        if not S.A[np.ix_(support, support)].all():
            raise ValidationError("not an invariant Markov marginal: Bernoulli extension is inadmissible")
        return _entropy(mu.weights)
    return _entropy(mu.weights) - _entropy(marginalize(mu, mu.depth - 1).weights)


def i_functional(S: SubshiftSystem, f: LocallyConstantPotential, mu: CylinderMeasure) -> float:
    """``P(f) - h(mu) - int f dmu`` for invariant Markov marginals."""
    if f.depth > mu.depth:
        raise ValidationError("potential depth exceeds measure depth")
    if mu.depth >= 2 and invariance_defect(mu) > 1e-10:
        raise ValidationError("not an invariant Markov marginal")
    integral = mu.weights @ f.lift(mu.depth).vector()
    return pressure_oracle(S, f) - markov_entropy(mu) - float(integral)
