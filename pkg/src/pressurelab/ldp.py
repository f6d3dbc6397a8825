"""Large-deviation upper bound for the laws of orbit averages under the
Birkhoff weights, checked against the one-dimensional Legendre dual of the
pressure."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from pressurelab.empirical import beta_weights
from pressurelab.errors import ValidationError
from pressurelab.oracle import GibbsMeasure
from pressurelab.rate import q_functional
from pressurelab.separated import SeparatedSet, maximal_separated_set
from pressurelab.shiftspace import (
    LocallyConstantPotential,
    SubshiftSystem,
    admissible_words,
    birkhoff_sums,
)

THETA_BRACKET = (-50.0, 50.0)
# Orbit averages are rationals j/n; ties with the threshold must count.
_TIE_SLACK = 1e-12


@dataclass(frozen=True)
class LdpExperiment:
    statistic: LocallyConstantPotential
    threshold: float
    center: float
    masses: list[tuple[int, float]]
    fitted_rate: float
    dual_bound: float
    passed: bool = field(default=False)


def nu_mass(
    S: SubshiftSystem,
    f: LocallyConstantPotential,
    E: SeparatedSet,
    g: LocallyConstantPotential,
    c: float,
    center: float,
) -> float:
    """Weight of the points of ``E`` whose orbit average of ``g`` is ``c`` away from ``center``."""
    if c <= 0:
        raise ValidationError("threshold c must be positive")
    beta = beta_weights(S, f, E)
    averages = birkhoff_sums(E.points, g, E.n) / E.n
    deviating = np.abs(averages - center) >= c - _TIE_SLACK
    return float(np.sum(np.where(deviating, beta.weights, 0.0)))


def mean_cycle_range(S: SubshiftSystem, g: LocallyConstantPotential) -> tuple[float, float]:
    """Minimum and maximum of ``int g dmu`` over invariant measures (Karp)."""
    m = max(g.depth, 2)
    h = g.lift(m)
    states = admissible_words(S, m - 1)
    index = {u: i for i, u in enumerate(states)}
    N = len(states)
    W = np.full((N, N), -np.inf)
    for w, val in h.values.items():
        W[index[w[:-1]], index[w[1:]]] = val

    def karp_max(W):
        D = np.full((N + 1, N), -np.inf)
        D[0] = 0.0
        for step in range(1, N + 1):
            D[step] = np.max(D[step - 1][:, None] + W, axis=0)
        best = -np.inf
        for v in range(N):
            if not np.isfinite(D[N, v]):
                continue
            ratios = [
                (D[N, v] - D[j, v]) / (N - j) for j in range(N) if np.isfinite(D[j, v])
            ]
            best = max(best, min(ratios))
        return best

    hi = karp_max(W)
    lo = -karp_max(np.where(np.isfinite(W), -W, -np.inf))
    return float(lo), float(hi)


def legendre_rate(S: SubshiftSystem, f: LocallyConstantPotential, g: LocallyConstantPotential, s: float) -> float:
    """``sup_theta (theta s - Q_f(theta g))``; ``inf`` if no invariant measure has ``int g = s``."""
    lo, hi = mean_cycle_range(S, g)
    if s < lo - _TIE_SLACK or s > hi + _TIE_SLACK:
        return math.inf
    value = golden_section_max(lambda theta: theta * s - q_functional(S, f, theta * g), *THETA_BRACKET)
    return max(0.0, value)


def golden_section_max(fn, a: float, b: float, tol: float = 1e-10) -> float:
    """Maximum of a concave ``fn`` on ``[a, b]``, endpoints included."""
    invphi = (math.sqrt(5) - 1) / 2
    c, d = b - invphi * (b - a), a + invphi * (b - a)
    fc, fd = fn(c), fn(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = fn(d)
    return float(max(fc, fd, fn(a), fn(b)))


def dual_rate_bound(
    S: SubshiftSystem,
    f: LocallyConstantPotential,
    g: LocallyConstantPotential,
    c: float,
    center: float,
) -> float:
    """Smallest dual rate over the two endpoints ``center +- c``."""
    if c <= 0:
        raise ValidationError("threshold c must be positive")
    return min(legendre_rate(S, f, g, center - c), legendre_rate(S, f, g, center + c))


def fit_rate(masses: Sequence[tuple[int, float]]) -> float:
    """Minus the least-squares slope of ``log mass`` against ``n``."""
    pts = [(n, m) for n, m in masses if m > 0]
    if not pts:
        return math.inf
    if len(pts) == 1:
        n, m = pts[0]
        return -math.log(m) / n
    ns = np.array([n for n, _ in pts], dtype=float)
    logs = np.log([m for _, m in pts])
    slope = np.polyfit(ns, logs, 1)[0]
    return float(-slope)


def equilibrium_mean(S: SubshiftSystem, f: LocallyConstantPotential, g: LocallyConstantPotential) -> float:
    return float(GibbsMeasure(S, f).marginal_vector(g.depth) @ g.vector())


def run_ldp_experiment(
    S: SubshiftSystem,
    f: LocallyConstantPotential,
    g: LocallyConstantPotential,
    c: float,
    n_list: Sequence[int],
    epsilon: float = 0.6,
    slack: float = 0.1,
) -> LdpExperiment:
    if not n_list:
        raise ValidationError("n_list must be nonempty")
    if any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise ValidationError("n_list must be strictly increasing")
    center = equilibrium_mean(S, f, g)
    masses = [
        (n, nu_mass(S, f, maximal_separated_set(S, n, epsilon), g, c, center)) for n in n_list
    ]
    rate = fit_rate(masses)
    bound = dual_rate_bound(S, f, g, c, center)
    passed = math.isinf(rate) or rate >= bound - slack
    return LdpExperiment(g, float(c), center, masses, rate, bound, bool(passed))
