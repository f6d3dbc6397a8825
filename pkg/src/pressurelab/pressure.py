"""Pressure estimates from Birkhoff-weighted partition sums over maximal
separated sets, and the exponential lower-bound certificate."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from pressurelab.errors import ValidationError
from pressurelab.separated import SeparatedSet, maximal_separated_set
from pressurelab.shiftspace import LocallyConstantPotential, SubshiftSystem, birkhoff_sums


@dataclass(frozen=True)
class PressureEstimate:
    n: int
    epsilon: float
    value: float
    partition_sum: float  # log of the partition sum


def log_partition_sum(S: SubshiftSystem, f: LocallyConstantPotential, E: SeparatedSet) -> float:
    """``log sum_{x in E} exp(S_n f(x))`` with a max shift."""
    if not E.points:
        raise ValidationError("empty separated set")
    if E.n < 1:
        raise ValidationError("separated set horizon must be at least 1")
    sums = birkhoff_sums(E.points, f, E.n)
    top = sums.max()
    # np.sum reduces pairwise in a fixed order, so the result is deterministic.
    return float(top + np.log(np.sum(np.exp(sums - top))))


def pressure_estimate(
    S: SubshiftSystem, f: LocallyConstantPotential, n: int, epsilon: float = 0.6
) -> PressureEstimate:
    E = maximal_separated_set(S, n, epsilon)
    z = log_partition_sum(S, f, E)
    return PressureEstimate(n=n, epsilon=float(epsilon), value=z / n, partition_sum=z)


def certify_good_sequence(
    S: SubshiftSystem,
    f: LocallyConstantPotential,
    epsilon: float,
    gamma: float,
    n_max: int,
) -> list[tuple[int, bool]]:
    """For each ``n <= n_max``: does ``log Z_n >= n (P(f) - gamma)`` hold?"""
    from pressurelab.oracle import pressure_oracle

    if gamma < 0:
        raise ValidationError("gamma must be nonnegative")
    p = pressure_oracle(S, f)
    flags = []
    for n in range(1, n_max + 1):
        z = log_partition_sum(S, f, maximal_separated_set(S, n, epsilon))
        flags.append((n, bool(z >= n * (p - gamma))))
    return flags
