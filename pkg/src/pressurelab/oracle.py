"""Transfer-matrix ground truth: pressure, Gibbs cylinder measures and the
variational identity ``P(f) = h(mu_f) + int f dmu_f``.

A depth-``m`` potential is recoded on block states, the admissible
``max(m-1, 1)``-words. ``M[u, v] = exp(f(u + v[-1]))`` when ``v`` overlaps
``u`` admissibly; the weight is read at the source state.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from pressurelab._perron import perron
from pressurelab.errors import ValidationError
from pressurelab.shiftspace import (
    LocallyConstantPotential,
    SubshiftSystem,
    Word,
    admissible_words,
)


@dataclass(frozen=True)
class TransferMatrix:
    states: tuple[Word, ...]
    matrix: np.ndarray
    depth: int  # depth of the potential after lifting to >= 2

    @property
    def block_depth(self) -> int:
        return len(self.states[0])


@dataclass(frozen=True)
class TransferData:
    block_depth: int
    lam: float
    left: np.ndarray
    right: np.ndarray
    residual: float
    iterations: int


def transfer_matrix(S: SubshiftSystem, f: LocallyConstantPotential) -> TransferMatrix:
    if f.system != S:
        raise ValidationError("potential belongs to a different system")
    g = f.lift(max(f.depth, 2))
    states = admissible_words(S, g.depth - 1)
    index = {u: i for i, u in enumerate(states)}
    M = np.zeros((len(states), len(states)))
    for w, val in g.values.items():
        M[index[w[:-1]], index[w[1:]]] = np.exp(val)
    return TransferMatrix(tuple(states), M, g.depth)


def leading_eigen(M, tol: float = 1e-12, max_iter: int = 100_000) -> TransferData:
    """Perron data of a nonnegative primitive matrix, ``left @ right == 1``."""
    if isinstance(M, TransferMatrix):
        block_depth, M = M.block_depth, M.matrix
    else:
        block_depth = 1
    p = perron(M, tol=tol, max_iter=max_iter)
    return TransferData(block_depth, p.value, p.left, p.right, p.residual, p.iterations)


def pressure_oracle(S: SubshiftSystem, f: LocallyConstantPotential) -> float:
    return float(np.log(leading_eigen(transfer_matrix(S, f)).lam))


class GibbsMeasure:
    """The equilibrium state of ``f`` evaluated on cylinder sets."""

    def __init__(self, S: SubshiftSystem, f: LocallyConstantPotential):
        self.system = S
        self.potential = f
        self.transfer = transfer_matrix(S, f)
        self.eigen = leading_eigen(self.transfer)
        self._index = {u: i for i, u in enumerate(self.transfer.states)}
        # Stochastic matrix of the block chain and its stationary law.
        M, lam, r, l = self.transfer.matrix, self.eigen.lam, self.eigen.right, self.eigen.left
        self.stochastic = M * r[None, :] / (lam * r[:, None])
        self.stationary = l * r

    @property
    def block_depth(self) -> int:
        return self.transfer.block_depth

    def cylinder(self, w) -> float:
        w = tuple(int(a) for a in w)
        b = self.block_depth
        if len(w) < b:
            raise ValidationError(f"cylinder word must have length >= {b}")
        if not self.system.is_admissible(w):
            return 0.0
        path = [self._index[w[i : i + b]] for i in range(len(w) - b + 1)]
        mass = self.stationary[path[0]]
        for u, v in zip(path, path[1:]):
            mass *= self.stochastic[u, v]
        return float(mass)

    def marginal_vector(self, depth: int) -> np.ndarray:
        """Masses of all admissible ``depth``-words, lexicographic order."""
        b = self.block_depth
        if depth < 1:
            raise ValidationError("depth must be at least 1")
        if depth >= b:
            # Propagate along the block chain one symbol at a time.
            words = admissible_words(self.system, b)
            mass = {w: self.stationary[self._index[w]] for w in words}
            for _ in range(depth - b):
                new = {}
                for w, m in mass.items():
                    u = self._index[w[len(w) - b :]]
                    for v in np.nonzero(self.stochastic[u])[0]:
                        new[w + (self.transfer.states[v][-1],)] = m * self.stochastic[u, v]
                mass = new
            return np.array([mass[w] for w in admissible_words(self.system, depth)])
        full = admissible_words(self.system, b)
        target = admissible_words(self.system, depth)
        pos = {w: i for i, w in enumerate(target)}
        out = np.zeros(len(target))
        for w in full:
            out[pos[w[:depth]]] += self.stationary[self._index[w]]
        return out

    def entropy(self) -> float:
        P = self.stochastic
        with np.errstate(divide="ignore", invalid="ignore"):
            plogp = np.where(P > 0, P * np.log(P), 0.0)
        return float(-(self.stationary @ plogp.sum(axis=1)))


def gibbs_cylinder(S: SubshiftSystem, f: LocallyConstantPotential, w) -> float:
    """Equilibrium mass of the cylinder ``[w]``; zero for inadmissible ``w``."""
    return GibbsMeasure(S, f).cylinder(w)


def equilibrium_marginal(S: SubshiftSystem, f: LocallyConstantPotential, depth: int):
    """Depth-``depth`` marginal of the equilibrium state as a CylinderMeasure."""
    from pressurelab.empirical import CylinderMeasure

    return CylinderMeasure(S, depth, GibbsMeasure(S, f).marginal_vector(depth))


def variational_check(S: SubshiftSystem, f: LocallyConstantPotential) -> float:
    """``|P(f) - (h(mu_f) + int f dmu_f)|`` for the oracle equilibrium state."""
    mu = GibbsMeasure(S, f)
    pressure = np.log(mu.eigen.lam)
    integral = mu.marginal_vector(f.depth) @ f.vector()
    return float(abs(pressure - (mu.entropy() + integral)))
