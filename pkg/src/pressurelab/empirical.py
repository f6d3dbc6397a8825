"""Orbit-averaged measures, Birkhoff-weighted empirical measures on
separated sets, and the periodic-orbit variant.

Measures are compared on the cylinder algebra: a :class:`CylinderMeasure`
is the vector of masses of all admissible words of one depth.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from pressurelab.errors import ValidationError
from pressurelab.pressure import log_partition_sum
from pressurelab.separated import SeparatedSet
from pressurelab.shiftspace import (
    LocallyConstantPotential,
    SubshiftSystem,
    SymbolicPoint,
    Word,
    admissible_words,
    admissible_words_array,
    birkhoff_sums,
    format_word,
    orbit_symbols,
    periodic_points,
    window_codes,
)

NORMALIZATION_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class CylinderMeasure:
    """Masses of the admissible ``depth``-words, in lexicographic order."""

    system: SubshiftSystem
    depth: int
    weights: np.ndarray

    def __post_init__(self):
        if self.depth < 1:
            raise ValidationError("depth must be at least 1")
        w = np.array(self.weights, dtype=float)
        n_words = len(admissible_words_array(self.system, self.depth))
        if w.shape != (n_words,):
            raise ValidationError(f"expected {n_words} weights, got shape {w.shape}")
        if (w < -NORMALIZATION_TOL).any():
            raise ValidationError("cylinder weights must be nonnegative")
        if abs(w.sum() - 1.0) > NORMALIZATION_TOL * max(1, n_words):
            raise ValidationError(f"cylinder weights sum to {w.sum()!r}, not 1")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def words(self) -> list[Word]:
        return admissible_words(self.system, self.depth)

    def as_dict(self) -> dict[Word, float]:
        return dict(zip(self.words, self.weights.tolist()))

    def __getitem__(self, word) -> float:
        return self.as_dict().get(tuple(word), 0.0)

    @classmethod
    def from_dict(cls, S: SubshiftSystem, depth: int, weights) -> "CylinderMeasure":
        words = admissible_words(S, depth)
        weights = {tuple(w): float(v) for w, v in weights.items()}
        bad = set(weights) - set(words)
        if bad:
            raise ValidationError(f"word {format_word(min(bad))!r} is not an admissible {depth}-word")
        return cls(S, depth, np.array([weights.get(w, 0.0) for w in words]))

    @classmethod
    def from_counts(cls, S: SubshiftSystem, depth: int, codes: np.ndarray, mass: np.ndarray):
        """Accumulate ``mass`` onto base-k word codes and normalize."""
        words = admissible_words_array(S, depth)
        code_of_word = np.zeros(len(words), dtype=np.int64)
        for col in range(depth):
            code_of_word = code_of_word * S.k + words[:, col]
        dense = np.bincount(codes.ravel(), weights=mass.ravel(), minlength=S.k**depth)
        w = dense[code_of_word]
        if not np.isclose(w.sum(), dense.sum(), rtol=0, atol=1e-12):
            raise ValidationError("mass found on inadmissible words")
        return cls(S, depth, w / w.sum())

    def to_json(self) -> dict:
        return {"depth": self.depth, "weights": {format_word(w): v for w, v in self.as_dict().items()}}


@dataclass(frozen=True)
class WeightedSet:
    E: SeparatedSet
    log_weights: np.ndarray
    normalized: bool = True

    @property
    def weights(self) -> np.ndarray:
        return np.exp(self.log_weights)


def _orbit_codes(points: Sequence[SymbolicPoint], n: int, depth: int, k: int) -> np.ndarray:
    return window_codes(orbit_symbols(points, n + depth - 1), n, depth, k)


def orbit_empirical(S: SubshiftSystem, x: SymbolicPoint, n: int, depth: int) -> CylinderMeasure:
    """``(1/n) sum_{j<n} delta_{T^j x}`` on depth-``depth`` cylinders."""
    if n < 1:
        raise ValidationError("n must be at least 1")
    codes = _orbit_codes([x], n, depth, S.k)
    return CylinderMeasure.from_counts(S, depth, codes, np.full(codes.shape, 1.0 / n))


def beta_weights(S: SubshiftSystem, f: LocallyConstantPotential, E: SeparatedSet) -> WeightedSet:
    if not E.points:
        raise ValidationError("empty separated set")
    sums = birkhoff_sums(E.points, f, E.n)
    return WeightedSet(E, sums - log_partition_sum(S, f, E), normalized=True)


def _weighted_orbits(S, points, log_w, n, depth):
    syms = orbit_symbols(points, n + depth - 1)
    w = np.exp(log_w - log_w.max())
    w /= w.sum()
    dense = np.zeros(S.k**depth)
    for j in range(n):
        code = np.zeros(len(syms), dtype=np.int64)
        for i in range(depth):
            code = code * S.k + syms[:, j + i]
        dense += np.bincount(code, weights=w, minlength=S.k**depth)
    return CylinderMeasure.from_counts(S, depth, np.arange(S.k**depth), dense / n)


def weighted_empirical(
    S: SubshiftSystem, f: LocallyConstantPotential, E: SeparatedSet, depth: int
) -> CylinderMeasure:
    """``sum_x beta_n(x) delta_n(x)`` over the separated set ``E``."""
    beta = beta_weights(S, f, E)
    return _weighted_orbits(S, E.points, beta.log_weights, E.n, depth)


def periodic_orbit_measure(
    S: SubshiftSystem,
    f: LocallyConstantPotential,
    n: int,
    depth: int,
    cumulative: bool = False,
) -> CylinderMeasure:
    """Periodic points of period ``n`` weighted by ``exp(S_n f)``.

    With ``cumulative=True`` every period ``1..n`` contributes, each point
    averaged over its own period length.
    """
    periods = range(1, n + 1) if cumulative else [n]
    codes, masses = [], []
    log_ws = []
    for p in periods:
        pts = periodic_points(S, p)
        if not pts:
            continue
        codes.append(_orbit_codes(pts, p, depth, S.k))
        log_ws.append(birkhoff_sums(pts, f, p))
    if not codes:
        raise ValidationError(f"no periodic points of period {n}")
    shift = max(lw.max() for lw in log_ws)
    for lw, c in zip(log_ws, codes):
        w = np.exp(lw - shift)
        masses.append(np.repeat(w[:, None] / c.shape[1], c.shape[1], axis=1))
    total = sum(m.sum() for m in masses)
    all_codes = np.concatenate([c.ravel() for c in codes])
    all_mass = np.concatenate([m.ravel() for m in masses]) / total
    return CylinderMeasure.from_counts(S, depth, all_codes, all_mass)


def marginalize(mu: CylinderMeasure, depth: int) -> CylinderMeasure:
    """Keep the leading ``depth`` coordinates."""
    if depth < 1:
        raise ValidationError("depth must be at least 1")
    if depth > mu.depth:
        raise ValidationError(f"cannot marginalize depth {mu.depth} up to {depth}")
    if depth == mu.depth:
        return mu
    S = mu.system
    words = admissible_words_array(S, mu.depth)
    codes = np.zeros(len(words), dtype=np.int64)
    for col in range(depth):
        codes = codes * S.k + words[:, col]
    return CylinderMeasure.from_counts(S, depth, codes, mu.weights)


def trailing_marginal(mu: CylinderMeasure, depth: int) -> CylinderMeasure:
    """Keep the trailing ``depth`` coordinates."""
    S = mu.system
    words = admissible_words_array(S, mu.depth)
    codes = np.zeros(len(words), dtype=np.int64)
    for col in range(mu.depth - depth, mu.depth):
        codes = codes * S.k + words[:, col]
    return CylinderMeasure.from_counts(S, depth, codes, mu.weights)


def l1_distance(mu: CylinderMeasure, nu: CylinderMeasure) -> float:
    if mu.system != nu.system:
        raise ValidationError("measures live on different systems")
    if mu.depth != nu.depth:
        raise ValidationError(f"depth mismatch {mu.depth} vs {nu.depth}; marginalize first")
    return float(np.abs(mu.weights - nu.weights).sum())


def invariance_defect(mu: CylinderMeasure) -> float:
    """L1 distance between the leading and trailing ``depth-1`` marginals."""
    if mu.depth < 2:
        raise ValidationError("invariance defect needs depth >= 2")
    return l1_distance(marginalize(mu, mu.depth - 1), trailing_marginal(mu, mu.depth - 1))
