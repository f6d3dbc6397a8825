"""(n, eps)-separated sets of symbolic points.

Separation is strict: ``bowen_distance(x, y, n) > eps``. For the metric
``2^-(first disagreement)`` and ``eps`` in ``(1/2, 1]`` two points are
separated exactly when their first ``n`` symbols differ, so one point per
admissible ``n``-word is a maximal separated set.
"""

from __future__ import annotations

import json
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from pressurelab.errors import ValidationError
from pressurelab.shiftspace import (
    SubshiftSystem,
    SymbolicPoint,
    admissible_words,
    admissible_words_array,
    bowen_distance,
    _extend,
    canonical_extension,
)


class ExtensionPoints(Sequence):
    """Canonical extensions of the rows of a word array, built on demand.

    Large maximal sets hold millions of points; keeping only the words and
    producing orbit symbols directly from them avoids creating the objects.
    """

    def __init__(self, S: SubshiftSystem, words: np.ndarray):
        self.system = S
        self.words = words

    def __len__(self):
        return len(self.words)

    def __getitem__(self, i):
        if isinstance(i, slice):
            return [self[j] for j in range(*i.indices(len(self)))]
        return _extend(self.system, tuple(self.words[i].tolist()))

    def __eq__(self, other):
        return tuple(self) == tuple(other)

    def __repr__(self):
        return f"ExtensionPoints({len(self)} points)"

    def orbit_symbols(self, length: int) -> np.ndarray:
        S, W = self.system, self.words
        N, n = W.shape
        out = np.empty((N, length), dtype=np.int64)
        head = min(n, length)
        out[:, :head] = W[:, :head]
        if length <= n:
            return out
        cols = np.arange(length - n)
        wrap = S.A[W[:, -1], W[:, 0]] == 1
        out[wrap, n:] = W[wrap][:, cols % n]
        for b in range(S.k):
            rows = ~wrap & (W[:, -1] == b)
            if rows.any():
                cyc = np.array(S._continuation_cycles[b], dtype=np.int64)
                out[rows, n:] = cyc[cols % len(cyc)]
        return out


@dataclass(frozen=True)
class SeparatedSet:
    system: SubshiftSystem
    n: int
    epsilon: float
    points: tuple[SymbolicPoint, ...]
    maximal: bool = False

    def __len__(self):
        return len(self.points)

    def to_json(self) -> str:
        return json.dumps(
            {
                "n": self.n,
                "epsilon": self.epsilon,
                "maximal": self.maximal,
                "points": [x.to_json() for x in self.points],
            }
        )

    @classmethod
    def from_json(cls, S: SubshiftSystem, text: str) -> "SeparatedSet":
        doc = json.loads(text)
        points = tuple(SymbolicPoint.from_json(p) for p in doc["points"])
        return cls(S, int(doc["n"]), float(doc["epsilon"]), points, bool(doc["maximal"]))


def _check_epsilon(epsilon):
    if not 0.0 < epsilon <= 1.0:
        raise ValidationError(f"epsilon must lie in (0, 1], got {epsilon}")


def maximal_separated_set(S: SubshiftSystem, n: int, epsilon: float) -> SeparatedSet:
    """One canonical extension per admissible ``n``-word.

    Only valid for ``epsilon`` in ``(1/2, 1]``; finer scales need
    :func:`greedy_separated_set`.
    """
    if n < 1:
        raise ValidationError("n must be at least 1")
    _check_epsilon(epsilon)
    if epsilon <= 0.5:
        raise ValidationError(
            "epsilon <= 1/2 does not align with n-cylinders; use greedy_separated_set for fine scales"
        )
    points = ExtensionPoints(S, admissible_words_array(S, n))
    return SeparatedSet(S, n, float(epsilon), points, maximal=True)


def greedy_separated_set(
    S: SubshiftSystem, candidates: Sequence[SymbolicPoint], n: int, epsilon: float
) -> SeparatedSet:
    """Keep each candidate, in order, if it is separated from everything kept so far."""
    if n < 1:
        raise ValidationError("n must be at least 1")
    _check_epsilon(epsilon)
    kept: list[SymbolicPoint] = []
    for x in candidates:
        if not S.contains(x):
            raise ValidationError(f"candidate {x} is not a point of the subshift")
        if all(bowen_distance(S, x, y, n) > epsilon for y in kept):
            kept.append(x)
    E = SeparatedSet(S, n, float(epsilon), tuple(kept), maximal=False)
    assert verify_separated(E)
    return SeparatedSet(S, n, float(epsilon), tuple(kept), maximal=is_maximal(E))


def verify_separated(E: SeparatedSet) -> bool:
    pts = E.points
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            if not bowen_distance(E.system, pts[i], pts[j], E.n) > E.epsilon:
                return False
    return True


def is_maximal(E: SeparatedSet) -> bool:
    """True if no canonical extension of an admissible ``n``-word can be added."""
    S = E.system
    for w in admissible_words(S, E.n):
        x = canonical_extension(S, w)
        if all(bowen_distance(S, x, y, E.n) > E.epsilon for y in E.points):
            return False
    return True
