"""One-sided subshifts of finite type, eventually periodic points, locally
constant potentials, Birkhoff sums and the Bowen metric.

Words are tuples of ints in ``range(k)``. In JSON documents a word is a
string over ``ALPHABET`` (``"0".."9"`` then ``"a".."z"``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from pressurelab.errors import ValidationError

ALPHABET = "0123456789abcdefghijklmnopqrstuvwxyz"

Word = tuple[int, ...]


def parse_word(text: str) -> Word:
    try:
        return tuple(ALPHABET.index(ch) for ch in text)
    except ValueError:
        raise ValidationError(f"word {text!r} contains symbols outside {ALPHABET!r}") from None


def format_word(word: Iterable[int]) -> str:
    return "".join(ALPHABET[int(a)] for a in word)


def _word_code(words: np.ndarray, k: int) -> np.ndarray:
    """Base-k integer code of each row; preserves lexicographic order."""
    code = np.zeros(words.shape[0], dtype=np.int64)
    for col in range(words.shape[1]):
        code = code * k + words[:, col]
    return code


@dataclass(frozen=True, eq=False)
class SubshiftSystem:
    """The one-sided subshift of finite type defined by a 0/1 table ``A``."""

    A: np.ndarray

    def __post_init__(self):
        A = np.array(self.A, dtype=np.int64)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValidationError("transition table must be square")
        k = A.shape[0]
        if k < 2:
            raise ValidationError("alphabet size must be at least 2")
        if k > len(ALPHABET):
            raise ValidationError(f"alphabet size {k} exceeds {len(ALPHABET)}")
        if not np.isin(A, (0, 1)).all():
            raise ValidationError("transition table entries must be 0 or 1")
        if (A.sum(axis=1) == 0).any() or (A.sum(axis=0) == 0).any():
            raise ValidationError("every row and column of the transition table needs a 1")
        if not _is_primitive(A):
            raise ValidationError(
                f"transition table is not primitive: no power up to {k * k} is strictly positive"
            )
        A.setflags(write=False)
        object.__setattr__(self, "A", A)

    @property
    def k(self) -> int:
        return self.A.shape[0]

    @classmethod
    def full_shift(cls, k: int) -> "SubshiftSystem":
        return cls(np.ones((k, k), dtype=np.int64))

    @classmethod
    def golden_mean(cls) -> "SubshiftSystem":
        return cls(np.array([[1, 1], [1, 0]]))

    def __eq__(self, other):
        return isinstance(other, SubshiftSystem) and np.array_equal(self.A, other.A)

    def __hash__(self):
        return hash(self.A.tobytes())

    def is_admissible(self, word: Sequence[int]) -> bool:
        if any(not 0 <= a < self.k for a in word):
            return False
        return all(self.A[a, b] for a, b in zip(word, word[1:]))

    def point(self, preperiod: Sequence[int], period: Sequence[int]) -> "SymbolicPoint":
        """Build a point and check that its full sequence is admissible."""
        x = SymbolicPoint(tuple(preperiod), tuple(period))
        if not self.contains(x):
            raise ValidationError(
                f"point {format_word(preperiod)}({format_word(period)}) is not admissible"
            )
        return x

    def contains(self, x: "SymbolicPoint") -> bool:
        seq = x.preperiod + x.period + x.period[:1]
        return self.is_admissible(seq)

    @cached_property
    def _continuation_cycles(self) -> dict[int, Word]:
        return {b: _least_continuation_cycle(self, b) for b in range(self.k)}


def _is_primitive(A: np.ndarray) -> bool:
    k = A.shape[0]
    B = (A > 0).astype(np.int64)
    P = B.copy()
    for _ in range(k * k):
        if P.all():
            return True
        P = ((P @ B) > 0).astype(np.int64)
    return bool(P.all())


def _least_continuation_cycle(S: SubshiftSystem, b: int) -> Word:
    """Shortest, then lexicographically least, cycle ``c`` with ``b -> c[0]`` allowed."""
    for length in range(1, S.k + 1):
        for c in admissible_words(S, length):
            if S.A[b, c[0]] and S.A[c[-1], c[0]]:
                return c
    raise AssertionError("primitive table always admits a continuation cycle")


def _normalize(preperiod: Word, period: Word) -> tuple[Word, Word]:
    q = len(period)
    if q > 1:
        raw = bytes(period)
        d = (raw + raw).find(raw, 1)
        if d < q:
            period = period[:d]
    while preperiod and preperiod[-1] == period[-1]:
        period = period[-1:] + period[:-1]
        preperiod = preperiod[:-1]
    return preperiod, period


@dataclass(frozen=True)
class SymbolicPoint:
    """The sequence ``preperiod + period + period + ...``.

    Stored in normal form (primitive period, shortest preperiod), so two
    points are equal exactly when their sequences are equal.
    """

    preperiod: Word
    period: Word

    def __post_init__(self):
        if not self.period:
            raise ValidationError("period must be a nonempty word")
        pre, per = _normalize(tuple(map(int, self.preperiod)), tuple(map(int, self.period)))
        object.__setattr__(self, "preperiod", pre)
        object.__setattr__(self, "period", per)

    def symbol(self, i: int) -> int:
        p = len(self.preperiod)
        if i < p:
            return self.preperiod[i]
        return self.period[(i - p) % len(self.period)]

    def symbols(self, length: int) -> np.ndarray:
        p = len(self.preperiod)
        if length <= p:
            return np.array(self.preperiod[:length], dtype=np.int64)
        reps = -(-(length - p) // len(self.period))
        return np.array((self.preperiod + self.period * reps)[:length], dtype=np.int64)

    def shift(self, a: int = 1) -> "SymbolicPoint":
        """The point ``T^a x``."""
        p = len(self.preperiod)
        if a <= p:
            return SymbolicPoint(self.preperiod[a:], self.period)
        r = (a - p) % len(self.period)
        return SymbolicPoint((), self.period[r:] + self.period[:r])

    def __str__(self):
        return f"{format_word(self.preperiod)}({format_word(self.period)})"

    def to_json(self) -> list[str]:
        return [format_word(self.preperiod), format_word(self.period)]

    @classmethod
    def from_json(cls, pair: Sequence[str]) -> "SymbolicPoint":
        pre, per = pair
        return cls(parse_word(pre), parse_word(per))


def orbit_symbols(points: Sequence[SymbolicPoint], length: int) -> np.ndarray:
    """First ``length`` symbols of every point as an ``(len(points), length)`` array."""
    fast = getattr(points, "orbit_symbols", None)
    if fast is not None:
        return fast(length)
    out = np.empty((len(points), length), dtype=np.int64)
    groups: dict[tuple[int, int], list[int]] = {}
    for idx, x in enumerate(points):
        groups.setdefault((len(x.preperiod), len(x.period)), []).append(idx)
    cols = np.arange(length)
    for (p, q), idxs in groups.items():
        block = np.array([points[i].preperiod + points[i].period for i in idxs], dtype=np.int64)
        block = block.reshape(len(idxs), p + q)
        src = np.where(cols < p, cols, p + (cols - p) % q)
        out[idxs] = block[:, src]
    return out


@dataclass(frozen=True, eq=False)
class LocallyConstantPotential:
    """A function on the subshift reading only the first ``depth`` symbols.

    ``values`` maps each admissible ``depth``-word to a finite real.
    """

    system: SubshiftSystem
    depth: int
    values: Mapping[Word, float] = field(repr=False)

    def __post_init__(self):
        if self.depth < 1:
            raise ValidationError("potential depth must be at least 1")
        words = admissible_words(self.system, self.depth)
        given = {tuple(int(a) for a in w): float(v) for w, v in self.values.items()}
        missing = [w for w in words if w not in given]
        extra = set(given) - set(words)
        if missing:
            raise ValidationError(
                f"potential is missing admissible words, e.g. {format_word(missing[0])!r}"
            )
        if extra:
            raise ValidationError(
                f"potential defines inadmissible or wrong-length word {format_word(min(extra))!r}"
            )
        if not all(math.isfinite(v) for v in given.values()):
            raise ValidationError("potential values must be finite")
        object.__setattr__(self, "values", {w: given[w] for w in words})

    @classmethod
    def from_function(cls, S: SubshiftSystem, depth: int, fn: Callable[[Word], float]):
        return cls(S, depth, {w: fn(w) for w in admissible_words(S, depth)})

    @classmethod
    def constant(cls, S: SubshiftSystem, c: float = 0.0, depth: int = 1):
        return cls.from_function(S, depth, lambda w: c)

    @classmethod
    def from_vector(cls, S: SubshiftSystem, depth: int, vec: Sequence[float]):
        words = admissible_words(S, depth)
        if len(vec) != len(words):
            raise ValidationError("vector length does not match the admissible words")
        return cls(S, depth, dict(zip(words, (float(v) for v in vec))))

    def __call__(self, word: Sequence[int]) -> float:
        return self.values[tuple(word[: self.depth])]

    def vector(self) -> np.ndarray:
        """Values in lexicographic order of the admissible words."""
        return np.fromiter(self.values.values(), dtype=float, count=len(self.values))

    @cached_property
    def table(self) -> np.ndarray:
        """Dense lookup indexed by base-k word code; NaN on inadmissible words."""
        t = np.full(self.system.k ** self.depth, np.nan)
        for w, v in self.values.items():
            code = 0
            for a in w:
                code = code * self.system.k + a
            t[code] = v
        return t

    def lift(self, depth: int) -> "LocallyConstantPotential":
        """Same function viewed as reading ``depth >= self.depth`` symbols."""
        if depth < self.depth:
            raise ValidationError("cannot lift a potential to a smaller depth")
        if depth == self.depth:
            return self
        return LocallyConstantPotential.from_function(self.system, depth, self)

    def shifted(self) -> "LocallyConstantPotential":
        """The composition ``omega o T``, of depth ``depth + 1``."""
        return LocallyConstantPotential.from_function(
            self.system, self.depth + 1, lambda w: self.values[w[1:]]
        )

    def _combine(self, other, op):
        if isinstance(other, LocallyConstantPotential):
            if other.system != self.system:
                raise ValidationError("potentials live on different systems")
            m = max(self.depth, other.depth)
            a, b = self.lift(m), other.lift(m)
            return LocallyConstantPotential(
                self.system, m, {w: op(a.values[w], b.values[w]) for w in a.values}
            )
        c = float(other)
        return LocallyConstantPotential(
            self.system, self.depth, {w: op(v, c) for w, v in self.values.items()}
        )

    def __add__(self, other):
        return self._combine(other, lambda u, v: u + v)

    __radd__ = __add__

    def __sub__(self, other):
        return self._combine(other, lambda u, v: u - v)

    def __mul__(self, c):
        return LocallyConstantPotential(
            self.system, self.depth, {w: v * float(c) for w, v in self.values.items()}
        )

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def to_json(self) -> dict:
        return {"depth": self.depth, "values": {format_word(w): v for w, v in self.values.items()}}

    @classmethod
    def from_json(cls, S: SubshiftSystem, doc: Mapping) -> "LocallyConstantPotential":
        try:
            depth = int(doc["depth"])
            values = {parse_word(w): float(v) for w, v in doc["values"].items()}
        except (KeyError, TypeError, AttributeError) as exc:
            raise ValidationError(f"malformed potential document: {exc}") from None
        return cls(S, depth, values)


def admissible_words_array(S: SubshiftSystem, n: int) -> np.ndarray:
    """All admissible length-``n`` words as rows of an int array, lexicographic."""
    if n < 1:
        raise ValidationError("word length must be at least 1")
    words = np.arange(S.k, dtype=np.int64)[:, None]
    for _ in range(n - 1):
        rows, nxt = np.nonzero(S.A[words[:, -1]])
        words = np.hstack([words[rows], nxt[:, None]])
    return words


def admissible_words(S: SubshiftSystem, n: int) -> list[Word]:
    """All admissible words of length ``n`` in lexicographic order."""
    return [tuple(row) for row in admissible_words_array(S, n).tolist()]


def window_codes(symbols: np.ndarray, n: int, depth: int, k: int) -> np.ndarray:
    """Codes of the ``n`` length-``depth`` windows starting at 0..n-1 of each row."""
    if symbols.shape[1] < n + depth - 1:
        raise ValueError("not enough symbols for the requested windows")
    codes = np.zeros((symbols.shape[0], n), dtype=np.int64)
    for i in range(depth):
        codes = codes * k + symbols[:, i : i + n]
    return codes


def birkhoff_sums(points: Sequence[SymbolicPoint], f: LocallyConstantPotential, n: int) -> np.ndarray:
    """Vectorized ``birkhoff_sum`` over many points."""
    syms = orbit_symbols(points, n + f.depth - 1)
    table, k = f.table, f.system.k
    # Column by column keeps memory at one code vector per window.
    total = np.zeros(len(syms))
    for j in range(n):
        code = np.zeros(len(syms), dtype=np.int64)
        for i in range(f.depth):
            code = code * k + syms[:, j + i]
        total += table[code]
    return total


def birkhoff_sum(S: SubshiftSystem, f: LocallyConstantPotential, x: SymbolicPoint, n: int) -> float:
    """``sum_{j<n} f(T^j x)``."""
    if n < 1:
        raise ValidationError("n must be at least 1")
    if f.system != S:
        raise ValidationError("potential belongs to a different system")
    return float(birkhoff_sums([x], f, n)[0])


def _first_disagreement(x: SymbolicPoint, y: SymbolicPoint, window: int) -> int | None:
    xs, ys = x.symbols(window), y.symbols(window)
    diff = np.nonzero(xs != ys)[0]
    if diff.size:
        return int(diff[0])
    if x == y:
        return None
    # Normal forms differ, so the sequences differ before this bound.
    bound = max(len(x.preperiod), len(y.preperiod)) + math.lcm(len(x.period), len(y.period))
    xs, ys = x.symbols(bound), y.symbols(bound)
    return int(np.nonzero(xs != ys)[0][0])


def bowen_distance(S: SubshiftSystem, x: SymbolicPoint, y: SymbolicPoint, n: int) -> float:
    """``max_{0<=j<n} d(T^j x, T^j y)`` with ``d(x, y) = 2^-(first disagreement)``."""
    if n < 1:
        raise ValidationError("n must be at least 1")
    first = _first_disagreement(x, y, n + 64)
    if first is None:
        return 0.0
    if first < n:
        return 1.0
    return 2.0 ** -(first - n + 1)


def canonical_extension(S: SubshiftSystem, w: Sequence[int]) -> SymbolicPoint:
    """A point of the subshift whose sequence starts with ``w``.

    ``w^inf`` when the wrap ``w[-1] -> w[0]`` is allowed, otherwise ``w`` followed
    by the shortest (then lexicographically least) admissible cycle.
    """
    w = tuple(map(int, w))
    if not w:
        raise ValidationError("cannot extend the empty word")
    if not S.is_admissible(w):
        raise ValidationError(f"word {format_word(w)!r} is not admissible")
    return _extend(S, w)


def _extend(S: SubshiftSystem, w: Word) -> SymbolicPoint:
    if S.A[w[-1], w[0]]:
        return SymbolicPoint((), w)
    return SymbolicPoint(w, S._continuation_cycles[w[-1]])


def periodic_points(S: SubshiftSystem, n: int) -> list[SymbolicPoint]:
    """All points with ``T^n x = x``, ordered by their first ``n`` symbols."""
    words = admissible_words_array(S, n)
    cyclic = words[S.A[words[:, -1], words[:, 0]] == 1]
    return [SymbolicPoint((), tuple(row)) for row in cyclic.tolist()]
