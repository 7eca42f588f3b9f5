"""Structured Gaussian observation model.

The observation matrix is built from one i.i.d. N(0, 1) input sequence
``h`` of length ``n + m - 1`` by sliding a window of width ``m`` down the
sequence: row ``i`` (0-based) is ``h[i : i + m]``.  Entries therefore depend
only on ``i + j`` (constant along anti-diagonals).  ``row_reverse=True``
flips the column order, which gives the classical Toeplitz layout (constant
along diagonals) without changing any l1 recovery property.

Observations follow ``y = H x + e + w`` with ``e`` sparse (outliers) and
``w`` dense noise.

All randomness goes through :func:`numpy.random.default_rng`, i.e. the
PCG64 bit generator with numpy's ziggurat normal transform.  Both are
fixed, documented algorithms, so a given seed reproduces bit-identical
draws on every platform.

Indices are 0-based throughout.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InvalidDimensionError, InvalidParameterError, InvalidSparsityError

__all__ = [
    "GaussSequence",
    "ToeplitzMatrix",
    "SparseVector",
    "NoiseSpec",
    "ProblemInstance",
    "generate_sequence",
    "build_matrix",
    "sample_outliers",
    "sample_noise",
    "observe",
    "format_instance",
    "parse_instance",
    "write_instance",
    "read_instance",
]

NOISE_FAMILIES = ("none", "gaussian", "exponential", "gamma")


def _rng(seed):
    return np.random.default_rng(int(seed))


@dataclass(frozen=True)
class GaussSequence:
    """Input sequence ``h`` backing an ``n x m`` observation matrix."""

    values: np.ndarray
    n: int
    m: int
    seed: int | None = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if self.m < 1 or self.n < self.m:
            raise InvalidDimensionError(f"need n >= m >= 1, got n={self.n}, m={self.m}")
        if values.shape != (self.n + self.m - 1,):
            raise InvalidDimensionError(
                f"sequence length must be n + m - 1 = {self.n + self.m - 1}, got {values.shape}"
            )
        values.setflags(write=False)
        object.__setattr__(self, "values", values)


def generate_sequence(n: int, m: int, seed: int) -> GaussSequence:
    """Draw ``n + m - 1`` standard normal inputs from a seeded PCG64 stream."""
    if m < 1 or n < m:
        raise InvalidDimensionError(f"need n >= m >= 1, got n={n}, m={m}")
    values = _rng(seed).standard_normal(n + m - 1)
    return GaussSequence(values, n, m, int(seed))


@dataclass(frozen=True)
class ToeplitzMatrix:
    """Sliding-window matrix over a :class:`GaussSequence`.

    Only the ``n + m - 1`` sequence values are stored; :attr:`array` is a
    read-only dense view materialised on construction.
    """

    seq: GaussSequence
    row_reverse: bool = False
    array: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        n, m = self.seq.n, self.seq.m
        h = self.seq.values
        # window view: row i is h[i:i+m]
        dense = np.lib.stride_tricks.sliding_window_view(h, m)[:n].copy()
        if self.row_reverse:
            dense = dense[:, ::-1].copy()
        dense.setflags(write=False)
        object.__setattr__(self, "array", dense)

    @property
    def rows(self) -> int:
        return self.seq.n

    @property
    def cols(self) -> int:
        return self.seq.m

    @property
    def shape(self) -> tuple[int, int]:
        return self.array.shape

    def entry(self, i: int, j: int) -> float:
        if self.row_reverse:
            j = self.seq.m - 1 - j
        return float(self.seq.values[i + j])

    def __array__(self, dtype=None, copy=None):
        return self.array if dtype is None else self.array.astype(dtype)


def build_matrix(seq: GaussSequence, row_reverse: bool = False) -> ToeplitzMatrix:
    """Arrange ``seq`` into the ``n x m`` observation matrix."""
    return ToeplitzMatrix(seq, row_reverse)


@dataclass(frozen=True)
class SparseVector:
    """Length-``length`` vector that is zero outside ``support``."""

    length: int
    support: np.ndarray
    entries: np.ndarray

    def __post_init__(self):
        support = np.asarray(self.support, dtype=np.int64).reshape(-1)
        entries = np.asarray(self.entries, dtype=float).reshape(-1)
        if support.shape != entries.shape:
            raise InvalidDimensionError("support and entries must have equal length")
        if support.size and (support.min() < 0 or support.max() >= self.length):
            raise InvalidDimensionError(f"support indices must lie in [0, {self.length})")
        if np.unique(support).size != support.size:
            raise InvalidDimensionError("support indices must be distinct")
        order = np.argsort(support, kind="stable")
        support, entries = support[order], entries[order]
        support.setflags(write=False)
        entries.setflags(write=False)
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "entries", entries)

    @classmethod
    def zeros(cls, length: int) -> "SparseVector":
        return cls(length, np.empty(0, dtype=np.int64), np.empty(0))

    @classmethod
    def from_dense(cls, v) -> "SparseVector":
        v = np.asarray(v, dtype=float)
        idx = np.flatnonzero(v)
        return cls(v.size, idx, v[idx])

    @property
    def k(self) -> int:
        return int(self.support.size)

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.length)
        out[self.support] = self.entries
        return out

    def __getitem__(self, i: int) -> float:
        pos = np.searchsorted(self.support, i)
        if pos < self.support.size and self.support[pos] == i:
            return float(self.entries[pos])
        if not 0 <= i < self.length:
            raise IndexError(i)
        return 0.0


def _partial_fisher_yates(rng, n, k):
    perm = np.arange(n)
    for i in range(k):
        j = int(rng.integers(i, n))
        perm[i], perm[j] = perm[j], perm[i]
    return perm[:k]


def sample_outliers(n: int, k: int, magnitude_sigma: float, seed: int) -> SparseVector:
    """Place ``k`` i.i.d. ``N(0, magnitude_sigma**2)`` outliers on a uniform random support."""
    if not 0 <= k <= n:
        raise InvalidSparsityError(f"need 0 <= k <= n, got k={k}, n={n}")
    if not magnitude_sigma > 0:
        raise InvalidParameterError("magnitude_sigma must be positive")
    rng = _rng(seed)
    support = _partial_fisher_yates(rng, n, k)
    values = magnitude_sigma * rng.standard_normal(k)
    return SparseVector(n, support, values)


@dataclass(frozen=True)
class NoiseSpec:
    """Dense noise family with its single scale parameter.

    ``param`` is the standard deviation for ``gaussian``, the mean for
    ``exponential`` and the scale for ``gamma`` (shape fixed at 2).
    """

    family: str = "none"
    param: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.family not in NOISE_FAMILIES:
            raise InvalidParameterError(f"unknown noise family {self.family!r}")
        if self.family != "none" and not self.param > 0:
            raise InvalidParameterError(f"{self.family} noise needs a positive parameter")

    @classmethod
    def none(cls, seed: int = 0) -> "NoiseSpec":
        return cls("none", 0.0, seed)

    @classmethod
    def gaussian(cls, sigma: float = 1.0, seed: int = 0) -> "NoiseSpec":
        return cls("gaussian", sigma, seed)

    @classmethod
    def exponential(cls, mean: float = np.sqrt(2) / 2, seed: int = 0) -> "NoiseSpec":
        return cls("exponential", mean, seed)

    @classmethod
    def gamma_shape2(cls, scale: float = 1 / np.sqrt(6), seed: int = 0) -> "NoiseSpec":
        return cls("gamma", scale, seed)

    @classmethod
    def unit_energy(cls, family: str, seed: int = 0) -> "NoiseSpec":
        """The unit-second-moment member of ``family`` used in the Monte Carlo study."""
        return {
            "none": cls.none,
            "gaussian": cls.gaussian,
            "exponential": cls.exponential,
            "gamma": cls.gamma_shape2,
        }[family](seed=seed)

    def with_seed(self, seed: int) -> "NoiseSpec":
        return NoiseSpec(self.family, self.param, seed)

    @property
    def second_moment(self) -> float:
        p = self.param
        return {"none": 0.0, "gaussian": p**2, "exponential": 2 * p**2, "gamma": 6 * p**2}[
            self.family
        ]


def sample_noise(n: int, spec: NoiseSpec) -> np.ndarray:
    """Draw ``n`` i.i.d. noise values from ``spec``.

    Shape-2 gamma draws are sums of two independent exponentials, which is
    exact and avoids a rejection loop.
    """
    if spec.family == "none":
        return np.zeros(n)
    rng = _rng(spec.seed)
    if spec.family == "gaussian":
        return spec.param * rng.standard_normal(n)
    if spec.family == "exponential":
        return rng.exponential(spec.param, n)
    return rng.exponential(spec.param, (2, n)).sum(axis=0)


@dataclass(frozen=True)
class ProblemInstance:
    H: ToeplitzMatrix
    x: np.ndarray
    e: SparseVector
    w: np.ndarray
    y: np.ndarray

    @property
    def n(self) -> int:
        return self.H.rows

    @property
    def m(self) -> int:
        return self.H.cols


def observe(H: ToeplitzMatrix, x, e: SparseVector | None = None, w=None) -> ProblemInstance:
    """Assemble ``y = H x + e + w``."""
    n, m = H.shape
    x = np.asarray(x, dtype=float).reshape(-1)
    if e is None:
        e = SparseVector.zeros(n)
    w = np.zeros(n) if w is None else np.asarray(w, dtype=float).reshape(-1)
    if x.shape != (m,) or e.length != n or w.shape != (n,):
        raise InvalidDimensionError(
            f"expected x of length {m}, e and w of length {n}; "
            f"got {x.shape}, {e.length}, {w.shape}"
        )
    y = H.array @ x + e.to_dense() + w
    return ProblemInstance(H, x, e, w, y)


# --- text serialisation -----------------------------------------------------
# Line 1: "n m seed"; then one line each for the sequence, x, e (as
# "index:value" pairs, 0-based), w and y.  Floats use repr() so values
# round-trip exactly.


def _fmt(values) -> str:
    return " ".join(repr(float(v)) for v in values)


def format_instance(inst: ProblemInstance) -> str:
    seq = inst.H.seq
    seed = -1 if seq.seed is None else seq.seed
    lines = [
        f"{seq.n} {seq.m} {seed}",
        _fmt(seq.values),
        _fmt(inst.x),
        " ".join(f"{int(i)}:{float(v)!r}" for i, v in zip(inst.e.support, inst.e.entries)),
        _fmt(inst.w),
        _fmt(inst.y),
    ]
    return "\n".join(lines) + "\n"


def parse_instance(text: str) -> ProblemInstance:
    lines = text.split("\n")
    if len(lines) < 6:
        raise ValueError("instance text needs 6 lines: header, sequence, x, e, w, y")
    try:
        n, m, seed = (int(tok) for tok in lines[0].split())
    except ValueError as exc:
        raise ValueError(f"bad instance header {lines[0]!r}") from exc
    vec = lambda s: np.array([float(tok) for tok in s.split()])  # noqa: E731
    seq = GaussSequence(vec(lines[1]), n, m, None if seed < 0 else seed)
    pairs = [tok.split(":") for tok in lines[3].split()]
    e = SparseVector(n, [int(i) for i, _ in pairs], [float(v) for _, v in pairs])
    inst = ProblemInstance(build_matrix(seq), vec(lines[2]), e, vec(lines[4]), vec(lines[5]))
    if inst.x.shape != (m,) or inst.w.shape != (n,) or inst.y.shape != (n,):
        raise InvalidDimensionError("instance vectors do not match the header dimensions")
    return inst


def write_instance(inst: ProblemInstance, path) -> Path:
    path = Path(path)
    path.write_text(format_instance(inst))
    return path


def read_instance(path) -> ProblemInstance:
    return parse_instance(Path(path).read_text())
