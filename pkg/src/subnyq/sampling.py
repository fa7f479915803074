"""Multi-coset acquisition: patterns, coset streams, and the measurement matrix.

An (L, p) pattern keeps p of every L base-grid samples at fixed offsets C.
The p x L measurement matrix ties the spectra of the kept streams to the L
spectral cells of width 1/(L*T); its entry (i, l) is exp(j*2*pi*c_i*l/L)/(L*T),
a row selection of the conjugate DFT matrix scaled by 1/(L*T).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .signals import TimeSeries

__all__ = [
    "SamplingPattern",
    "CosetStreams",
    "MeasurementMatrix",
    "SpectralIndexSet",
    "BlindParameters",
    "coset_decompose",
    "build_measurement_matrix",
    "reduce_matrix",
    "average_rate",
    "blind_parameters",
    "streams_to_csv",
    "streams_from_csv",
]


@dataclass(frozen=True)
class SamplingPattern:
    """Period L, sorted distinct coset offsets C in [0, L-1], base period T."""

    L: int
    C: tuple[int, ...]
    T: float = 1.0

    def __post_init__(self):
        C = tuple(int(c) for c in self.C)
        if self.L < 1:
            raise ValueError("L must be >= 1")
        if not 1 <= len(C) <= self.L:
            raise ValueError("need 1 <= p <= L offsets")
        if any(not 0 <= c < self.L for c in C):
            raise ValueError("offsets must lie in [0, L-1]")
        if any(c1 >= c2 for c1, c2 in zip(C, C[1:])):
            raise ValueError("offsets must be strictly increasing")
        if self.T <= 0:
            raise ValueError("T must be positive")
        object.__setattr__(self, "C", C)

    @property
    def p(self) -> int:
        return len(self.C)

    def to_dict(self) -> dict:
        return {"L": self.L, "p": self.p, "C": list(self.C), "T": self.T}

    @classmethod
    def from_dict(cls, d: dict) -> "SamplingPattern":
        pat = cls(int(d["L"]), tuple(d["C"]), float(d.get("T", 1.0)))
        if "p" in d and int(d["p"]) != pat.p:
            raise ValueError("pattern p does not match len(C)")
        return pat


@dataclass(frozen=True)
class SpectralIndexSet:
    """Sorted distinct active-cell indices k within {0..L-1}."""

    k: tuple[int, ...]
    L: int

    def __post_init__(self):
        k = tuple(sorted(set(int(v) for v in self.k)))
        if any(not 0 <= v < self.L for v in k):
            raise ValueError("cell indices must lie in [0, L-1]")
        object.__setattr__(self, "k", k)

    @property
    def q(self) -> int:
        return len(self.k)

    def complement(self) -> "SpectralIndexSet":
        return SpectralIndexSet(tuple(sorted(set(range(self.L)) - set(self.k))), self.L)


@dataclass(frozen=True)
class CosetStreams:
    """Zero-padded coset sequences on the base grid, one row per offset.

    Row i is nonzero only at indices n = m*L + c_i.  The padded form is what
    the interpolation filter and the reconstruction formula consume; use
    compact() for the p x (length/L) per-ADC view.
    """

    streams: np.ndarray
    pattern: SamplingPattern

    def __post_init__(self):
        s = np.asarray(self.streams, dtype=np.complex128)
        if s.ndim != 2 or s.shape[0] != self.pattern.p:
            raise ValueError("streams must be a (p, length) array")
        if s.shape[1] % self.pattern.L:
            raise ValueError("stream length must be a multiple of L")
        L = self.pattern.L
        for i, c in enumerate(self.pattern.C):
            off = np.ones(s.shape[1], dtype=bool)
            off[c::L] = False
            if np.any(s[i, off] != 0):
                raise ValueError(f"stream {i} has samples off its coset {c}")
        object.__setattr__(self, "streams", s)

    @property
    def length(self) -> int:
        return self.streams.shape[1]

    def compact(self) -> np.ndarray:
        L = self.pattern.L
        return np.stack(
            [self.streams[i, c::L] for i, c in enumerate(self.pattern.C)]
        )


@dataclass(frozen=True)
class MeasurementMatrix:
    """The p x L coset measurement matrix together with its pattern."""

    entries: np.ndarray
    pattern: SamplingPattern

    def __post_init__(self):
        e = np.asarray(self.entries, dtype=np.complex128)
        if e.shape != (self.pattern.p, self.pattern.L):
            raise ValueError("entries must be p x L")
        object.__setattr__(self, "entries", e)

    def column(self, k: int) -> np.ndarray:
        if not 0 <= k < self.pattern.L:
            raise ValueError(f"cell index {k} out of range [0, {self.pattern.L - 1}]")
        return self.entries[:, k]


@dataclass(frozen=True)
class BlindParameters:
    """Parameters picked from (N, B, f_max, d) when band locations are unknown."""

    L: int
    q_max: int
    p: int
    q_bounds: tuple[int, int]
    d: int


def coset_decompose(x: TimeSeries, pattern: SamplingPattern) -> CosetStreams:
    """Split a base-rate stream into zero-padded coset sequences.

    Keeps x at indices m*L + c_i in row i and zeros elsewhere.  The input is
    zero-padded up to a multiple of L.  Indices are taken relative to the
    start of the series.
    """
    if abs(x.T - pattern.T) > 1e-12 * max(x.T, pattern.T):
        raise ValueError(f"series period {x.T} does not match pattern T {pattern.T}")
    L, p = pattern.L, pattern.p
    n = len(x.samples)
    n_pad = ((n + L - 1) // L) * L
    base = np.zeros(n_pad, dtype=np.complex128)
    base[:n] = x.samples
    streams = np.zeros((p, n_pad), dtype=np.complex128)
    for i, c in enumerate(pattern.C):
        streams[i, c::L] = base[c::L]
    return CosetStreams(streams, pattern)


def build_measurement_matrix(pattern: SamplingPattern) -> MeasurementMatrix:
    """Rows of the conjugate L x L DFT matrix selected by C, scaled by 1/(L*T)."""
    L, T = pattern.L, pattern.T
    C = np.asarray(pattern.C)
    phases = np.exp(2j * np.pi * np.outer(C, np.arange(L)) / L)
    return MeasurementMatrix(phases / (L * T), pattern)


def reduce_matrix(A: MeasurementMatrix, k: SpectralIndexSet) -> np.ndarray:
    """Columns of A selected by the active-cell indices, order preserved."""
    if k.L != A.pattern.L:
        raise ValueError(f"index set has L={k.L} but matrix has L={A.pattern.L}")
    return A.entries[:, list(k.k)]


def average_rate(pattern: SamplingPattern, f_max: float) -> float:
    """Average sampling rate (p/L)*f_max of the multi-coset scheme."""
    return pattern.p / pattern.L * f_max


def blind_parameters(N: int, B: float, f_max: float, d: int) -> BlindParameters:
    """Choose (L, q_max, p) for N bands of width <= B below f_max.

    L = d*floor(f_max/B) ties the cell width to the band width; each band then
    straddles at most d+1 cells, so q_max = N*(d+1) and one extra row p =
    q_max + 1 suffices.  Both are capped at L so degenerate inputs stay valid.
    With d = 0 the cells are taken at the band resolution, L = floor(f_max/B),
    and bands are assumed cell-aligned.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    if not 0 < B <= f_max:
        raise ValueError("need 0 < B <= f_max")
    if d < 0:
        raise ValueError("d must be a nonnegative integer")
    L = max(d, 1) * int(math.floor(f_max / B))
    if L < 1:
        raise ValueError(f"invalid parameters: L = {L} < 1")
    q_max = min(N * (d + 1), L)
    p = min(q_max + 1, L)
    q_lo = min(int(math.ceil(N * B * L / f_max)), q_max)
    return BlindParameters(L=L, q_max=q_max, p=p, q_bounds=(q_lo, q_max), d=d)


def streams_to_csv(cs: CosetStreams, header_comment: str = "") -> str:
    """Coset streams as CSV: base index plus re/im column pair per coset."""
    lines = []
    if header_comment:
        lines.append(f"# {header_comment}")
    cols = ["n"]
    for i in range(cs.pattern.p):
        cols += [f"s{i}_re", f"s{i}_im"]
    lines.append(",".join(cols))
    for n in range(cs.length):
        row = [str(n)]
        for i in range(cs.pattern.p):
            v = cs.streams[i, n]
            row += [repr(float(v.real)), repr(float(v.imag))]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def streams_from_csv(text: str, pattern: SamplingPattern) -> CosetStreams:
    rows = [
        r.split(",")
        for r in text.splitlines()
        if r and not r.startswith("#") and not r.startswith("n,")
    ]
    p = pattern.p
    if rows and len(rows[0]) != 1 + 2 * p:
        raise ValueError(
            f"stream CSV has {len(rows[0])} columns, expected {1 + 2 * p}"
        )
    data = np.asarray([[float(v) for v in r] for r in rows])
    if data.size == 0:
        return CosetStreams(np.zeros((p, 0), dtype=np.complex128), pattern)
    streams = data[:, 1::2].T + 1j * data[:, 2::2].T
    return CosetStreams(streams, pattern)
