"""Sampling-pattern selection by matrix conditioning.

The reduced measurement matrix built from pattern C and cell set k governs
noise amplification through its condition number, so pattern search minimizes
cond over candidate offset sets: exhaustively for small problems, greedily
(sequential forward selection) otherwise, and from a randomized candidate
support when the true support is unknown.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations, islice
from typing import Callable, Iterable

import numpy as np

from .sampling import SamplingPattern, SpectralIndexSet, blind_parameters

__all__ = [
    "PatternSearchResult",
    "SearchBudgetError",
    "condition_number",
    "exhaustive_pattern_search",
    "sfs_pattern_search",
    "sfs_cost",
    "draw_anchors",
    "anchor_support",
    "blind_sfs",
    "random_pattern",
    "cond_histogram",
]

# relative singular-value floor below which a matrix counts as rank-deficient
RANK_RTOL = 1e-12


class SearchBudgetError(RuntimeError):
    pass


@dataclass(frozen=True)
class PatternSearchResult:
    pattern: SamplingPattern
    cond: float
    evaluations: int
    design_k: SpectralIndexSet | None = None


def condition_number(A: np.ndarray) -> float:
    """sigma_max/sigma_min of A; +inf below the rank tolerance.

    The tolerance is sigma_max * 1e-12 * max(A.shape), so numerically singular
    matrices report as infinite rather than as float noise.
    """
    A = np.asarray(A)
    if A.size == 0:
        raise ValueError("condition_number of an empty matrix")
    s = np.linalg.svd(A, compute_uv=False)
    if s[0] == 0.0 or s[-1] < s[0] * RANK_RTOL * max(A.shape):
        return math.inf
    return float(s[0] / s[-1])


def _phase_matrix(L: int, C: np.ndarray, karr: np.ndarray) -> np.ndarray:
    # scale-free form of the reduced measurement matrix (cond is scale invariant)
    return np.exp(2j * np.pi * np.einsum("...i,j->...ij", C, karr) / L)


def _cond_stack(mats: np.ndarray) -> np.ndarray:
    s = np.linalg.svd(mats, compute_uv=False)
    tol = s[..., 0] * RANK_RTOL * max(mats.shape[-2:])
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(s[..., -1] > tol, s[..., 0] / s[..., -1], np.inf)
    return np.where(s[..., 0] == 0.0, np.inf, out)


def _chunks(it: Iterable, size: int):
    it = iter(it)
    while True:
        block = list(islice(it, size))
        if not block:
            return
        yield block


def exhaustive_pattern_search(
    L: int,
    p: int,
    k: SpectralIndexSet,
    T: float = 1.0,
    budget: int = 10**6,
) -> PatternSearchResult:
    """Minimize cond over all C(L, p) offset sets; ties go to the smallest C.

    Refuses when the candidate count exceeds the budget; use
    sfs_pattern_search for large problems.
    """
    total = math.comb(L, p)
    if total > budget:
        raise SearchBudgetError(
            f"exhaustive search needs {total} evaluations (> budget {budget}); "
            "use sfs_pattern_search instead"
        )
    karr = np.asarray(k.k)
    best_cond = math.inf
    best_C: tuple[int, ...] | None = None
    # combinations() is lexicographic, so keeping strict improvements preserves
    # the smallest-C tie-break under chunked evaluation
    for block in _chunks(combinations(range(L), p), 4096):
        mats = _phase_matrix(L, np.asarray(block), karr)
        conds = _cond_stack(mats)
        i = int(np.argmin(conds))
        if conds[i] < best_cond:
            best_cond = float(conds[i])
            best_C = block[i]
    assert best_C is not None
    return PatternSearchResult(
        SamplingPattern(L, best_C, T), best_cond, total, design_k=k
    )


def sfs_pattern_search(
    L: int, p: int, k: SpectralIndexSet, T: float = 1.0
) -> PatternSearchResult:
    """Greedy forward selection of offsets minimizing cond at each step.

    Starts from the empty set and adds, p times, the offset whose addition
    gives the smallest condition number on the columns k; ties resolve to the
    smallest offset.  Costs p*L - p*(p-1)/2 evaluations.
    """
    if p > L:
        raise ValueError("p must not exceed L")
    karr = np.asarray(k.k)
    chosen: list[int] = []
    evaluations = 0
    final_cond = math.inf
    for _ in range(p):
        cands = [c for c in range(L) if c not in chosen]
        trial = np.asarray([sorted(chosen + [c]) for c in cands])
        conds = _cond_stack(_phase_matrix(L, trial, karr))
        evaluations += len(cands)
        i = int(np.argmin(conds))  # argmin takes the first = smallest offset
        chosen = sorted(chosen + [cands[i]])
        final_cond = float(conds[i])
    return PatternSearchResult(
        SamplingPattern(L, tuple(chosen), T), final_cond, evaluations, design_k=k
    )


def sfs_cost(L: int, p: int) -> int:
    """Evaluation count of the greedy search: p*L - p*(p-1)/2."""
    if p > L:
        raise ValueError("p must not exceed L")
    return p * L - p * (p - 1) // 2


def draw_anchors(N: int, d: int, L: int, rng: np.random.Generator) -> list[int]:
    """Draw band anchors a_1 < a_2 < ... with gaps > d, sequentially uniform.

    Each a_i is uniform over the range that keeps the remaining anchors
    feasible, i.e. a_i >= a_{i-1} + d + 1 and a_i <= L - (N-i+1)*(d+1).
    """
    if N * (d + 1) > L:
        raise ValueError(f"cannot place {N} anchors with spacing {d + 1} in {L} cells")
    anchors: list[int] = []
    lo = 0
    for i in range(N):
        hi = L - (N - i) * (d + 1)
        anchors.append(int(rng.integers(lo, hi + 1)))
        lo = anchors[-1] + d + 1
    return anchors


def anchor_support(anchors: Iterable[int], d: int, L: int) -> SpectralIndexSet:
    """Candidate support covering d+1 cells upward from each anchor."""
    cells: set[int] = set()
    for a in anchors:
        cells.update(range(a, a + d + 1))
    return SpectralIndexSet(tuple(sorted(cells)), L)


def blind_sfs(
    N: int,
    B: float,
    f_max: float,
    d: int,
    seed: int,
    L: int | None = None,
    T: float | None = None,
) -> PatternSearchResult:
    """Pattern choice for unknown band locations.

    Derives (L, q_max, p) from the band count and width, places a maximal
    candidate support at random anchors, and runs the greedy search against
    it.  Deterministic for a fixed seed.  Pass L to override the derived
    period (needed when d = 0 fixes cells at the band resolution externally).
    """
    params = blind_parameters(N, B, f_max, d)
    L_eff = params.L if L is None else L
    if N * (d + 1) > L_eff:
        raise ValueError("anchor spacing constraint infeasible: N*(d+1) > L")
    rng = np.random.default_rng(seed)
    anchors = draw_anchors(N, d, L_eff, rng)
    k = anchor_support(anchors, d, L_eff)
    p = min(params.p, L_eff)
    out = sfs_pattern_search(L_eff, p, k, T=T if T is not None else 1.0 / f_max)
    return PatternSearchResult(out.pattern, out.cond, out.evaluations, design_k=k)


def random_pattern(L: int, p: int, rng: np.random.Generator) -> SamplingPattern:
    C = tuple(sorted(rng.choice(L, size=p, replace=False).tolist()))
    return SamplingPattern(L, C)


def cond_histogram(
    L: int,
    p: int,
    trials: int,
    seed: int,
    k: SpectralIndexSet | None = None,
    pattern: SamplingPattern | None = None,
    support_generator: Callable[[np.random.Generator], SpectralIndexSet] | None = None,
) -> np.ndarray:
    """Sample condition numbers for histogramming.

    Two modes: with a fixed cell set k, draw `trials` random offset patterns;
    with a fixed pattern plus a support generator, draw random supports
    against it.  Deterministic given the seed.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if (k is None) == (support_generator is None):
        raise ValueError("provide exactly one of k or support_generator")
    rng = np.random.default_rng(seed)
    if k is not None:
        karr = np.asarray(k.k)
        pats = np.stack(
            [np.sort(rng.choice(L, size=p, replace=False)) for _ in range(trials)]
        )
        return _cond_stack(_phase_matrix(L, pats, karr))
    if pattern is None:
        raise ValueError("support_generator mode requires a fixed pattern")
    C = np.asarray(pattern.C)
    vals = np.empty(trials)
    for i in range(trials):
        ki = support_generator(rng)
        vals[i] = _cond_stack(_phase_matrix(L, C[None, :], np.asarray(ki.k)))[0]
    return vals
