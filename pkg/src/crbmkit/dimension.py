"""Dimension certification: numeric Jacobian rank and the tropical bound.

The numeric path takes the max rank of the conditional-probability Jacobian
over random parameter draws; rank is lower-semicontinuous, so this is a
certified lower bound on the model dimension and generically attains it.

The tropical path builds the integer matrix (A | A_{C_1} | ... | A_{C_m})
whose row at visible state v is (1, v) masked by membership in each slicing
C_i, augments it with the 2^k indicator columns of the input cylinders [x]
to quotient out functions of x, and computes an exact fraction-free rank
over the integers; the result minus 2^k lower-bounds the dimension.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .bitspace import HammingBall, State, ball_members
from .bounds import expected_dim
from .crbm import conditional_jacobian, random_params
from .errors import UnstableRank

#: relative SVD threshold coefficient
RANK_TOL_COEFF = 2.0 ** -40


def numeric_rank(matrix: np.ndarray, tol_coeff: float = RANK_TOL_COEFF) -> int:
    """Rank by singular-value thresholding at sigma_max * max(dim) * coeff.

    The count must agree under halving and doubling the threshold, otherwise
    the rank is numerically unstable and an error is raised.
    """
    m = np.asarray(matrix, dtype=float)
    if m.size == 0:
        return 0
    if not np.all(np.isfinite(m)):
        raise ValueError("non-finite matrix entries")
    sv = np.linalg.svd(m, compute_uv=False)
    if sv.size == 0 or sv[0] == 0.0:
        return 0
    tol = sv[0] * max(m.shape) * tol_coeff
    lo = int((sv > 2.0 * tol).sum())
    hi = int((sv > 0.5 * tol).sum())
    if lo != hi:
        raise UnstableRank(f"rank {lo} vs {hi} under threshold perturbation")
    return int((sv > tol).sum())


def crbm_dimension_estimate(k: int, n: int, m: int, trials: int = 8,
                            seed: int = 0) -> int:
    """Max numeric Jacobian rank over random standard-normal parameter draws."""
    rng = np.random.default_rng(seed)
    best = 0
    for _ in range(trials):
        params = random_params(k, n, m, rng, scale=1.0)
        best = max(best, numeric_rank(conditional_jacobian(params)))
    return best


def _exact_int_rank(matrix: list[list[int]]) -> int:
    """Fraction-free Gaussian elimination rank over the rationals."""
    rows = [[Fraction(v) for v in row] for row in matrix]
    n_rows = len(rows)
    n_cols = len(rows[0]) if rows else 0
    rank = 0
    for col in range(n_cols):
        pivot = next((r for r in range(rank, n_rows) if rows[r][col] != 0), None)
        if pivot is None:
            continue
        rows[rank], rows[pivot] = rows[pivot], rows[rank]
        pr = rows[rank]
        for r in range(rank + 1, n_rows):
            if rows[r][col] != 0:
                f = rows[r][col] / pr[col]
                rows[r] = [a - f * b for a, b in zip(rows[r], pr)]
        rank += 1
        if rank == n_rows:
            break
    return rank


def tropical_matrix(k: int, n: int, slicings: list[HammingBall]) -> list[list[int]]:
    """(A | A_{C_1} | ... | A_{C_m} | X) with 0/1 integer entries.

    Rows are indexed by visible states v = x + 2^k*y; A's row is (1, bits(v));
    block i is that row masked by membership of v in the i-th ball; X holds
    the indicator columns of the input cylinders [x].
    """
    width = k + n
    ball_sets = [frozenset(s.index for s in ball_members(b)) for b in slicings]
    rows = []
    for v in range(1 << width):
        base = [1] + [(v >> i) & 1 for i in range(width)]
        row = list(base)
        for bs in ball_sets:
            row.extend(base if v in bs else [0] * (width + 1))
        x = v & ((1 << k) - 1)
        row.extend(1 if x == xc else 0 for xc in range(1 << k))
        rows.append(row)
    return rows


def tropical_rank_mod_inputs(k: int, n: int, m: int,
                             slicings: list[HammingBall]) -> int:
    """Exact rank of (A_theta | X) minus 2^k: the column span modulo
    functions of x achievable on the given radius-1 ball slicings."""
    if len(slicings) > m:
        raise ValueError("more slicings than hidden units")
    for b in slicings:
        if b.width != k + n:
            raise ValueError("slicing width must be k + n")
    return _exact_int_rank(tropical_matrix(k, n, slicings)) - (1 << k)


def greedy_distance4_balls(k: int, n: int, m: int) -> list[HammingBall]:
    """Lexicographic first-fit centers pairwise at Hamming distance >= 4."""
    width = k + n
    centers: list[int] = []
    for v in range(1 << width):
        if all(bin(v ^ c).count("1") >= 4 for c in centers):
            centers.append(v)
            if len(centers) == m:
                break
    return [HammingBall(State(c, width)) for c in centers]


def _cylinder_free(k: int, n: int, balls: list[HammingBall]) -> bool:
    """True iff the ball union contains no input cylinder [x]."""
    union = set()
    for b in balls:
        union |= {s.index for s in ball_members(b)}
    for x in range(1 << k):
        if all(x + (y << k) in union for y in range(1 << n)):
            return False
    return True


def _complement_full_affine(k: int, n: int, balls: list[HammingBall]) -> bool:
    union = set()
    for b in balls:
        union |= {s.index for s in ball_members(b)}
    width = k + n
    rest = [v for v in range(1 << width) if v not in union]
    if not rest:
        return False
    mat = np.array([[1] + [(v >> i) & 1 for i in range(width)] for v in rest],
                   dtype=float)
    return int(np.linalg.matrix_rank(mat)) == width + 1


@dataclass(frozen=True)
class DimensionReport:
    k: int
    n: int
    m: int
    expected_value: int
    regime: str
    numeric: int
    tropical: int
    balls_placed: int
    placement_clean: bool
    agree: bool
    tropical_consistent: bool

    def to_json_obj(self) -> dict:
        return {
            "k": self.k, "n": self.n, "m": self.m,
            "expected_value": self.expected_value, "regime": self.regime,
            "numeric": self.numeric, "tropical": self.tropical,
            "balls_placed": self.balls_placed,
            "placement_clean": self.placement_clean,
            "agree": self.agree,
            "tropical_consistent": self.tropical_consistent,
        }


def certify_dimension(k: int, n: int, m: int, trials: int = 8,
                      seed: int = 0) -> DimensionReport:
    """Combine the expected dimension, the tropical lower bound from a greedy
    distance-4 ball placement, and the numeric rank estimate."""
    expected_value, regime = expected_dim(k, n, m)
    numeric = crbm_dimension_estimate(k, n, m, trials=trials, seed=seed)
    balls = greedy_distance4_balls(k, n, m)
    tropical = tropical_rank_mod_inputs(k, n, m, balls)
    clean = _cylinder_free(k, n, balls) and _complement_full_affine(k, n, balls)
    return DimensionReport(
        k=k, n=n, m=m,
        expected_value=expected_value, regime=regime,
        numeric=numeric, tropical=tropical,
        balls_placed=len(balls), placement_clean=clean,
        agree=numeric == expected_value,
        tropical_consistent=tropical <= numeric,
    )


__all__ = [
    "DimensionReport",
    "certify_dimension",
    "crbm_dimension_estimate",
    "greedy_distance4_balls",
    "numeric_rank",
    "tropical_matrix",
    "tropical_rank_mod_inputs",
]
