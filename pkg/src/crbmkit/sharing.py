"""Sharing-step algebra: p -> lam*p + (1-lam)*(p * s) for product tilts s.

A step is stored by its per-coordinate *log* factor pairs; concentrated steps
put -tau on the off-region value of a coordinate, so arbitrary sharpness never
leaves the log domain.  The factor normalization is irrelevant: it cancels in
the step's effect and in the hidden-unit realization, so factors are kept
unnormalized.

Every step is realizable as one appended hidden unit.  With odds
w_i = log s_i(1) - log s_i(0) and S0 = prod_i s_i(0), appending a unit with
visible weights w and bias log((1-lam) S0 / (lam N)), N = sum_v p(v) s(v),
multiplies p entrywise by a positive multiple of lam + (1-lam) s(v)/N, which
is exactly the step.  step_to_hidden_unit verifies nothing by formula; the
evaluation contract is tested.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .bitspace import CylinderSet, State, Star, star_members
from .distributions import Dist
from .errors import (
    DegenerateStep,
    InfeasibleProfile,
    LambdaZero,
    ShapeMismatch,
)

#: |log T| clamp for degenerate mixture weights (beta -> 0 or 1)
LOG_T_CAP = 5e4
#: hidden-unit bias magnitude cap
BIAS_CAP = 1e7


@dataclass(frozen=True)
class SharingStep:
    """One sharing step: mixture weight lam and product-tilt log factors."""

    width: int
    lam: float
    log_factors: np.ndarray = field(repr=False)  # (width, 2): log s_i(0), log s_i(1)

    def __post_init__(self):
        lf = np.asarray(self.log_factors, dtype=float)
        if lf.shape != (self.width, 2):
            raise ShapeMismatch(f"log_factors must be ({self.width}, 2)")
        if not np.all(np.isfinite(lf)):
            raise ValueError("non-finite log factors")
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError(f"lambda must be in [0, 1], got {self.lam}")
        object.__setattr__(self, "log_factors", lf)
        lf.setflags(write=False)

    @property
    def factors(self) -> np.ndarray:
        """Per-coordinate positive factor pairs (may underflow for display)."""
        return np.exp(self.log_factors)

    def log_values(self) -> np.ndarray:
        """log s(v) over all 2^width states."""
        idx = np.arange(1 << self.width)
        out = np.zeros(idx.size)
        for i in range(self.width):
            bit = (idx >> i) & 1
            out = out + np.where(bit == 1, self.log_factors[i, 1],
                                 self.log_factors[i, 0])
        return out

    def to_json_obj(self) -> dict:
        return {"width": self.width, "lam": self.lam,
                "log_factors": self.log_factors.tolist()}


@dataclass(frozen=True)
class SharpStepSpec:
    """Recipe for a concentrated step: support region, profile, sharpness.

    ``support`` pins the coordinates of the target region {y}xC; coordinates
    listed in ``free_log_odds`` carry the solved within-star odds relative to
    the anchor state; everything else is flat.
    """

    width: int
    support: CylinderSet
    anchor: State
    free_log_odds: dict[int, float]
    sharpness: float

    def to_log_factors(self) -> np.ndarray:
        lf = np.zeros((self.width, 2))
        for i in range(self.width):
            if (self.support.fixed_mask >> i) & 1:
                keep = (self.support.fixed_values >> i) & 1
                lf[i, 1 - keep] = -self.sharpness
            elif i in self.free_log_odds:
                a = self.anchor.bit(i)
                lf[i, 1 - a] = self.free_log_odds[i]
        return lf


def apply_sharing_log(logp: np.ndarray, step: SharingStep) -> np.ndarray:
    """Apply a step to a log joint; returns a normalized log joint."""
    log_s = step.log_values()
    log_norm = logsumexp(logp + log_s)
    if not np.isfinite(log_norm):
        raise DegenerateStep("tilt normalizer vanished")
    if step.lam >= 1.0:
        out = logp.copy()
    elif step.lam <= 0.0:
        out = logp + log_s - log_norm
    else:
        out = np.logaddexp(np.log(step.lam) + logp,
                           np.log1p(-step.lam) + logp + log_s - log_norm)
    return out - logsumexp(out)


def apply_sharing(p: Dist, step: SharingStep) -> Dist:
    """lam*p + (1-lam)*hadamard(p, s), computed in the log domain."""
    if p.width != step.width:
        raise ShapeMismatch("distribution and step widths differ")
    with np.errstate(divide="ignore"):
        logp = np.log(p.probs)
    out = apply_sharing_log(logp, step)
    probs = np.exp(out)
    return Dist(p.width, probs / probs.sum())


def hidden_unit_from_log(logp: np.ndarray, step: SharingStep
                         ) -> tuple[np.ndarray, float]:
    """Log-domain core of step_to_hidden_unit; logp need not be normalized."""
    if step.lam <= 0.0:
        raise LambdaZero("lambda = 0 needs an infinite bias; use lambda in (0, 1]")
    w = step.log_factors[:, 1] - step.log_factors[:, 0]
    log_s0 = float(step.log_factors[:, 0].sum())
    log_norm = float(logsumexp(logp + step.log_values())
                     - logsumexp(logp))
    if not np.isfinite(log_norm):
        raise DegenerateStep("tilt normalizer vanished")
    with np.errstate(divide="ignore"):
        bias = float(np.log1p(-step.lam) - np.log(step.lam) + log_s0 - log_norm)
    if not np.isfinite(bias) or abs(bias) > BIAS_CAP:
        raise DegenerateStep(f"bias {bias!r} beyond magnitude cap")
    return w, bias


def step_to_hidden_unit(p_current: Dist, step: SharingStep) -> tuple[np.ndarray, float]:
    """Visible weights and bias of the single hidden unit realizing the step.

    Appending the unit to an RBM currently representing ``p_current`` yields
    exactly apply_sharing(p_current, step).
    """
    if p_current.width != step.width:
        raise ShapeMismatch("distribution and step widths differ")
    with np.errstate(divide="ignore"):
        logp = np.log(p_current.probs)
    return hidden_unit_from_log(logp, step)


def mixture_weight_profile(q_masses: np.ndarray) -> np.ndarray:
    """Per-step mixture weights beta = 1 - lambda from target component masses.

    ``q_masses[x, t]`` is the target mass of component t for row x, ordered by
    the enumeration sigma with sigma(0) the start component.  Returns
    beta[x, t-1] for steps t = 1 .. T-1, where the t-th step mixes the row
    toward component t with weight beta = q_t / (1 - sum_{t' > t} q_{t'}).
    """
    q = np.asarray(q_masses, dtype=float)
    if np.any(q < -1e-12):
        raise InfeasibleProfile("negative component mass")
    t_count = q.shape[1]
    betas = np.zeros((q.shape[0], t_count - 1))
    prefix = np.cumsum(q, axis=1)  # prefix[:, t] = sum_{t' <= t} q_{t'}
    for t in range(1, t_count):
        denom = prefix[:, t]
        with np.errstate(divide="ignore", invalid="ignore"):
            b = np.where(denom > 0, q[:, t] / np.where(denom > 0, denom, 1.0), 0.0)
        if np.any(b > 1 + 1e-9):
            raise InfeasibleProfile("mixture weight left [0, 1]")
        betas[:, t - 1] = np.clip(b, 0.0, 1.0)
    return betas


def _clamped_log_t(beta: float) -> float:
    """log(beta / (1 - beta)) clamped so parameters stay finite."""
    if beta <= 0.0:
        return -LOG_T_CAP
    if beta >= 1.0:
        return LOG_T_CAP
    return float(np.clip(np.log(beta) - np.log1p(-beta), -LOG_T_CAP, LOG_T_CAP))


def build_tilted_step(
    logp: np.ndarray,
    k: int,
    n: int,
    input_cylinder: CylinderSet,
    center: int,
    betas: dict[int, float],
    out_log_factors: np.ndarray,
    sharpness: float,
) -> SharingStep:
    """Concentrated step hitting exact mixture weights on a star's rows.

    ``betas`` maps each star member (center plus one flip per free coordinate
    of ``input_cylinder``) to its required weight toward the output component
    encoded by ``out_log_factors`` (shape (n, 2), already sharpened).  The
    within-star odds are solved against the current joint so the realized
    weights are exact; only the component's off-region dust is approximate.
    """
    width = k + n
    y_idx = np.arange(1 << n)

    def row_slice(x: int) -> np.ndarray:
        return logp[x + (y_idx << k)]

    out_log_s = np.zeros(1 << n)
    for j in range(n):
        bit = (y_idx >> j) & 1
        out_log_s = out_log_s + np.where(bit == 1, out_log_factors[j, 1],
                                         out_log_factors[j, 0])

    def excess(x: int) -> float:
        # log T(x) + L(x) - G(x): the required log s_X(x) up to a constant
        rows = row_slice(x)
        big_l = logsumexp(rows)
        big_g = logsumexp(rows + out_log_s)
        return _clamped_log_t(betas[x]) + big_l - big_g

    base = excess(center)
    free = input_cylinder.free_coords()
    odds = {i: excess(center ^ (1 << i)) - base for i in free}

    spec = SharpStepSpec(
        width=width,
        support=CylinderSet(
            width,
            input_cylinder.fixed_mask,
            input_cylinder.fixed_values,
        ),
        anchor=State(center, width),
        free_log_odds=odds,
        sharpness=sharpness,
    )
    lf = spec.to_log_factors()
    lf[k:, :] = out_log_factors

    # Solve lambda at an interior anchor row a (its beta farthest from 0/1,
    # where log T is never clamped): the pull of row a is u = (1-lam) M(a)
    # with log M(a) = log s_X(a) + log<p(.|a), s_Y> - log N, and
    # beta = u/(lam+u) requires lam T(a) = (1-lam) M(a).  Rows whose log T
    # was clamped err only toward the saturated value they asked for.
    probe = SharingStep(width, 0.5, lf)
    log_s = probe.log_values()
    log_norm = logsumexp(logp + log_s)
    anchor = max(betas, key=lambda x: min(betas[x], 1.0 - betas[x]))
    rows_a = row_slice(anchor)
    log_sx_a = log_s[anchor] - out_log_s[0]  # joint state (x=anchor, y=0)
    log_m = float(log_sx_a + logsumexp(rows_a + out_log_s)
                  - logsumexp(rows_a) - log_norm)
    log_t_a = _clamped_log_t(betas[anchor])
    lam = float(1.0 / (1.0 + np.exp(np.clip(log_t_a - log_m, -700, 700))))
    lam = min(max(lam, 1e-300), 1.0 - 1e-16)
    return SharingStep(width, lam, lf)


def make_star_fill_steps(
    p: Dist,
    q_rows: dict[int, Dist],
    star: Star,
    tau: float,
) -> list[SharingStep]:
    """The 2^n - 1 steps taking near-delta_0 star rows to the given targets.

    ``p`` is the current joint over k+n bits (inputs on low bits) whose
    conditionals at the star's inputs are near delta_0; ``q_rows`` maps every
    star member's input index to its target output law.  Output states are
    enumerated ascending with state 0 as the start, and the per-row weights
    follow beta = q(y~|x) / (1 - sum_later q).  The returned steps are exact
    on the star rows up to the sharpness dust eps(tau).
    """
    k = star.width
    members = [s.index for s in star_members(star)]
    if set(q_rows) != set(members):
        raise ShapeMismatch("q_rows must cover exactly the star members")
    n = next(iter(q_rows.values())).width
    if p.width != k + n:
        raise ShapeMismatch("joint width must be k + n")
    if not p.strictly_positive:
        raise DegenerateStep("star fill requires a strictly positive joint")

    q = np.array([q_rows[x].probs for x in members])
    betas = mixture_weight_profile(q)

    center = star.ball.center.index
    logp = np.log(p.probs)
    steps: list[SharingStep] = []
    for t in range(1, 1 << n):
        y_t = t  # ascending enumeration, sigma(0) = 0
        out_lf = np.zeros((n, 2))
        for j in range(n):
            out_lf[j, 1 - ((y_t >> j) & 1)] = -tau
        beta_map = {x: float(betas[i, t - 1]) for i, x in enumerate(members)}
        step = build_tilted_step(logp, k, n, star.cylinder, center,
                                 beta_map, out_lf, tau)
        steps.append(step)
        logp = apply_sharing_log(logp, step)
    return steps


def make_reset_step(c: CylinderSet, y_target: State, tau: float) -> SharingStep:
    """A step driving all rows with inputs in ``c`` toward delta_{y_target}.

    lam is near 0 and s is concentrated with sharpness tau on {y_target} x C;
    rows outside C move by at most eps(tau).
    """
    k = c.width
    n = y_target.width
    lf = np.zeros((k + n, 2))
    for i in range(k):
        if (c.fixed_mask >> i) & 1:
            keep = (c.fixed_values >> i) & 1
            lf[i, 1 - keep] = -tau
    for j in range(n):
        lf[k + j, 1 - y_target.bit(j)] = -tau
    lam = float(1.0 / (1.0 + np.exp(min(tau / 2.0, 700.0))))
    return SharingStep(k + n, lam, lf)
