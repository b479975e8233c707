"""Compile target conditional tables into explicit CRBM parameters.

The pipeline follows the constructive route: start from a bias-only model
whose rows sit near the scheme's start component, then walk a star packing
sequence, realizing every sharing step (star fills and cylinder resets) as
one appended hidden unit.  Everything runs on an exact log-domain joint in
parallel with the parameter build; the final certificate is evaluated from
the parameters themselves, never from the simulated joint.

Tolerance budgeting: each scheduled step gets an equal share
eps / (2 * steps) of the target tolerance; a step whose realized effect
drifts past its allowance is rebuilt with doubled sharpness.  The outer
sharpness knob tau doubles from 16 until the final evaluation meets eps
(or 1024 is hit, which raises BudgetExceeded).  The start distribution uses
output biases of magnitude tau / (2 * component width) so that the sharp
steps' off-region dust stays exponentially below the start-state dust.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .bitspace import CylinderSet, HammingBall, Star, State, star_members
from .crbm import CrbmParams, append_hidden_unit, eval_conditional
from .distributions import ConditionalTable, kl_conditional, tv_row_distance
from .errors import (
    BudgetExceeded,
    InfeasibleDepth,
    NotBlockConstant,
    SupportsDiffer,
    SupportTooLarge,
)
from .packing import PackingSequence, best_depth, build_packing, s_value, universal_budget
from .sharing import SharingStep, apply_sharing_log, build_tilted_step, \
    hidden_unit_from_log, mixture_weight_profile

TAU_START = 16.0
TAU_MAX = 1024.0
STEP_RETRIES = 12


@dataclass(frozen=True)
class CompileReport:
    mode: str
    hidden_units_used: int
    resets_used: int
    star_steps_used: int
    achieved_tv: float
    tau_final: float
    budget_bound: int
    within_budget: bool
    clamp_error: float
    r: int | None
    epsilon: float

    def to_json_obj(self) -> dict:
        return {
            "mode": self.mode,
            "hidden_units_used": self.hidden_units_used,
            "resets_used": self.resets_used,
            "star_steps_used": self.star_steps_used,
            "achieved_tv": self.achieved_tv,
            "tau_final": self.tau_final,
            "budget_bound": self.budget_bound,
            "within_budget": self.within_budget,
            "clamp_error": self.clamp_error,
            "r": self.r,
            "epsilon": self.epsilon,
        }


def clamp_table(table: ConditionalTable, eps: float) -> tuple[ConditionalTable, float]:
    """Floor entries at eps / 2^(n+2) and renormalize rows.

    Returns the clamped table and the worst-row TV clamping error.
    """
    floor = eps / (1 << (table.n + 2))
    rows = np.maximum(table.rows, floor)
    rows = rows / rows.sum(axis=1, keepdims=True)
    clamped = ConditionalTable(table.k, table.n, rows)
    return clamped, tv_row_distance(table, clamped)


def _sharp_out_factors(n: int, mask: int, values: int, sharp: float) -> np.ndarray:
    lf = np.zeros((n, 2))
    for j in range(n):
        if (mask >> j) & 1:
            lf[j, 1 - ((values >> j) & 1)] = -sharp
    return lf


class _ComponentScheme:
    """Output components mixed by the fill steps.

    A component is a sharp cylinder over the output bits; component 0 is the
    start component.  Universal targets use all 2^n point components, common
    supports the states of T, partition targets the 2^l blocks.
    """

    def __init__(self, n: int, masks: list[int], values: list[int]):
        self.n = n
        self.masks = masks
        self.values = values
        y = np.arange(1 << n)
        self.membership = [(y & masks[t]) == values[t] for t in range(len(masks))]
        self.dists = []
        for member in self.membership:
            v = member.astype(float)
            self.dists.append(v / v.sum())

    @property
    def count(self) -> int:
        return len(self.masks)

    @property
    def sharp_width(self) -> int:
        return max(bin(m).count("1") for m in self.masks)

    def masses(self, rows: np.ndarray) -> np.ndarray:
        return np.stack([rows[:, mem].sum(axis=1) for mem in self.membership],
                        axis=1)

    def start_bias(self, tau_b: float) -> np.ndarray:
        b = np.zeros(self.n)
        mask, vals = self.masks[0], self.values[0]
        for j in range(self.n):
            if (mask >> j) & 1:
                b[j] = tau_b if (vals >> j) & 1 else -tau_b
        return b

    @staticmethod
    def universal(n: int) -> "_ComponentScheme":
        full = (1 << n) - 1
        return _ComponentScheme(n, [full] * (1 << n), list(range(1 << n)))

    @staticmethod
    def common_support(n: int, support: list[int]) -> "_ComponentScheme":
        full = (1 << n) - 1
        return _ComponentScheme(n, [full] * len(support), list(support))

    @staticmethod
    def partition(n: int, l: int) -> "_ComponentScheme":
        mask = (1 << l) - 1
        return _ComponentScheme(n, [mask] * (1 << l), list(range(1 << l)))

    @staticmethod
    def start_at(n: int, y0: int) -> "_ComponentScheme":
        full = (1 << n) - 1
        order = [y0] + [y for y in range(1 << n) if y != y0]
        return _ComponentScheme(n, [full] * (1 << n), order)


class _Pipeline:
    """Sequential sharing-step executor over an exact log-domain joint."""

    def __init__(self, k: int, n: int, scheme: _ComponentScheme, tau: float,
                 tol_step: float):
        self.k, self.n = k, n
        self.scheme = scheme
        self.tau = tau
        self.tol_step = tol_step
        tau_b = tau / (2.0 * max(scheme.sharp_width, 1))
        b0 = scheme.start_bias(tau_b)
        self.params = CrbmParams.bias_only(k, n, b0)
        y_bits = (np.arange(1 << n)[:, None] >> np.arange(n)[None, :]) & 1
        logits = (y_bits * b0[None, :]).sum(axis=1)
        # joint index v = x + 2^k*y: build as a (2^n, 2^k) matrix, flatten
        logp = np.tile(logits[:, None], (1, 1 << k)).reshape(-1)
        self.logp = logp - logsumexp(logp)
        self.ideal = np.tile(self.scheme.dists[0], (1 << k, 1))
        self.start_tv = float(np.abs(self.rows() - self.ideal).sum(axis=1).max())
        self.allowance = self.start_tv
        self.fill_steps = 0
        self.resets = 0

    def _rows_of(self, logp: np.ndarray) -> np.ndarray:
        cond = logp.reshape(1 << self.n, 1 << self.k).T  # (2^k, 2^n)
        cond = cond - cond.max(axis=1, keepdims=True)
        rows = np.exp(cond)
        return rows / rows.sum(axis=1, keepdims=True)

    def rows(self) -> np.ndarray:
        return self._rows_of(self.logp)

    def _apply(self, step: SharingStep) -> None:
        w, bias = hidden_unit_from_log(self.logp, step)
        self.params = append_hidden_unit(self.params, w[self.k:], w[: self.k], bias)
        self.logp = apply_sharing_log(self.logp, step)

    # -- resets ----------------------------------------------------------

    def reset_if_needed(self, cyl: CylinderSet) -> bool:
        """Drive a cylinder of inputs back to the start component iff one of
        its rows has drifted from it by more than the phase tolerance."""
        xs = [x for x in range(1 << self.k) if cyl.contains_index(x)]
        rows = self.rows()
        start = self.scheme.dists[0]
        drift = max(float(np.abs(rows[x] - start).sum()) for x in xs)
        if drift <= self.start_tv + 2.0 * self.tol_step:
            return False
        sharp = self.tau
        for _ in range(STEP_RETRIES):
            step = self._reset_step(cyl, sharp)
            trial = apply_sharing_log(self.logp, step)
            if self._reset_ok(trial, xs):
                self._apply(step)
                for x in xs:
                    self.ideal[x] = start
                self.resets += 1
                self.allowance += self.tol_step
                return True
            sharp *= 2.0
        raise BudgetExceeded("reset sharpness schedule exhausted")

    def _reset_step(self, cyl: CylinderSet, sharp: float) -> SharingStep:
        k, n = self.k, self.n
        lf = np.zeros((k + n, 2))
        for i in range(k):
            if (cyl.fixed_mask >> i) & 1:
                keep = (cyl.fixed_values >> i) & 1
                lf[i, 1 - keep] = -sharp
        # outputs: concentrate on the start component at start-grade sharpness
        lf[k:, :] = _sharp_out_factors(
            n, self.scheme.masks[0], self.scheme.values[0],
            sharp / (2.0 * max(self.scheme.sharp_width, 1)))
        lam = float(1.0 / (1.0 + np.exp(min(sharp / 2.0, 700.0))))
        return SharingStep(k + n, lam, lf)

    def _reset_ok(self, trial_logp: np.ndarray, xs: list[int]) -> bool:
        rows = self._rows_of(trial_logp)
        start = self.scheme.dists[0]
        inside = max(float(np.abs(rows[x] - start).sum()) for x in xs)
        before = self.rows()
        outside = set(range(1 << self.k)) - set(xs)
        moved = max((float(np.abs(rows[x] - before[x]).sum()) for x in outside),
                    default=0.0)
        return inside <= self.start_tv + self.tol_step and moved <= self.tol_step

    # -- fills -----------------------------------------------------------

    def fill_star(self, star: Star, target_masses: np.ndarray,
                  members: list[int]) -> None:
        """Mix the star's rows through components 1..M-1 toward the targets."""
        betas = mixture_weight_profile(target_masses)
        for t in range(1, self.scheme.count):
            beta_map = {x: float(betas[i, t - 1]) for i, x in enumerate(members)}
            self.fill_component(star, beta_map, members, self.scheme.dists[t],
                                self.scheme.masks[t], self.scheme.values[t])

    def fill_component(self, star: Star, beta_map: dict[int, float],
                       members: list[int], comp_dist: np.ndarray,
                       mask: int, values: int) -> None:
        target = {
            x: (1.0 - beta_map[x]) * self.ideal[x] + beta_map[x] * comp_dist
            for x in members
        }
        sharp = self.tau
        for _ in range(STEP_RETRIES):
            out_lf = _sharp_out_factors(self.n, mask, values, sharp)
            step = build_tilted_step(
                self.logp, self.k, self.n, star.cylinder,
                star.ball.center.index, beta_map, out_lf, sharp)
            trial = apply_sharing_log(self.logp, step)
            if self._fill_ok(trial, star, target):
                self._apply(step)
                for x in members:
                    self.ideal[x] = target[x]
                self.fill_steps += 1
                self.allowance += self.tol_step
                return
            sharp *= 2.0
        raise BudgetExceeded("fill sharpness schedule exhausted")

    def _fill_ok(self, trial_logp: np.ndarray, star: Star,
                 target: dict[int, np.ndarray]) -> bool:
        rows = self._rows_of(trial_logp)
        drift = max(float(np.abs(rows[x] - t).sum()) for x, t in target.items())
        if drift > self.allowance + self.tol_step:
            return False
        before = self.rows()
        outside = [x for x in range(1 << self.k)
                   if not star.cylinder.contains_index(x)]
        moved = max((float(np.abs(rows[x] - before[x]).sum()) for x in outside),
                    default=0.0)
        return moved <= self.tol_step


def _tau_schedule():
    tau = TAU_START
    while tau <= TAU_MAX:
        yield tau
        tau *= 2.0


def _run_packed(k: int, n: int, scheme: _ComponentScheme,
                seq: PackingSequence, target: ConditionalTable,
                eps: float, tau: float) -> tuple[CrbmParams, int, int]:
    masses = scheme.masses(target.rows)
    total_steps = len(seq.stars) * (scheme.count - 1) + len(seq.resets)
    tol_step = eps / (2.0 * max(total_steps, 1))
    pipe = _Pipeline(k, n, scheme, tau, tol_step)

    resets_at: dict[int, list[CylinderSet]] = {}
    for pos, cyl in seq.resets:
        resets_at.setdefault(pos, []).append(cyl)

    for i, star in enumerate(seq.stars):
        for cyl in resets_at.get(i, ()):
            pipe.reset_if_needed(cyl)
        members = [s.index for s in star_members(star)]
        pipe.fill_star(star, masses[members], members)
    return pipe.params, pipe.fill_steps, pipe.resets


def _compile_packed(target: ConditionalTable, scheme: _ComponentScheme,
                    r: int | None, eps: float, mode: str,
                    clamp_error: float = 0.0) -> tuple[CrbmParams, CompileReport]:
    k = target.k
    if r is None:
        r = best_depth(k, scheme.count)
    if s_value(r) > k:
        raise InfeasibleDepth(f"k = {k} < S({r}) = {s_value(r)}")
    seq = build_packing(k, r)
    budget = universal_budget(k, r, scheme.count)
    last_error: Exception | None = None
    for tau in _tau_schedule():
        try:
            params, fills, resets = _run_packed(k, target.n, scheme, seq,
                                                target, eps, tau)
        except BudgetExceeded as exc:
            last_error = exc
            continue
        achieved = tv_row_distance(eval_conditional(params), target)
        if achieved <= eps:
            report = CompileReport(
                mode=mode, hidden_units_used=params.m, resets_used=resets,
                star_steps_used=fills, achieved_tv=achieved, tau_final=tau,
                budget_bound=budget, within_budget=params.m <= budget,
                clamp_error=clamp_error, r=r, epsilon=eps)
            return params, report
    raise BudgetExceeded(
        f"tau schedule exhausted without reaching eps = {eps}"
    ) from last_error


def compile_universal(target: ConditionalTable, r: int | None = None,
                      eps: float = 1e-2) -> tuple[CrbmParams, CompileReport]:
    """Approximate an arbitrary conditional table within per-row TV eps.

    General targets are clamped to strict positivity first (floor
    eps / 2^(n+2), renormalized); achieved_tv is measured against the
    clamped target and the clamping error reported separately.
    """
    clamped, clamp_err = clamp_table(target, eps)
    scheme = _ComponentScheme.universal(target.n)
    return _compile_packed(clamped, scheme, r, eps, "universal", clamp_err)


def compile_common_support(target: ConditionalTable, r: int | None = None,
                           eps: float = 1e-2) -> tuple[CrbmParams, CompileReport]:
    """Targets whose rows all share one support T; |T| - 1 steps per star."""
    supports = [frozenset(np.flatnonzero(target.rows[x]).tolist())
                for x in range(1 << target.k)]
    if len(set(supports)) != 1:
        raise SupportsDiffer("rows do not share a common support")
    support = sorted(supports[0])
    scheme = _ComponentScheme.common_support(target.n, support)
    return _compile_packed(target, scheme, r, eps, "common")


def compile_partition(target: ConditionalTable, l: int, r: int | None = None,
                      eps: float = 1e-2) -> tuple[CrbmParams, CompileReport]:
    """Targets block-constant on the cylinder partition of the first l bits."""
    n = target.n
    if not 0 <= l <= n:
        raise ValueError(f"l must be in [0, {n}]")
    mask = (1 << l) - 1
    y = np.arange(1 << n)
    for z in range(1 << l):
        block = target.rows[:, (y & mask) == z]
        if np.abs(block - block.mean(axis=1, keepdims=True)).max() > 1e-9:
            raise NotBlockConstant(f"rows are not constant on block {z}")
    if l == 0:
        params = CrbmParams.bias_only(target.k, n, np.zeros(n))
        achieved = tv_row_distance(eval_conditional(params), target)
        report = CompileReport(
            mode="partition", hidden_units_used=0, resets_used=0,
            star_steps_used=0, achieved_tv=achieved, tau_final=0.0,
            budget_bound=0, within_budget=True, clamp_error=0.0,
            r=r, epsilon=eps)
        return params, report
    scheme = _ComponentScheme.partition(n, l)
    return _compile_packed(target, scheme, r, eps, "partition")


def compile_support_points(target: ConditionalTable, d: int | None = None,
                           eps: float = 1e-2) -> tuple[CrbmParams, CompileReport]:
    """Sparse targets built as a sequence of point-mass sharing steps.

    The joint u_X * target has at most 2^k + d support points; after starting
    all rows at the output state y0 shared by the most rows, each remaining
    support point costs one concentrated step, so at most 2^k + d - 1 hidden
    units.
    """
    k = target.k
    total_support = target.support_size()
    if d is None:
        d = max(total_support - (1 << k), 0)
    if total_support > (1 << k) + d:
        raise SupportTooLarge(
            f"support {total_support} exceeds 2^k + d = {(1 << k) + d}")
    budget = (1 << k) + d - 1

    counts = (target.rows > 0).sum(axis=0)
    y0 = int(np.argmax(counts))  # ties resolve to the smallest index
    row_supports = {x: [int(y) for y in np.flatnonzero(target.rows[x])]
                    for x in range(1 << k)}

    last_error: Exception | None = None
    for tau in _tau_schedule():
        try:
            params, fills = _run_support(target, y0, row_supports, eps, tau)
        except BudgetExceeded as exc:
            last_error = exc
            continue
        achieved = tv_row_distance(eval_conditional(params), target)
        if achieved <= eps:
            report = CompileReport(
                mode="support", hidden_units_used=params.m, resets_used=0,
                star_steps_used=fills, achieved_tv=achieved, tau_final=tau,
                budget_bound=budget, within_budget=params.m <= budget,
                clamp_error=0.0, r=None, epsilon=eps)
            return params, report
    raise BudgetExceeded(
        f"tau schedule exhausted without reaching eps = {eps}"
    ) from last_error


def _run_support(target: ConditionalTable, y0: int,
                 row_supports: dict[int, list[int]], eps: float,
                 tau: float) -> tuple[CrbmParams, int]:
    k, n = target.k, target.n
    total_steps = sum(len([y for y in ys if y != y0])
                      for ys in row_supports.values())
    tol_step = eps / (2.0 * max(total_steps, 1))
    pipe = _Pipeline(k, n, _ComponentScheme.start_at(n, y0), tau, tol_step)
    full_mask = (1 << n) - 1
    for x in range(1 << k):
        enum = [y0] + [y for y in row_supports[x] if y != y0]
        if len(enum) == 1:
            continue
        q = np.array([[target.rows[x, y] for y in enum]])
        betas = mixture_weight_profile(q)[0]
        cyl = CylinderSet(k, (1 << k) - 1, x)
        star = Star(HammingBall(State(x, k)), cyl)
        for t in range(1, len(enum)):
            comp = np.zeros(1 << n)
            comp[enum[t]] = 1.0
            pipe.fill_component(star, {x: float(betas[t - 1])}, [x], comp,
                                full_mask, enum[t])
    return pipe.params, pipe.fill_steps


def divergence_witness(target: ConditionalTable, m_budget: int,
                       eps_compile: float = 1e-4) -> tuple[CrbmParams, float]:
    """Constructive witness for the divergence bound.

    Picks the largest block width l whose partition compiles within m_budget
    (best depth r over the feasible ones), compiles the partition projection
    of the target, and returns the parameters with the achieved divergence in
    bits.  With no feasible l the uniform fallback (zero parameters) is
    returned, whose divergence is at most n.
    """
    from .bounds import feasible_block_width
    from .distributions import PartitionModel, partition_project

    k, n = target.k, target.n
    l = feasible_block_width(k, n, m_budget)
    if l == 0:
        params = CrbmParams.bias_only(k, n, np.zeros(n))
        return params, kl_conditional(target, eval_conditional(params))
    model = PartitionModel.cylinder(n, l)
    projected = np.stack([
        partition_project(target.row(x), model)[0].probs
        for x in range(1 << k)
    ])
    # clamp within blocks (preserves block-constancy), then compile tightly
    floor = 0.016 / (1 << (n + 2))
    rows = np.maximum(projected, floor)
    rows /= rows.sum(axis=1, keepdims=True)
    table = ConditionalTable(k, n, rows)
    feasible = [r for r in range(1, k + 1) if s_value(r) <= k
                and universal_budget(k, r, 1 << l) <= m_budget]
    best_r = min(feasible, key=lambda r: universal_budget(k, r, 1 << l))
    params, _ = compile_partition(table, l, best_r, eps_compile)
    return params, kl_conditional(target, eval_conditional(params))
