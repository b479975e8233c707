"""Acceptance-grade verification suite shared by the CLI and the test suite.

Each criterion is a named callable returning (passed, detail); verify_all
runs them in order and reports a pass/fail matrix keyed by the claim the
criterion exercises.  Tolerances are pinned here, not configurable.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import bounds, packing
from .bitspace import HammingBall, State, Star, CylinderSet, star_members
from .compiler import compile_universal, divergence_witness
from .crbm import CrbmParams, eval_conditional, conditional_jacobian, random_params
from .dimension import certify_dimension, crbm_dimension_estimate
from .distributions import (
    Dist,
    hadamard,
    random_conditional,
    tv_row_distance,
)
from .errors import CrbmKitError
from .ltn import check_deter_fixed_point, embed_ltn_in_crbm, ltn_table, parity_net
from .mrf import (
    MrfModel,
    SimplicialComplex,
    compile_conditional_mrf,
    compile_mrf_to_rbm,
    mobius_coefficients,
    mobius_forward,
    mrf_distribution,
)
from .sharing import SharingStep, apply_sharing, step_to_hidden_unit


@dataclass(frozen=True)
class CriterionResult:
    name: str
    claim: str
    passed: bool
    detail: str
    seconds: float


def _crit_table1(offset: int = 0) -> tuple[bool, str]:
    expected_f = {1: 1, 2: 3, 3: 20, 4: 284, 5: 8408}
    expected_r = {2: 1, 3: 4, 4: 44, 5: 1144}
    for r, f in expected_f.items():
        v = packing.seq_values(r)
        if v.F != f:
            return False, f"F({r}) = {v.F}, expected {f}"
        if r in expected_r and v.R != expected_r[r]:
            return False, f"R({r}) = {v.R}, expected {expected_r[r]}"
    k_large = packing.k_coefficient(10 ** 5)
    if abs(k_large - 0.2263) > 5e-4:
        return False, f"K(1e5) = {k_large}"
    p50 = packing.p_coefficient(50)
    if abs(p50 - 0.0269) > 5e-4:
        return False, f"P(50) = {p50}"
    return True, f"F,R exact for r<=5; K(1e5)={k_large:.6f}; P(50)={p50:.6f}"


def _crit_packing(offset: int = 0) -> tuple[bool, str]:
    checked = 0
    for k in range(1, 11):
        r = 1
        while packing.s_value(r) <= k:
            seq = packing.build_packing(k, r)
            rep = packing.validate_packing(seq)
            v = packing.seq_values(r)
            want = (1 << (k - v.S)) * v.F
            if not rep.ok:
                return False, f"(k={k}, r={r}): {rep.violations[0]}"
            if rep.star_count != want:
                return False, f"(k={k}, r={r}): {rep.star_count} stars != {want}"
            checked += 1
            r += 1
    return True, f"{checked} (k, r) packings valid with exact star counts"


COMPILE_PAIRS = [(1, 1), (2, 1), (2, 2), (3, 1), (3, 2)]


def _crit_universal(offset: int = 0) -> tuple[bool, str]:
    worst = 0.0
    for k, n in COMPILE_PAIRS:
        for trial in range(20):
            target = random_conditional(k, n,
                                        seed=1000 * k + 100 * n + trial + offset)
            params, rep = compile_universal(target, eps=1e-2)
            if rep.achieved_tv > 1e-2:
                return False, f"({k},{n}) trial {trial}: tv = {rep.achieved_tv}"
            if not rep.within_budget:
                return False, (f"({k},{n}) trial {trial}: {rep.hidden_units_used}"
                               f" units > budget {rep.budget_bound}")
            worst = max(worst, rep.achieved_tv)
    return True, f"100 compilations within budget; worst tv = {worst:.2e}"


def _crit_divergence(offset: int = 0) -> tuple[bool, str]:
    worst = 0.0
    for (k, n, m) in [(1, 2, 1), (2, 2, 2)]:
        prop5 = bounds.divergence_upper(k, n, m)
        for trial in range(20):
            target = random_conditional(k, n, seed=7000 + 100 * k + trial + offset)
            params, div = divergence_witness(target, m)
            if div > (n - 1) + 0.05:
                return False, f"({k},{n},m={m}) trial {trial}: D = {div}"
            if div > prop5 + 0.05:
                return False, f"({k},{n},m={m}): D = {div} > bound {prop5}"
            worst = max(worst, div)
    return True, f"worst achieved divergence = {worst:.4f} bits"


DIMENSION_CASES = [(1, 3, 1, 8), (2, 2, 1, 7), (1, 2, 2, 6), (1, 1, 1, 2)]


def _crit_dimension(offset: int = 0) -> tuple[bool, str]:
    for (k, n, m, want) in DIMENSION_CASES:
        rep = certify_dimension(k, n, m)
        if rep.expected_value != want or rep.numeric != want:
            return False, (f"({k},{n},{m}): expected {rep.expected_value}, "
                           f"numeric {rep.numeric}, want {want}")
        if rep.tropical > rep.numeric:
            return False, f"({k},{n},{m}): tropical {rep.tropical} > numeric"
        ranks = {crbm_dimension_estimate(k, n, m, seed=s) for s in range(5)}
        if ranks != {want}:
            return False, f"({k},{n},{m}): seed instability {ranks}"
    return True, "expected = numeric (5-seed stable), tropical <= numeric"


def _crit_mrf(offset: int = 0) -> tuple[bool, str]:
    full3 = SimplicialComplex.full(3)
    worst_joint = worst_cond = 0.0
    for trial in range(20):
        rng = np.random.default_rng(300 + trial + offset)
        model = MrfModel(full3, {a: float(rng.standard_normal())
                                 for a in full3.faces if a})
        params, corr = compile_mrf_to_rbm(model)
        if params.m != 4:
            return False, f"trial {trial}: {params.m} hidden units != 4"
        from .crbm import eval_joint_rbm
        p = mrf_distribution(model)
        tv = float(np.abs(hadamard(p, corr).probs
                          - eval_joint_rbm(params).probs).sum())
        worst_joint = max(worst_joint, tv)
        if tv > 1e-6:
            return False, f"trial {trial}: joint tv = {tv}"
        from .distributions import conditional_of_joint
        cparams = compile_conditional_mrf(model, 1)
        rtv = tv_row_distance(conditional_of_joint(p, 1),
                              eval_conditional(cparams))
        worst_cond = max(worst_cond, rtv)
        if rtv > 1e-6:
            return False, f"trial {trial}: conditional tv = {rtv}"
    return True, (f"20 draws: joint tv <= {worst_joint:.1e}, "
                  f"conditional tv <= {worst_cond:.1e}, m = 4 exactly")


def _crit_ltn(offset: int = 0) -> tuple[bool, str]:
    details = []
    for k in (2, 3, 4):
        net = parity_net(k)
        params, t = embed_ltn_in_crbm(net, eps=1e-3)
        tv = tv_row_distance(eval_conditional(params), ltn_table(net))
        if params.m != k or tv > 1e-3:
            return False, f"k={k}: m={params.m}, tv={tv}"
        outputs = [bin(x).count("1") % 2 for x in range(1 << k)]
        if not check_deter_fixed_point(params, outputs):
            return False, f"k={k}: fixed-point condition fails"
        details.append(f"k={k}: t={t:g}, tv={tv:.1e}")
    return True, "; ".join(details)


def _crit_bounds(offset: int = 0) -> tuple[bool, str]:
    for k in range(1, 7):
        for n in range(1, 7):
            rep = bounds.universal_m_table(k, n)
            if rep.m_min is not None and rep.m_min > rep.rbm_route:
                return False, f"({k},{n}): min {rep.m_min} > RBM {rep.rbm_route}"
    for k in range(1, 5):
        for n in range(1, 5):
            prev = None
            for m in range(65):
                val = bounds.divergence_upper(k, n, m)
                if prev is not None and val > prev + 1e-12:
                    return False, f"({k},{n}): not monotone at m = {m}"
                prev = val
    rng = np.random.default_rng(17)
    for _ in range(5):
        k = int(rng.integers(2, 16))
        n = int(rng.integers(1, 5))
        if not bounds.deterministic_necessity_check(k, n):
            return False, f"necessity arithmetic fails at ({k},{n})"
    return True, "m-table <= RBM route; divergence_upper monotone; necessity ok"


def _crit_oracles(offset: int = 0) -> tuple[bool, str]:
    rng = np.random.default_rng(99 + offset)
    # Hadamard identity and associativity
    for _ in range(100):
        w = int(rng.integers(1, 5))
        p = Dist(w, rng.dirichlet(np.ones(1 << w)))
        q = Dist(w, rng.dirichlet(np.ones(1 << w)))
        s = Dist(w, rng.dirichlet(np.ones(1 << w)))
        if np.abs(hadamard(Dist.uniform(w), p).probs - p.probs).max() > 1e-12:
            return False, "Hadamard identity"
        lhs = hadamard(hadamard(p, q), s).probs
        rhs = hadamard(p, hadamard(q, s)).probs
        if np.abs(lhs - rhs).max() > 1e-12:
            return False, "Hadamard associativity"
    # sharing step round trip
    for _ in range(100):
        w = int(rng.integers(1, 4))
        p = Dist(w, rng.dirichlet(np.ones(1 << w)))
        lam = float(rng.uniform(0.05, 1.0 - 1e-9))
        step = SharingStep(w, lam, rng.standard_normal((w, 2)))
        wv, bias = step_to_hidden_unit(p, step)
        direct = apply_sharing(p, step).probs
        tilt = np.array([
            p.probs[v] * (1.0 + np.exp(sum(wv[i] * ((v >> i) & 1)
                                           for i in range(w)) + bias))
            for v in range(1 << w)])
        tilt /= tilt.sum()
        if np.abs(direct - tilt).sum() > 1e-10:
            return False, "sharing round trip"
    # jacobian vs finite differences
    for _ in range(100):
        k = int(rng.integers(1, 3))
        n = int(rng.integers(1, 3))
        m = int(rng.integers(0, 3))
        params = random_params(k, n, m, rng)
        jac = conditional_jacobian(params)
        theta = np.concatenate([params.W.ravel(), params.V.ravel(),
                                params.b, params.c])
        h = 1e-5
        cols = rng.choice(theta.size, size=min(3, theta.size), replace=False)
        for j in cols:
            tp, tm = theta.copy(), theta.copy()
            tp[j] += h
            tm[j] -= h
            fd = (_table_of(tp, k, n, m) - _table_of(tm, k, n, m)) / (2 * h)
            if np.abs(jac[:, j] - fd).max() > 1e-6:
                return False, "jacobian finite differences"
    # Moebius forward/backward
    for _ in range(100):
        nn = int(rng.integers(1, 7))
        tab = rng.standard_normal(1 << nn)
        back = mobius_forward(mobius_coefficients(tab, nn), nn)
        if np.abs(back - tab).max() > 1e-12:
            return False, "Moebius round trip"
    # star affine independence
    from .bitspace import affine_rank
    for _ in range(100):
        w = int(rng.integers(1, 7))
        center = int(rng.integers(0, 1 << w))
        free = [i for i in range(w) if rng.random() < 0.5]
        fixed = {i: (center >> i) & 1 for i in range(w) if i not in free}
        star = Star(HammingBall(State(center, w)),
                    CylinderSet.from_fixed(w, fixed))
        members = star_members(star)
        if affine_rank(members) != len(members):
            return False, "star affine independence"
    return True, "500 randomized oracle checks passed"


def _table_of(theta: np.ndarray, k: int, n: int, m: int) -> np.ndarray:
    W = theta[: m * n].reshape(m, n)
    V = theta[m * n : m * (n + k)].reshape(m, k)
    b = theta[m * (n + k) : m * (n + k) + n]
    c = theta[m * (n + k) + n :]
    return eval_conditional(CrbmParams(k, n, m, W, V, b, c)).rows.reshape(-1)


CRITERIA: list[tuple[str, str, Callable[..., tuple[bool, str]]]] = [
    ("table1", "counting sequences: F, R exact; K, P limits", _crit_table1),
    ("packing", "star packings valid for k <= 10", _crit_packing),
    ("universal", "constructive universal approximation within budget",
     _crit_universal),
    ("divergence", "divergence witness meets the n-l bound", _crit_divergence),
    ("dimension", "expected dimension certified numerically and tropically",
     _crit_dimension),
    ("mrf", "random-field compilation exact to 1e-6", _crit_mrf),
    ("ltn", "parity nets embed with m = k hidden units", _crit_ltn),
    ("bounds", "bound-table consistency properties", _crit_bounds),
    ("oracles", "randomized oracle invariant suite", _crit_oracles),
]


def verify_all(seed_offset: int = 0) -> list[CriterionResult]:
    """Run every criterion; seed_offset shifts the randomized draws."""
    results = []
    for name, claim, fn in CRITERIA:
        t0 = time.time()
        try:
            passed, detail = fn(seed_offset)
        except CrbmKitError as exc:
            passed, detail = False, f"{type(exc).__name__}: {exc}"
        results.append(CriterionResult(name, claim, passed, detail,
                                       time.time() - t0))
    return results
