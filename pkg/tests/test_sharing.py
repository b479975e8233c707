import numpy as np
import pytest

from crbmkit.bitspace import CylinderSet, HammingBall, Star, State
from crbmkit.crbm import CrbmParams, append_hidden_unit, eval_joint_rbm
from crbmkit.distributions import Dist, conditional_of_joint, random_dist
from crbmkit.errors import DegenerateStep, LambdaZero, ShapeMismatch
from crbmkit.sharing import (
    SharingStep,
    SharpStepSpec,
    apply_sharing,
    make_reset_step,
    make_star_fill_steps,
    mixture_weight_profile,
    step_to_hidden_unit,
)


def linear_apply(p: Dist, step: SharingStep) -> np.ndarray:
    """Independent oracle: the defining formula in plain linear arithmetic."""
    s = np.exp(step.log_values())
    tilt = p.probs * s
    tilt /= tilt.sum()
    return step.lam * p.probs + (1 - step.lam) * tilt


def start_joint(k: int, n: int, tau: float) -> Dist:
    """Joint with uniform inputs and rows proportional to exp(-tau |y|)."""
    logp = np.array([-tau * bin(v >> k).count("1") for v in range(1 << (k + n))],
                    dtype=float)
    p = np.exp(logp)
    return Dist(k + n, p / p.sum())


def test_apply_sharing_identity_cases():
    rng = np.random.default_rng(0)
    p = random_dist(2, rng)
    lam1 = SharingStep(2, 1.0, rng.standard_normal((2, 2)))
    assert np.abs(apply_sharing(p, lam1).probs - p.probs).max() < 1e-15
    uniform_tilt = SharingStep(2, 0.0, np.zeros((2, 2)))
    assert np.abs(apply_sharing(p, uniform_tilt).probs - p.probs).max() < 1e-12


def test_apply_sharing_matches_linear_oracle():
    # uniform start on 2 bits, lambda 1/2, odds (1, 3) per coordinate
    p = Dist.uniform(2)
    lf = np.zeros((2, 2))
    lf[:, 1] = np.log(3.0)
    step = SharingStep(2, 0.5, lf)
    assert np.abs(apply_sharing(p, step).probs - linear_apply(p, step)).max() < 1e-14
    rng = np.random.default_rng(1)
    for _ in range(50):
        q = random_dist(3, rng)
        st = SharingStep(3, float(rng.uniform(0, 1)), rng.standard_normal((3, 2)))
        assert np.abs(apply_sharing(q, st).probs - linear_apply(q, st)).max() < 1e-12


def test_apply_sharing_preserves_positivity_and_normalization():
    rng = np.random.default_rng(5)
    p = random_dist(3, rng)
    for _ in range(20):
        st = SharingStep(3, float(rng.uniform(0, 1)), rng.standard_normal((3, 2)))
        p = apply_sharing(p, st)
        assert p.strictly_positive
        assert abs(p.probs.sum() - 1.0) < 1e-12


def test_step_to_hidden_unit_round_trip():
    rng = np.random.default_rng(2)
    for _ in range(100):
        w = int(rng.integers(1, 4))
        p = random_dist(w, rng)
        lam = float(rng.uniform(0.05, 1.0 - 1e-12))
        step = SharingStep(w, lam, rng.standard_normal((w, 2)))
        weights, bias = step_to_hidden_unit(p, step)
        direct = apply_sharing(p, step)
        # realize on an RBM currently representing p via energies log p
        tilt = np.array([
            p.probs[v] * (1 + np.exp(sum(weights[i] * ((v >> i) & 1)
                                         for i in range(w)) + bias))
            for v in range(1 << w)])
        tilt /= tilt.sum()
        assert np.abs(direct.probs - tilt).sum() <= 1e-10


def test_step_to_hidden_unit_on_actual_rbm():
    # appending the realized unit to a bias-only RBM reproduces apply_sharing
    rng = np.random.default_rng(3)
    b = rng.standard_normal(3)
    params = CrbmParams.bias_only(0, 3, b)
    p = eval_joint_rbm(params)
    step = SharingStep(3, 0.4, rng.standard_normal((3, 2)))
    weights, bias = step_to_hidden_unit(p, step)
    grown = append_hidden_unit(params, weights, np.zeros(0), bias)
    assert np.abs(eval_joint_rbm(grown).probs - apply_sharing(p, step).probs).sum() < 1e-12


def test_step_to_hidden_unit_uniform_tilt_is_zero_unit():
    # a flat tilt at lambda 1/2 multiplies by the constant 2: w = 0, bias = 0
    rng = np.random.default_rng(14)
    p = random_dist(3, rng)
    step = SharingStep(3, 0.5, np.zeros((3, 2)))
    weights, bias = step_to_hidden_unit(p, step)
    assert np.abs(weights).max() == 0.0
    assert bias == pytest.approx(0.0, abs=1e-12)


def test_step_to_hidden_unit_degenerate_lambdas():
    rng = np.random.default_rng(4)
    p = random_dist(2, rng)
    step = SharingStep(2, 0.0, rng.standard_normal((2, 2)))
    with pytest.raises(LambdaZero):
        step_to_hidden_unit(p, step)
    step = SharingStep(2, 1.0, rng.standard_normal((2, 2)))
    with pytest.raises(DegenerateStep):
        step_to_hidden_unit(p, step)


def test_mixture_weight_profile_formula():
    # n = 1, single row: one step with beta = q(1|x)
    q = np.array([[0.3, 0.7]])
    assert mixture_weight_profile(q)[0, 0] == pytest.approx(0.7)
    # general telescoping: final masses reproduce the target
    rng = np.random.default_rng(6)
    masses = rng.dirichlet(np.ones(8), size=3)
    betas = mixture_weight_profile(masses)
    for row in range(3):
        dist = np.zeros(8)
        dist[0] = 1.0
        for t in range(1, 8):
            comp = np.zeros(8)
            comp[t] = 1.0
            b = betas[row, t - 1]
            dist = (1 - b) * dist + b * comp
        assert np.abs(dist - masses[row]).max() < 1e-12


def test_make_star_fill_steps_reaches_targets():
    # full 2-dimensional star on k=2 inputs, n=1 outputs, tau=30
    star = Star(HammingBall(State(0, 2)), CylinderSet.full(2))
    p = start_joint(2, 1, tau=15.0)
    rng = np.random.default_rng(7)
    targets = {x: Dist(1, rng.dirichlet(np.ones(2))) for x in (0, 1, 2)}
    steps = make_star_fill_steps(p, targets, star, tau=30.0)
    assert len(steps) == 1
    cur = p
    for step in steps:
        cur = apply_sharing(cur, step)
    table = conditional_of_joint(cur, 2)
    for x, tgt in targets.items():
        assert np.abs(table.rows[x] - tgt.probs).sum() <= 1e-3


def test_make_star_fill_steps_n2_and_noop_targets():
    star = Star(HammingBall(State(0, 1)), CylinderSet.full(1))
    p = start_joint(1, 2, tau=8.0)
    # targets equal to the start state: all steps are no-ops
    deltas = {x: Dist.point_mass(2, 0) for x in (0, 1)}
    steps = make_star_fill_steps(p, deltas, star, tau=32.0)
    cur = p
    for step in steps:
        cur = apply_sharing(cur, step)
    table = conditional_of_joint(cur, 1)
    for x in (0, 1):
        assert abs(table.rows[x, 0] - 1.0) < 1e-3
    # random strictly positive targets
    rng = np.random.default_rng(8)
    targets = {x: Dist(2, rng.dirichlet(np.ones(4))) for x in (0, 1)}
    steps = make_star_fill_steps(start_joint(1, 2, 8.0), targets, star, tau=32.0)
    assert len(steps) == 3
    cur = start_joint(1, 2, 8.0)
    for step in steps:
        cur = apply_sharing(cur, step)
    table = conditional_of_joint(cur, 1)
    for x, tgt in targets.items():
        assert np.abs(table.rows[x] - tgt.probs).sum() <= 1e-3


def test_star_fill_error_shrinks_with_sharpness():
    star = Star(HammingBall(State(0, 2)), CylinderSet.full(2))
    rng = np.random.default_rng(9)
    targets = {x: Dist(1, rng.dirichlet(np.ones(2))) for x in (0, 1, 2)}
    errors = []
    for tau in (10.0, 20.0, 40.0, 80.0):
        p = start_joint(2, 1, tau / 2.0)
        cur = p
        for step in make_star_fill_steps(p, targets, star, tau):
            cur = apply_sharing(cur, step)
        table = conditional_of_joint(cur, 2)
        errors.append(max(np.abs(table.rows[x] - targets[x].probs).sum()
                          for x in targets))
    assert all(b <= a + 1e-12 for a, b in zip(errors, errors[1:]))


def test_make_reset_step_examples():
    rng = np.random.default_rng(10)
    # full input cube: all rows driven to the target point mass
    p = Dist(3, rng.dirichlet(np.ones(8)))
    step = make_reset_step(CylinderSet.full(2), State(0, 1), tau=30.0)
    table = conditional_of_joint(apply_sharing(p, step), 2)
    assert np.abs(table.rows[:, 0] - 1.0).max() <= 1e-3

    # tau -> 0 keeps everything in place
    tiny = make_reset_step(CylinderSet.full(2), State(0, 1), tau=1e-9)
    after = apply_sharing(p, tiny)
    assert np.abs(after.probs - p.probs).max() < 1e-6

    # half-cube reset moves only the constrained rows
    p = Dist(3, rng.dirichlet(np.ones(8)))
    before = conditional_of_joint(p, 2)
    cyl = CylinderSet.from_fixed(2, {0: 0})
    step = make_reset_step(cyl, State(0, 1), tau=30.0)
    after = conditional_of_joint(apply_sharing(p, step), 2)
    for x in range(4):
        if cyl.contains_index(x):
            assert np.abs(after.rows[x] - [1.0, 0.0]).sum() <= 1e-3
        else:
            assert np.abs(after.rows[x] - before.rows[x]).sum() <= 1e-3


def test_sharp_spec_profile_proportionality():
    # the product tilt restricted to a star can match any positive profile
    rng = np.random.default_rng(11)
    star = Star(HammingBall(State(0b0100, 4)), CylinderSet.from_fixed(4, {2: 1}))
    members = [0b0100, 0b0101, 0b0110, 0b1100]
    profile = rng.uniform(0.1, 5.0, size=len(members))
    odds = {i: float(np.log(profile[j + 1] / profile[0]))
            for j, i in enumerate([0, 1, 3])}
    spec = SharpStepSpec(4, CylinderSet.from_fixed(4, {2: 1}),
                         State(0b0100, 4), odds, sharpness=40.0)
    log_s = SharingStep(4, 0.5, spec.to_log_factors()).log_values()
    got = np.exp(log_s[members] - log_s[members[0]])
    want = profile / profile[0]
    assert np.abs(got - want).max() < 1e-9


def test_make_star_fill_rejects_bad_rows():
    star = Star(HammingBall(State(0, 1)), CylinderSet.full(1))
    p = start_joint(1, 1, 8.0)
    with pytest.raises(ShapeMismatch):
        make_star_fill_steps(p, {0: Dist.uniform(1)}, star, 16.0)


def test_mixture_profile_rejects_negative_mass():
    from crbmkit.errors import InfeasibleProfile
    with pytest.raises(InfeasibleProfile):
        mixture_weight_profile(np.array([[-0.1, 1.1]]))
