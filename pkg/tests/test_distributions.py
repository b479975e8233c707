import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from crbmkit.distributions import (
    ConditionalTable,
    Dist,
    PartitionModel,
    SupportClass,
    conditional_of_joint,
    hadamard,
    in_support_class,
    joint_from,
    kl_conditional,
    kl_dist,
    partition_project,
    random_conditional,
    random_dist,
    tv_row_distance,
)
from crbmkit.errors import DisjointSupports, ZeroInputMass

HALF_LOG2_3 = 0.5 * math.log2(3.0)  # divergence of (3/4,1/4) from (1/4,3/4)


def test_hadamard_examples():
    q = Dist.from_probs([0.1, 0.2, 0.3, 0.4])
    assert np.allclose(hadamard(Dist.uniform(2), q).probs, q.probs)
    half = Dist.from_probs([0.5, 0.5])
    assert np.allclose(hadamard(half, half).probs, [0.5, 0.5])
    got = hadamard(Dist.from_probs([0.8, 0.2]), half)
    assert np.allclose(got.probs, [0.8, 0.2])


def test_hadamard_disjoint_supports():
    with pytest.raises(DisjointSupports):
        hadamard(Dist.point_mass(1, 0), Dist.point_mass(1, 1))


def test_hadamard_uniform_identity_all_widths():
    rng = np.random.default_rng(2)
    for width in range(1, 11):
        q = random_dist(width, rng)
        got = hadamard(Dist.uniform(width), q)
        assert np.abs(got.probs - q.probs).max() < 1e-12


def test_kl_examples():
    p = Dist.from_probs([0.75, 0.25])
    assert kl_dist(p, p) == 0.0
    assert kl_dist(Dist.point_mass(1, 0), Dist.uniform(1)) == pytest.approx(1.0)
    q = Dist.from_probs([0.25, 0.75])
    assert kl_dist(p, q) == pytest.approx(HALF_LOG2_3, abs=1e-12)
    # support violation returns the +inf marker
    assert kl_dist(Dist.from_probs([0.5, 0.5]), Dist.point_mass(1, 0)) == math.inf


def test_kl_conditional_examples():
    rows = np.array([[1.0, 0.0], [0.5, 0.5]])
    p = ConditionalTable(1, 1, rows)
    assert kl_conditional(p, p) == 0.0
    q = ConditionalTable(1, 1, np.array([[0.5, 0.5], [0.5, 0.5]]))
    # row divergences are 1 and 0, so the uniform-input average is 0.5
    assert kl_conditional(p, q) == pytest.approx(0.5)


def test_kl_conditional_matches_row_sum_oracle():
    rng = np.random.default_rng(3)
    p = random_conditional(1, 1, 5)
    q = random_conditional(1, 1, 6)
    brute = sum(
        sum(p.rows[x, y] * math.log2(p.rows[x, y] / q.rows[x, y])
            for y in range(2) if p.rows[x, y] > 0)
        for x in range(2)) / 2
    assert kl_conditional(p, q) == pytest.approx(brute, abs=1e-12)


def test_conditional_of_joint_examples():
    qx = Dist.from_probs([0.3, 0.7])
    py = Dist.from_probs([0.2, 0.8])
    joint = Dist(2, np.array([qx[0] * py[0], qx[1] * py[0],
                              qx[0] * py[1], qx[1] * py[1]]))
    table = conditional_of_joint(joint, 1)
    assert np.allclose(table.rows, [py.probs, py.probs])

    table = conditional_of_joint(Dist.uniform(3), 1)
    assert np.allclose(table.rows, 0.25)

    p = Dist.from_probs([0.1, 0.2, 0.3, 0.4])
    table = conditional_of_joint(p, 1)
    assert np.allclose(table.rows[0], [0.25, 0.75])
    assert np.allclose(table.rows[1], [1 / 3, 2 / 3])


def test_conditional_of_joint_zero_mass():
    with pytest.raises(ZeroInputMass):
        conditional_of_joint(Dist.from_probs([0.0, 0.5, 0.0, 0.5]), 1)


def test_conditionals_ignore_input_marginal():
    rng = np.random.default_rng(0)
    for _ in range(20):
        k, n = int(rng.integers(1, 3)), int(rng.integers(1, 3))
        marginal = random_dist(k, rng)
        if not marginal.strictly_positive:
            continue
        table = random_conditional(k, n, int(rng.integers(1 << 30)))
        back = conditional_of_joint(joint_from(marginal, table), k)
        assert np.abs(back.rows - table.rows).max() < 1e-12


def test_tv_row_distance():
    p = ConditionalTable.deterministic(1, 1, [0, 0])
    q = ConditionalTable.deterministic(1, 1, [1, 0])
    assert tv_row_distance(p, p) == 0.0
    assert tv_row_distance(p, q) == 2.0
    rng = np.random.default_rng(1)
    a = random_conditional(2, 2, 11)
    b = random_conditional(2, 2, 12)
    brute = max(sum(abs(a.rows[x, y] - b.rows[x, y]) for y in range(4))
                for x in range(4))
    assert tv_row_distance(a, b) == pytest.approx(brute)


def test_in_support_class():
    det = ConditionalTable.deterministic(2, 2, [0, 1, 2, 3])
    assert in_support_class(det, SupportClass(2, 2, 0))
    full = random_conditional(1, 2, 9)
    assert in_support_class(full, SupportClass(1, 2, 2 * 3))
    assert not in_support_class(full, SupportClass(1, 2, 0))


def test_partition_project_examples():
    model = PartitionModel.cylinder(2, 1)
    # block-constant input projects to itself
    p = Dist.from_probs([0.3, 0.2, 0.3, 0.2])
    proj, div = partition_project(p, model)
    assert np.allclose(proj.probs, p.probs)
    assert div == pytest.approx(0.0, abs=1e-12)

    # single block: projection is uniform
    single = PartitionModel(2, (frozenset(range(4)),))
    p = Dist.from_probs([0.4, 0.3, 0.2, 0.1])
    proj, div = partition_project(p, single)
    assert np.allclose(proj.probs, 0.25)
    expect = sum(v * math.log2(4 * v) for v in p.probs)
    assert div == pytest.approx(expect)

    # delta at 00 against the l=1 cylinder partition: divergence n - l = 1
    proj, div = partition_project(Dist.point_mass(2, 0), model)
    assert div == pytest.approx(1.0)


def test_partition_project_is_optimal_among_samples():
    rng = np.random.default_rng(7)
    model = PartitionModel.cylinder(3, 1)
    p = random_dist(3, rng)
    _, best = partition_project(p, model)
    for _ in range(100):
        masses = rng.dirichlet(np.ones(len(model.blocks)))
        q = np.zeros(8)
        for mass, block in zip(masses, model.blocks):
            idx = sorted(block)
            q[idx] = mass / len(idx)
        assert best <= kl_dist(p, Dist(3, q)) + 1e-12


def test_random_conditional_determinism_and_moments():
    a = random_conditional(2, 2, 123)
    b = random_conditional(2, 2, 123)
    assert np.array_equal(a.rows, b.rows)
    assert np.allclose(a.rows.sum(axis=1), 1.0)

    rows = np.vstack([random_conditional(5, 2, seed).rows
                      for seed in range(320)])  # 10240 rows
    # flat-Dirichlet coordinate: mean 1/4, var (1/4)(3/4)/5
    sigma = math.sqrt(0.25 * 0.75 / 5 / rows.shape[0])
    assert np.abs(rows.mean(axis=0) - 0.25).max() <= 3 * sigma


def test_serialization_round_trips():
    p = Dist.from_probs([0.1, 0.2, 0.3, 0.4])
    assert np.abs(Dist.from_json(p.to_json()).probs - p.probs).max() <= 1e-15
    assert np.abs(Dist.from_csv(p.to_csv()).probs - p.probs).max() <= 1e-15
    t = random_conditional(2, 2, 77)
    assert np.abs(ConditionalTable.from_json(t.to_json()).rows - t.rows).max() <= 1e-15
    assert np.abs(ConditionalTable.from_csv(t.to_csv()).rows - t.rows).max() <= 1e-15


@st.composite
def dists(draw, width=2):
    raw = draw(st.lists(st.floats(min_value=1e-3, max_value=1.0),
                        min_size=1 << width, max_size=1 << width))
    arr = np.array(raw)
    return Dist(width, arr / arr.sum())


@settings(max_examples=50, deadline=None)
@given(dists(), dists())
def test_hadamard_commutes_and_uniform_is_identity(p, q):
    assert np.abs(hadamard(p, q).probs - hadamard(q, p).probs).max() < 1e-12
    assert np.abs(hadamard(Dist.uniform(2), p).probs - p.probs).max() < 1e-12


@settings(max_examples=50, deadline=None)
@given(dists(), dists())
def test_kl_nonnegative_zero_iff_equal(p, q):
    d = kl_dist(p, q)
    assert d >= -1e-12
    if np.abs(p.probs - q.probs).max() < 1e-15:
        assert d < 1e-12
    assert kl_dist(p, p) == pytest.approx(0.0, abs=1e-12)
