import numpy as np
import pytest

from crbmkit.crbm import (
    CrbmParams,
    append_hidden_unit,
    as_rbm_over_visibles,
    conditional_jacobian,
    delete_last_unit,
    eval_conditional,
    eval_joint_rbm,
    inference_map,
    random_params,
)
from crbmkit.distributions import conditional_of_joint, tv_row_distance
from crbmkit.errors import CapExceeded, ShapeMismatch


def brute_conditional(p: CrbmParams) -> np.ndarray:
    """Independent oracle: direct summation over the hidden space."""
    def weight(x, y):
        xb = np.array([(x >> i) & 1 for i in range(p.k)], dtype=float)
        yb = np.array([(y >> i) & 1 for i in range(p.n)], dtype=float)
        total = 0.0
        for z in range(1 << p.m):
            zb = np.array([(z >> j) & 1 for j in range(p.m)], dtype=float)
            total += np.exp(zb @ p.V @ xb + zb @ p.W @ yb + p.b @ yb + p.c @ zb)
        return total
    rows = np.array([[weight(x, y) for y in range(1 << p.n)]
                     for x in range(1 << p.k)])
    return rows / rows.sum(axis=1, keepdims=True)


def test_eval_conditional_m0_is_x_independent_softmax():
    b = np.array([0.3, -0.7])
    p = CrbmParams.bias_only(2, 2, b)
    table = eval_conditional(p)
    y_bits = np.array([[y & 1, (y >> 1) & 1] for y in range(4)], dtype=float)
    soft = np.exp(y_bits @ b)
    soft /= soft.sum()
    for x in range(4):
        assert np.allclose(table.rows[x], soft)


def test_eval_conditional_all_zero_params_uniform():
    table = eval_conditional(CrbmParams.zeros(2, 2, 3))
    assert np.allclose(table.rows, 0.25)


def test_eval_conditional_matches_enumeration_oracle():
    rng = np.random.default_rng(4)
    for k, n, m in [(1, 1, 1), (2, 2, 2), (1, 2, 3)]:
        p = random_params(k, n, m, rng)
        assert np.abs(eval_conditional(p).rows - brute_conditional(p)).max() < 1e-12


def test_eval_joint_rbm_examples():
    assert np.allclose(eval_joint_rbm(CrbmParams.zeros(0, 2, 0)).probs, 0.25)
    # m=1, W=0: the hidden unit marginalizes away
    p = CrbmParams(0, 2, 1, np.zeros((1, 2)), np.zeros((1, 0)),
                   np.array([0.4, -0.2]), np.array([1.3]))
    q = CrbmParams.bias_only(0, 2, np.array([0.4, -0.2]))
    assert np.allclose(eval_joint_rbm(p).probs, eval_joint_rbm(q).probs)
    rng = np.random.default_rng(8)
    pr = random_params(0, 3, 2, rng)
    assert np.allclose(eval_joint_rbm(pr).probs, brute_conditional(pr)[0])


def test_eval_joint_rbm_requires_k0():
    with pytest.raises(ShapeMismatch):
        eval_joint_rbm(CrbmParams.zeros(1, 1, 0))


def test_append_zero_unit_is_invariant():
    rng = np.random.default_rng(2)
    p = random_params(2, 2, 1, rng)
    q = append_hidden_unit(p, np.zeros(2), np.zeros(2), 0.0)
    assert np.abs(eval_conditional(p).rows - eval_conditional(q).rows).max() < 1e-12


def test_append_then_delete_round_trip():
    rng = np.random.default_rng(2)
    p = random_params(1, 2, 2, rng)
    q = delete_last_unit(append_hidden_unit(p, [1.0, -1.0], [0.5], 0.2))
    assert np.array_equal(q.W, p.W) and np.array_equal(q.V, p.V)
    assert np.array_equal(q.c, p.c)
    with pytest.raises(ShapeMismatch):
        append_hidden_unit(p, [1.0], [0.5], 0.0)


def test_two_readings_of_the_model_agree():
    # conditionals of the k+n visible RBM equal the direct evaluation
    rng = np.random.default_rng(6)
    for k, n, m in [(1, 1, 1), (2, 1, 2), (1, 2, 2)]:
        p = random_params(k, n, m, rng)
        joint = eval_joint_rbm(as_rbm_over_visibles(p))
        table = conditional_of_joint(joint, k)
        assert tv_row_distance(table, eval_conditional(p)) < 1e-12


def test_bias_shift_tilts_all_rows_equally():
    rng = np.random.default_rng(9)
    p = random_params(2, 2, 1, rng)
    delta = np.array([0.7, -0.4])
    q = CrbmParams(p.k, p.n, p.m, p.W, p.V, p.b + delta, p.c)
    y_bits = np.array([[y & 1, (y >> 1) & 1] for y in range(4)], dtype=float)
    tilt = np.exp(y_bits @ delta)
    before, after = eval_conditional(p).rows, eval_conditional(q).rows
    tilted = before * tilt
    tilted /= tilted.sum(axis=1, keepdims=True)
    assert np.abs(after - tilted).max() < 1e-12


def test_hidden_bias_shift_unobservable_for_zero_weight_unit():
    p = append_hidden_unit(CrbmParams.zeros(1, 1, 0), [0.0], [0.0], 0.0)
    q = append_hidden_unit(CrbmParams.zeros(1, 1, 0), [0.0], [0.0], 5.0)
    assert np.abs(eval_conditional(p).rows - eval_conditional(q).rows).max() < 1e-12


def test_inference_map_examples():
    imap = inference_map(CrbmParams.zeros(1, 1, 2))
    assert imap.any_tie
    assert all(imap.hidden_for(x, y) == 0 for x in range(2) for y in range(2))

    p = CrbmParams(1, 1, 1, np.zeros((1, 1)), np.zeros((1, 1)),
                   np.zeros(1), np.array([10.0]))
    imap = inference_map(p)
    assert not imap.any_tie
    assert all(imap.hidden_for(x, y) == 1 for x in range(2) for y in range(2))

    rng = np.random.default_rng(10)
    imap = inference_map(random_params(2, 2, 2, rng))
    assert not imap.any_tie  # ties are a probability-zero event


def test_jacobian_rows_of_each_block_sum_to_zero():
    rng = np.random.default_rng(11)
    p = random_params(2, 1, 2, rng)
    jac = conditional_jacobian(p)
    per_block = jac.reshape(1 << p.k, 1 << p.n, -1).sum(axis=1)
    assert np.abs(per_block).max() < 1e-12


def test_jacobian_m0_softmax_covariance():
    b = np.array([0.2, -0.5])
    p = CrbmParams.bias_only(1, 2, b)
    jac = conditional_jacobian(p)
    rows = eval_conditional(p).rows
    y_bits = np.array([[y & 1, (y >> 1) & 1] for y in range(4)], dtype=float)
    for x in range(2):
        mean = rows[x] @ y_bits
        for y in range(4):
            expect = rows[x, y] * (y_bits[y] - mean)
            assert np.allclose(jac[x * 4 + y, :2], expect)


@pytest.mark.parametrize("shape", [(1, 1, 1), (1, 2, 2), (2, 2, 1)])
def test_jacobian_matches_finite_differences(shape):
    k, n, m = shape
    rng = np.random.default_rng(sum(shape))
    h = 1e-5
    for _ in range(20):
        p = random_params(k, n, m, rng)
        jac = conditional_jacobian(p)
        theta = np.concatenate([p.W.ravel(), p.V.ravel(), p.b, p.c])

        def table_at(th):
            W = th[: m * n].reshape(m, n)
            V = th[m * n: m * (n + k)].reshape(m, k)
            b = th[m * (n + k): m * (n + k) + n]
            c = th[m * (n + k) + n:]
            return eval_conditional(CrbmParams(k, n, m, W, V, b, c)).rows.reshape(-1)

        fd = np.empty_like(jac)
        for j in range(theta.size):
            tp, tm = theta.copy(), theta.copy()
            tp[j] += h
            tm[j] -= h
            fd[:, j] = (table_at(tp) - table_at(tm)) / (2 * h)
        assert np.abs(jac - fd).max() <= 1e-6


def test_cap_enforced():
    with pytest.raises(CapExceeded):
        eval_conditional(CrbmParams.zeros(13, 13, 13))


def test_params_json_round_trip():
    rng = np.random.default_rng(12)
    p = random_params(2, 1, 3, rng)
    q = CrbmParams.from_json(p.to_json())
    assert np.array_equal(p.W, q.W) and np.array_equal(p.V, q.V)
    assert np.array_equal(p.b, q.b) and np.array_equal(p.c, q.c)
