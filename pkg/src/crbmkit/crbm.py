"""Exact CRBM evaluation by enumeration, hidden-unit bookkeeping, Jacobians.

A CRBM with k inputs, n outputs, m hidden units assigns

    p(y|x) propto sum_z exp(z^T V x + z^T W y + b^T y + c^T z).

The hidden sum factorizes across units, so every evaluation works in the log
domain with softplus/log-sum-exp; probabilities are exponentiated only at the
final row normalization.  Compiled constructions push weights to +-1e3 and
beyond, which would overflow linear-domain arithmetic.

Joint indexing convention: visible state v = x + 2^k * y (inputs on the low
bits), matching distributions.conditional_of_joint.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .distributions import ConditionalTable, Dist
from .errors import CapExceeded, ShapeMismatch

#: cap on k + n + m for enumerated evaluation
TOTAL_CAP = 26


def _bit_matrix(width: int) -> np.ndarray:
    """(2^width, width) matrix whose row i holds the bits of index i."""
    idx = np.arange(1 << width)
    return ((idx[:, None] >> np.arange(width)[None, :]) & 1).astype(float)


@dataclass(frozen=True)
class CrbmParams:
    """Interaction weights and biases (W: m x n, V: m x k, b: n, c: m)."""

    k: int
    n: int
    m: int
    W: np.ndarray = field(repr=False)
    V: np.ndarray = field(repr=False)
    b: np.ndarray = field(repr=False)
    c: np.ndarray = field(repr=False)

    def __post_init__(self):
        W = np.asarray(self.W, dtype=float).reshape(self.m, self.n)
        V = np.asarray(self.V, dtype=float).reshape(self.m, self.k)
        b = np.asarray(self.b, dtype=float).reshape(self.n)
        c = np.asarray(self.c, dtype=float).reshape(self.m)
        for name, a in (("W", W), ("V", V), ("b", b), ("c", c)):
            if not np.all(np.isfinite(a)):
                raise ValueError(f"non-finite entries in {name}")
            object.__setattr__(self, name, a)
            a.setflags(write=False)

    @staticmethod
    def zeros(k: int, n: int, m: int) -> "CrbmParams":
        return CrbmParams(k, n, m, np.zeros((m, n)), np.zeros((m, k)),
                          np.zeros(n), np.zeros(m))

    @staticmethod
    def bias_only(k: int, n: int, b) -> "CrbmParams":
        return CrbmParams(k, n, 0, np.zeros((0, n)), np.zeros((0, k)),
                          np.asarray(b, dtype=float), np.zeros(0))

    @property
    def param_count(self) -> int:
        return (self.k + self.n + 1) * self.m + self.n

    def to_json(self) -> str:
        return json.dumps({
            "k": self.k, "n": self.n, "m": self.m,
            "W": self.W.tolist(), "V": self.V.tolist(),
            "b": self.b.tolist(), "c": self.c.tolist(),
        })

    @staticmethod
    def from_json(text: str) -> "CrbmParams":
        o = json.loads(text)
        return CrbmParams(o["k"], o["n"], o["m"],
                          np.array(o["W"], dtype=float).reshape(o["m"], o["n"]),
                          np.array(o["V"], dtype=float).reshape(o["m"], o["k"]),
                          np.array(o["b"], dtype=float),
                          np.array(o["c"], dtype=float))


@dataclass(frozen=True)
class InferenceMap:
    """Most likely hidden state per visible state (x, y); v = x + 2^k * y."""

    k: int
    n: int
    m: int
    assignments: np.ndarray = field(repr=False)
    ties: np.ndarray = field(repr=False)

    def hidden_for(self, x: int, y: int) -> int:
        return int(self.assignments[x + (y << self.k)])

    @property
    def any_tie(self) -> bool:
        return bool(self.ties.any())


def _check_cap(p: CrbmParams) -> None:
    if p.k + p.n + p.m > TOTAL_CAP:
        raise CapExceeded(f"k+n+m = {p.k + p.n + p.m} exceeds cap {TOTAL_CAP}")


def conditional_logits(p: CrbmParams) -> np.ndarray:
    """Unnormalized log p(y|x) as a (2^k, 2^n) array."""
    _check_cap(p)
    Y = _bit_matrix(p.n)
    X = _bit_matrix(p.k)
    energy = (Y @ p.b)[None, :]                       # (1, 2^n)
    if p.m:
        ax = X @ p.V.T                                # (2^k, m)
        ay = Y @ p.W.T                                # (2^n, m)
        act = ax[:, None, :] + ay[None, :, :] + p.c   # (2^k, 2^n, m)
        energy = energy + np.logaddexp(0.0, act).sum(axis=2)
    else:
        energy = np.broadcast_to(energy, (1 << p.k, 1 << p.n)).copy()
    return energy


def eval_conditional(p: CrbmParams) -> ConditionalTable:
    """The full conditional table of the model, rows normalized."""
    energy = conditional_logits(p)
    energy = energy - energy.max(axis=1, keepdims=True)
    rows = np.exp(energy)
    rows /= rows.sum(axis=1, keepdims=True)
    return ConditionalTable(p.k, p.n, rows)


def eval_joint_rbm(p: CrbmParams) -> Dist:
    """Visible distribution of the RBM special case (k = 0)."""
    if p.k != 0:
        raise ShapeMismatch("eval_joint_rbm requires k = 0")
    energy = conditional_logits(p)[0]
    energy = energy - energy.max()
    probs = np.exp(energy)
    return Dist(p.n, probs / probs.sum())


def as_rbm_over_visibles(p: CrbmParams) -> CrbmParams:
    """Reinterpret the CRBM as an RBM over all k+n visibles (inputs unbiased)."""
    W = np.concatenate([p.V, p.W], axis=1)
    b = np.concatenate([np.zeros(p.k), p.b])
    return CrbmParams(0, p.k + p.n, p.m, W, np.zeros((p.m, 0)), b, p.c)


def append_hidden_unit(p: CrbmParams, w_out, w_in, bias: float) -> CrbmParams:
    w_out = np.asarray(w_out, dtype=float)
    w_in = np.asarray(w_in, dtype=float)
    if w_out.shape != (p.n,) or w_in.shape != (p.k,):
        raise ShapeMismatch(
            f"hidden unit weights must have shapes ({p.n},) and ({p.k},)"
        )
    return CrbmParams(
        p.k, p.n, p.m + 1,
        np.vstack([p.W, w_out[None, :]]),
        np.vstack([p.V, w_in[None, :]]),
        p.b,
        np.append(p.c, float(bias)),
    )


def delete_last_unit(p: CrbmParams) -> CrbmParams:
    if p.m == 0:
        raise ShapeMismatch("no hidden unit to delete")
    return CrbmParams(p.k, p.n, p.m - 1, p.W[:-1], p.V[:-1], p.b, p.c[:-1])


def inference_map(p: CrbmParams) -> InferenceMap:
    """argmax_z of z^T (V x + W y + c) per visible state; ties -> smallest z."""
    _check_cap(p)
    X = _bit_matrix(p.k)
    Y = _bit_matrix(p.n)
    size = 1 << (p.k + p.n)
    assignments = np.zeros(size, dtype=np.int64)
    ties = np.zeros(size, dtype=bool)
    if p.m:
        ax = X @ p.V.T
        ay = Y @ p.W.T
        for y in range(1 << p.n):
            act = ax + ay[y] + p.c        # (2^k, m)
            z = (act > 0).astype(np.int64)
            v = np.arange(1 << p.k) + (y << p.k)
            assignments[v] = z @ (1 << np.arange(p.m))
            ties[v] = (act == 0).any(axis=1)
    return InferenceMap(p.k, p.n, p.m, assignments, ties)


def _log_grads(p: CrbmParams) -> np.ndarray:
    """d log G(x,y) / d theta for all (x, y); theta = (W, V, b, c) row-major."""
    X = _bit_matrix(p.k)
    Y = _bit_matrix(p.n)
    nx, ny, m = 1 << p.k, 1 << p.n, p.m
    grads = np.zeros((nx, ny, p.param_count))
    if m:
        ax = X @ p.V.T
        ay = Y @ p.W.T
        sig = expit(ax[:, None, :] + ay[None, :, :] + p.c)  # (nx, ny, m)
        # W (m x n, row-major): d/dW_ji = sigma_j * y_i
        gW = sig[:, :, :, None] * Y[None, :, None, :]
        grads[:, :, : m * p.n] = gW.reshape(nx, ny, m * p.n)
        # V (m x k): d/dV_ji = sigma_j * x_i
        gV = sig[:, :, :, None] * X[:, None, None, :]
        grads[:, :, m * p.n : m * (p.n + p.k)] = gV.reshape(nx, ny, m * p.k)
        grads[:, :, m * (p.n + p.k) + p.n :] = sig
    grads[:, :, m * (p.n + p.k) : m * (p.n + p.k) + p.n] = Y[None, :, :]
    return grads


def conditional_jacobian(p: CrbmParams) -> np.ndarray:
    """Jacobian of theta -> {p(y|x)}, shape (2^(k+n), (k+n+1)m + n).

    Rows are grouped by input block (row index x * 2^n + y); columns follow
    W row-major, V row-major, b, c.
    """
    _check_cap(p)
    table = eval_conditional(p).rows       # (2^k, 2^n)
    grads = _log_grads(p)                  # (2^k, 2^n, P)
    mean = np.einsum("xy,xyp->xp", table, grads)
    jac = table[:, :, None] * (grads - mean[:, None, :])
    return jac.reshape(-1, grads.shape[2])


def random_params(k: int, n: int, m: int, rng: np.random.Generator,
                  scale: float = 1.0) -> CrbmParams:
    return CrbmParams(k, n, m,
                      scale * rng.standard_normal((m, n)),
                      scale * rng.standard_normal((m, k)),
                      scale * rng.standard_normal(n),
                      scale * rng.standard_normal(m))
