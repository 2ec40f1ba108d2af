"""Pure-integer reference semantics for a quantized design point.

Implements the same dataflow conventions as the crossbar-backed execution
with plain numpy integer arithmetic only; no crossbar machinery is used,
so this is the independent oracle for end-to-end equivalence checks.
"""

from __future__ import annotations

import numpy as np

from .design_space import STEM, ModelConfig, OperatorKind


def _clamp(values, a_bits):
    lim = (1 << (a_bits - 1)) - 1
    return np.clip(np.asarray(values, dtype=np.int64), -lim, lim)


def _align(mat, width):
    if mat.shape[1] == width:
        return mat
    if mat.shape[1] > width:
        return mat[:, :width]
    out = np.zeros((mat.shape[0], width), dtype=mat.dtype)
    out[:, : mat.shape[1]] = mat
    return out


def strict_upper_pairs(x: np.ndarray) -> np.ndarray:
    """Row-major flattening of the strict upper triangle of X X^T."""
    g = x @ x.T
    m = g.shape[0]
    return np.asarray([g[i, j] for i in range(m) for j in range(i + 1, m)], dtype=np.int64)


def fm_interaction(vectors: np.ndarray) -> np.ndarray:
    """Square of the per-coordinate sum minus the per-coordinate sum of squares."""
    s = vectors.sum(axis=0)
    return s * s - (vectors * vectors).sum(axis=0)


def fm_interaction_pairwise(vectors: np.ndarray) -> np.ndarray:
    """Second oracle for the same quantity: 2 * sum over pairs of elementwise products."""
    n = vectors.shape[0]
    acc = np.zeros(vectors.shape[1], dtype=np.int64)
    for i in range(n):
        for j in range(i + 1, n):
            acc += vectors[i] * vectors[j]
    return 2 * acc


def reference_forward(
    model: ModelConfig,
    dense_in,
    sparse_in,
    weights: dict[str, np.ndarray],
    a_bits: int = 8,
) -> np.ndarray:
    """Forward pass of the quantized network in exact integer arithmetic."""
    n_s = model.num_sparse_features
    dense_out = {STEM: _clamp(dense_in, a_bits)}
    sparse_out = {STEM: _clamp(sparse_in, a_bits)}

    def gather_dense(sources):
        return np.concatenate([dense_out[s] for s in sources])

    def gather_sparse(sources, dim_s):
        return np.vstack([_align(sparse_out[s], dim_s) for s in sources])

    for blk in model.blocks:
        d_acc = np.zeros(blk.dim_d, dtype=np.int64)
        for op in blk.dense_ops:
            op_id = f"b{blk.index}.dense.{op.kind.value}"
            if op.kind == OperatorKind.FC:
                y = weights[op_id] @ gather_dense(op.inputs)
            elif op.kind == OperatorKind.DP:
                h = _clamp(weights[f"{op_id}.fc_front"] @ gather_dense(op.inputs), a_bits)
                e = _clamp(weights[f"{op_id}.efc"] @ gather_sparse(op.inputs, blk.dim_s), a_bits)
                x = np.vstack([h[None, :], e])
                pairs = _clamp(strict_upper_pairs(x), a_bits)
                y = weights[f"{op_id}.fc_out"] @ pairs
            else:  # FM
                ix = _clamp(fm_interaction(gather_sparse(op.inputs, blk.dim_s)), a_bits)
                y = weights[f"{op_id}.fc_out"] @ ix
            d_acc += _clamp(y, a_bits)
        d_acc = _clamp(np.maximum(d_acc, 0), a_bits)

        s_acc = np.zeros((n_s, blk.dim_s), dtype=np.int64)
        for op in blk.sparse_ops:
            op_id = f"b{blk.index}.sparse.{op.kind.value}"
            if op.kind == OperatorKind.EFC:
                ys = weights[op_id] @ gather_sparse(op.inputs, blk.dim_s)
            else:  # DSI
                ys = (weights[op_id] @ gather_dense(op.inputs)).reshape(n_s, blk.dim_s)
            s_acc += _clamp(ys, a_bits)
        s_acc = _clamp(s_acc, a_bits)

        dense_out[blk.index] = d_acc
        sparse_out[blk.index] = s_acc

    return weights["final_fc"] @ dense_out[model.blocks[-1].index]
