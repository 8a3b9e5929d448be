"""Lattice position attention: absolute, distance, and relation terms.

Pre-softmax logits combine content attention with three positional
terms: a bilinear form over concatenated start/end position embeddings,
four per-head distance tables indexed by clipped offsets, and a 7-entry
per-head relation table. One parameter set is shared by every encoder
layer. Rows and columns touching CLS have their positional sum replaced
by two learned per-head scalars.

All math is float64 numpy; backward passes are hand-written and checked
against central finite differences.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Sequence

import numpy as np

from .errors import PositionOverflow, ShapeError
from .geometry import (
    CLIP_BOUND,
    N_DISTANCE_BUCKETS,
    N_RELATIONS,
    DistanceOffsets,
    PositionRelation,
    offsets_matrix,
    relation_matrix,
)

DIR_NAMES = ("ss", "se", "es", "ee")

INIT_STD = 0.02


@dataclass
class LpaParams:
    """Shared-across-layers positional parameters, one row per head."""

    p_s: np.ndarray  # (l_max, d_e)
    p_e: np.ndarray  # (l_max, d_e)
    w_q: np.ndarray  # (n_h, 2*d_e, d_k)
    w_k: np.ndarray  # (n_h, 2*d_e, d_k)
    b: np.ndarray  # (n_h, 4, 257)
    r: np.ndarray  # (n_h, 7)
    cls_q: np.ndarray  # (n_h,)
    cls_k: np.ndarray  # (n_h,)

    @property
    def n_heads(self) -> int:
        return self.w_q.shape[0]

    @property
    def l_max(self) -> int:
        return self.p_s.shape[0]

    @property
    def d_k(self) -> int:
        return self.w_q.shape[2]

    def scalar_count_b_r(self) -> int:
        return self.b.size + self.r.size

    def copy(self) -> "LpaParams":
        return LpaParams(**{f.name: getattr(self, f.name).copy() for f in fields(self)})


def init_params(cfg, rng: np.random.Generator) -> LpaParams:
    """Gaussian embeddings/projections; zero distance and relation tables.

    Zero-initialized tables make the combined scores reduce to content
    attention at step 0.
    """
    d_e, d_k, n_h, l_max = cfg.d_e, cfg.d_k, cfg.n_h, cfg.l_max
    return LpaParams(
        p_s=rng.normal(0.0, INIT_STD, (l_max, d_e)),
        p_e=rng.normal(0.0, INIT_STD, (l_max, d_e)),
        w_q=rng.normal(0.0, INIT_STD, (n_h, 2 * d_e, d_k)),
        w_k=rng.normal(0.0, INIT_STD, (n_h, 2 * d_e, d_k)),
        b=np.zeros((n_h, 4, N_DISTANCE_BUCKETS)),
        r=np.zeros((n_h, N_RELATIONS)),
        cls_q=np.zeros(n_h),
        cls_k=np.zeros(n_h),
    )


def expected_b_r_scalars(n_h: int) -> int:
    return n_h * (4 * N_DISTANCE_BUCKETS + N_RELATIONS)


def abs_position_term(
    p_s: np.ndarray,
    p_e: np.ndarray,
    w_q_h: np.ndarray,
    w_k_h: np.ndarray,
    s_arr: Sequence[int],
    e_arr: Sequence[int],
) -> np.ndarray:
    """Single-head absolute-position attention matrix.

    att_ij = ([P_S[s_i]; P_E[e_i]] Wq) ([P_S[s_j]; P_E[e_j]] Wk)^T / sqrt(2 d_k)
    """
    s = np.asarray(s_arr, dtype=np.int64)
    e = np.asarray(e_arr, dtype=np.int64)
    l_max = p_s.shape[0]
    if s.size and (s.max() >= l_max or e.max() >= l_max):
        raise PositionOverflow(f"position >= l_max ({l_max})")
    pcat = np.concatenate([p_s[s], p_e[e]], axis=1)
    d_k = w_q_h.shape[1]
    q = pcat @ w_q_h
    k = pcat @ w_k_h
    return (q @ k.T) / np.sqrt(2.0 * d_k)


def distance_bias(b_h: np.ndarray, offsets: DistanceOffsets) -> float:
    """Sum of the four per-direction table entries for one token pair."""
    return float(
        sum(b_h[d, offsets[d] + CLIP_BOUND] for d in range(4))
    )


def relation_bias(r_h: np.ndarray, rel: PositionRelation) -> float:
    return float(r_h[int(rel)])


def combine_scores(
    alpha: np.ndarray,
    att: np.ndarray,
    b: np.ndarray,
    r: np.ndarray,
    cls_index: int | None = None,
    cls_q: float = 0.0,
    cls_k: float = 0.0,
) -> np.ndarray:
    """Elementwise combined logits for one head, with the CLS reset.

    Rows with CLS as query take cls_q as their whole positional term;
    columns with CLS as key take cls_k (the query rule wins on the
    diagonal cell).
    """
    if not (alpha.shape == att.shape == b.shape == r.shape):
        raise ShapeError(
            f"shape mismatch: {alpha.shape}, {att.shape}, {b.shape}, {r.shape}"
        )
    pos = att + b + r
    if cls_index is not None:
        pos[:, cls_index] = cls_k
        pos[cls_index, :] = cls_q
    return alpha + pos


def position_scores(
    params: LpaParams,
    s_arr: Sequence[int] | np.ndarray,
    e_arr: Sequence[int] | np.ndarray,
    cls_index: int | None = None,
):
    """All-head positional logits (n_h, n, n) plus a backward cache."""
    s = np.asarray(s_arr, dtype=np.int64)
    e = np.asarray(e_arr, dtype=np.int64)
    if s.size and (int(s.max()) >= params.l_max or int(e.max()) >= params.l_max):
        raise PositionOverflow(f"position >= l_max ({params.l_max})")
    pcat = np.concatenate([params.p_s[s], params.p_e[e]], axis=1)  # (n, 2d_e)
    q = pcat @ params.w_q
    k = pcat @ params.w_k
    scale = 1.0 / np.sqrt(2.0 * params.d_k)
    att = (q @ k.transpose(0, 2, 1)) * scale
    offs = offsets_matrix(s, e) + CLIP_BOUND  # (n, n, 4) table indices
    bmat = np.zeros_like(att)
    for d in range(4):
        bmat += params.b[:, d, :][:, offs[:, :, d]]
    rel = relation_matrix(s, e)
    rmat = params.r[:, rel]
    pos = att + bmat + rmat
    if cls_index is not None:
        pos[:, :, cls_index] = params.cls_k[:, None]
        pos[:, cls_index, :] = params.cls_q[:, None]
    cache = (s, e, pcat, q, k, offs, rel, cls_index, scale)
    return pos, cache


def position_scores_backward(
    params: LpaParams, cache, dpos: np.ndarray
) -> dict[str, np.ndarray]:
    """Gradients of a loss w.r.t. every LPA parameter given d(pos)."""
    s, e, pcat, q, k, offs, rel, cls_index, scale = cache
    n_h = params.n_heads
    grads = {
        "p_s": np.zeros_like(params.p_s),
        "p_e": np.zeros_like(params.p_e),
        "cls_q": np.zeros_like(params.cls_q),
        "cls_k": np.zeros_like(params.cls_k),
        "b": np.zeros_like(params.b),
        "r": np.zeros_like(params.r),
    }
    dpos = np.array(dpos, dtype=np.float64, copy=True)
    if cls_index is not None:
        grads["cls_q"] = dpos[:, cls_index, :].sum(axis=1)
        dcol = dpos[:, :, cls_index].copy()
        dcol[:, cls_index] = 0.0
        grads["cls_k"] = dcol.sum(axis=1)
        dpos[:, cls_index, :] = 0.0
        dpos[:, :, cls_index] = 0.0
    rel_flat = rel.reshape(-1)
    offs_flat = offs.reshape(-1, 4)
    dflat = dpos.reshape(n_h, -1)
    for h in range(n_h):
        grads["r"][h] += np.bincount(
            rel_flat, weights=dflat[h], minlength=N_RELATIONS
        )
        for d in range(4):
            grads["b"][h, d] += np.bincount(
                offs_flat[:, d], weights=dflat[h], minlength=N_DISTANCE_BUCKETS
            )
    datt = dpos * scale
    dq = datt @ k
    dk = datt.transpose(0, 2, 1) @ q
    grads["w_q"] = pcat.T @ dq
    grads["w_k"] = pcat.T @ dk
    dpcat = (dq @ params.w_q.transpose(0, 2, 1)).sum(axis=0) + (
        dk @ params.w_k.transpose(0, 2, 1)
    ).sum(axis=0)
    d_e = params.p_s.shape[1]
    np.add.at(grads["p_s"], s, dpcat[:, :d_e])
    np.add.at(grads["p_e"], e, dpcat[:, d_e:])
    return grads


def state_dict(params: LpaParams) -> dict[str, np.ndarray]:
    """Documented checkpoint names: per-head tensors carry .h suffixes."""
    d: dict[str, np.ndarray] = {"p_s": params.p_s, "p_e": params.p_e}
    for h in range(params.n_heads):
        d[f"w_q.{h}"] = params.w_q[h]
        d[f"w_k.{h}"] = params.w_k[h]
        for di, name in enumerate(DIR_NAMES):
            d[f"b.{h}.{name}"] = params.b[h, di]
        d[f"r.{h}"] = params.r[h]
        d[f"cls_q.{h}"] = np.asarray(params.cls_q[h])
        d[f"cls_k.{h}"] = np.asarray(params.cls_k[h])
    return d


def from_state_dict(d: dict[str, np.ndarray]) -> LpaParams:
    n_h = sum(1 for k in d if k.startswith("w_q."))
    w_q = np.stack([d[f"w_q.{h}"] for h in range(n_h)])
    w_k = np.stack([d[f"w_k.{h}"] for h in range(n_h)])
    b = np.stack(
        [
            np.stack([d[f"b.{h}.{name}"] for name in DIR_NAMES])
            for h in range(n_h)
        ]
    )
    r = np.stack([d[f"r.{h}"] for h in range(n_h)])
    cls_q = np.array([float(d[f"cls_q.{h}"]) for h in range(n_h)])
    cls_k = np.array([float(d[f"cls_k.{h}"]) for h in range(n_h)])
    return LpaParams(
        p_s=np.asarray(d["p_s"], dtype=np.float64),
        p_e=np.asarray(d["p_e"], dtype=np.float64),
        w_q=np.asarray(w_q, dtype=np.float64),
        w_k=np.asarray(w_k, dtype=np.float64),
        b=np.asarray(b, dtype=np.float64),
        r=np.asarray(r, dtype=np.float64),
        cls_q=cls_q,
        cls_k=cls_k,
    )
