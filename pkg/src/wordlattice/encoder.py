"""Desk-scale transformer encoder wired to lattice position attention.

Post-layer-norm stack with factorized token embeddings (small table plus
up-projection, no direct vocab-by-hidden matrix anywhere), masked
segment prediction through a head tied to the embedding table, and a
2-way sentence-order head on CLS. Everything runs in float64 numpy with
hand-written backward passes so gradients can be checked against
central finite differences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import lpa
from .errors import ConfigError, PositionOverflow
from .instances import PretrainInstance
from .lpa import LpaParams, position_scores, position_scores_backward

LN_EPS = 1e-12
_GELU_C = math.sqrt(2.0 / math.pi)
_GELU_A = 0.044715

PRESETS = {
    "base": dict(n_layers=12, d_h=768, d_e=128, d_ffn=3072, n_h=12),
    "lite": dict(n_layers=6, d_h=512, d_e=128, d_ffn=2048, n_h=8),
    "toy": dict(n_layers=2, d_h=64, d_e=16, d_ffn=128, n_h=4),
}


@dataclass(frozen=True)
class EncoderConfig:
    n_layers: int
    d_h: int
    d_e: int
    d_ffn: int
    n_h: int
    vocab_size: int
    l_max: int = 693
    dropout: float = 0.1
    attn_dropout: float = 0.1

    def __post_init__(self):
        if self.d_h % self.n_h:
            raise ConfigError(f"d_h={self.d_h} not divisible by n_h={self.n_h}")
        if self.vocab_size < 6:
            raise ConfigError("vocab_size must cover the specials plus content")

    @property
    def d_k(self) -> int:
        return self.d_h // self.n_h

    @classmethod
    def preset(cls, name: str, vocab_size: int, **overrides) -> "EncoderConfig":
        if name not in PRESETS:
            raise ConfigError(f"unknown preset {name!r}; options: {sorted(PRESETS)}")
        kw = dict(PRESETS[name])
        kw.update(overrides)
        return cls(vocab_size=vocab_size, **kw)


@dataclass
class EncoderState:
    cfg: EncoderConfig
    params: dict[str, np.ndarray]
    step: int = 0

    def lpa_view(self) -> LpaParams:
        p = self.params
        return LpaParams(
            p_s=p["lpa.p_s"],
            p_e=p["lpa.p_e"],
            w_q=p["lpa.w_q"],
            w_k=p["lpa.w_k"],
            b=p["lpa.b"],
            r=p["lpa.r"],
            cls_q=p["lpa.cls_q"],
            cls_k=p["lpa.cls_k"],
        )

    def embedding_path_params(self) -> int:
        return self.params["emb.tok"].size + self.params["emb.up"].size

    def zero_grads(self) -> dict[str, np.ndarray]:
        return {k: np.zeros_like(v) for k, v in self.params.items()}


def init_state(cfg: EncoderConfig, rng: np.random.Generator) -> EncoderState:
    std = lpa.INIT_STD
    p: dict[str, np.ndarray] = {}
    p["emb.tok"] = rng.normal(0.0, std, (cfg.vocab_size, cfg.d_e))
    p["emb.up"] = rng.normal(0.0, std, (cfg.d_e, cfg.d_h))
    p["emb.ln.g"] = np.ones(cfg.d_h)
    p["emb.ln.b"] = np.zeros(cfg.d_h)
    for l in range(cfg.n_layers):
        pre = f"layer.{l}."
        for name in ("wq", "wk", "wv", "wo"):
            p[pre + "attn." + name] = rng.normal(0.0, std, (cfg.d_h, cfg.d_h))
        for name in ("bq", "bk", "bv", "bo"):
            p[pre + "attn." + name] = np.zeros(cfg.d_h)
        p[pre + "ln1.g"] = np.ones(cfg.d_h)
        p[pre + "ln1.b"] = np.zeros(cfg.d_h)
        p[pre + "ffn.w1"] = rng.normal(0.0, std, (cfg.d_h, cfg.d_ffn))
        p[pre + "ffn.b1"] = np.zeros(cfg.d_ffn)
        p[pre + "ffn.w2"] = rng.normal(0.0, std, (cfg.d_ffn, cfg.d_h))
        p[pre + "ffn.b2"] = np.zeros(cfg.d_h)
        p[pre + "ln2.g"] = np.ones(cfg.d_h)
        p[pre + "ln2.b"] = np.zeros(cfg.d_h)
    lp = lpa.init_params(cfg, rng)
    p["lpa.p_s"] = lp.p_s
    p["lpa.p_e"] = lp.p_e
    p["lpa.w_q"] = lp.w_q
    p["lpa.w_k"] = lp.w_k
    p["lpa.b"] = lp.b
    p["lpa.r"] = lp.r
    p["lpa.cls_q"] = lp.cls_q
    p["lpa.cls_k"] = lp.cls_k
    p["msp.w"] = rng.normal(0.0, std, (cfg.d_h, cfg.d_e))
    p["msp.b"] = np.zeros(cfg.d_e)
    p["msp.bias"] = np.zeros(cfg.vocab_size)
    p["sop.w"] = rng.normal(0.0, std, (cfg.d_h, 2))
    p["sop.b"] = np.zeros(2)
    return EncoderState(cfg=cfg, params=p)


# -- primitive layers -------------------------------------------------------


def layernorm(x, g, b):
    mu = x.mean(axis=-1, keepdims=True)
    xc = x - mu
    var = (xc * xc).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + LN_EPS)
    xhat = xc * inv
    return g * xhat + b, (xhat, inv, g)


def layernorm_backward(dy, cache):
    xhat, inv, g = cache
    d = xhat.shape[-1]
    dg = (dy * xhat).sum(axis=tuple(range(dy.ndim - 1)))
    db = dy.sum(axis=tuple(range(dy.ndim - 1)))
    dxhat = dy * g
    dx = inv * (
        dxhat
        - dxhat.mean(axis=-1, keepdims=True)
        - xhat * (dxhat * xhat).mean(axis=-1, keepdims=True)
    )
    return dx, dg, db


def gelu(x):
    u = _GELU_C * (x + _GELU_A * x * x * x)
    t = np.tanh(u)
    return 0.5 * x * (1.0 + t), (x, t)


def gelu_backward(dy, cache):
    x, t = cache
    du = _GELU_C * (1.0 + 3.0 * _GELU_A * x * x)
    return dy * (0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * du)


def softmax(x, axis=-1):
    z = x - x.max(axis=axis, keepdims=True)
    ez = np.exp(z)
    return ez / ez.sum(axis=axis, keepdims=True)


def softmax_backward(dp, p):
    return p * (dp - (dp * p).sum(axis=-1, keepdims=True))


def _dropout(x, rate, rng):
    mask = (rng.random(x.shape) >= rate) / (1.0 - rate)
    return x * mask, mask


# -- forward / backward -----------------------------------------------------


@dataclass
class ForwardCache:
    ids: np.ndarray
    hiddens: np.ndarray
    cls_index: int
    lpa_cache: tuple
    pos: np.ndarray
    emb: tuple
    layers: list
    attn_probs: list = field(default_factory=list)


def encode(
    state: EncoderState,
    ids: Sequence[int],
    s_arr: Sequence[int],
    e_arr: Sequence[int],
    cls_index: int = 0,
    train: bool = False,
    rng: np.random.Generator | None = None,
    keep_attn: bool = False,
) -> ForwardCache:
    """Run the full stack; returns hidden vectors plus backward caches."""
    cfg = state.cfg
    p = state.params
    ids = np.asarray(ids, dtype=np.int64)
    n = ids.shape[0]
    if n > cfg.l_max:
        raise PositionOverflow(f"{n} tokens exceed l_max={cfg.l_max}")
    if train and rng is None:
        raise ConfigError("training mode needs an rng for dropout")

    pos, lpa_cache = position_scores(state.lpa_view(), s_arr, e_arr, cls_index)

    x_emb = p["emb.tok"][ids]
    h_pre = x_emb @ p["emb.up"]
    h, ln0 = layernorm(h_pre, p["emb.ln.g"], p["emb.ln.b"])
    emb_mask = None
    if train and cfg.dropout > 0:
        h, emb_mask = _dropout(h, cfg.dropout, rng)
    emb_cache = (x_emb, ln0, emb_mask)

    scale = 1.0 / math.sqrt(2.0 * cfg.d_k)
    layer_caches = []
    attn_probs = []
    for l in range(cfg.n_layers):
        pre = f"layer.{l}."
        h_in = h
        q = h_in @ p[pre + "attn.wq"] + p[pre + "attn.bq"]
        k = h_in @ p[pre + "attn.wk"] + p[pre + "attn.bk"]
        v = h_in @ p[pre + "attn.wv"] + p[pre + "attn.bv"]
        qh = q.reshape(n, cfg.n_h, cfg.d_k).transpose(1, 0, 2)
        kh = k.reshape(n, cfg.n_h, cfg.d_k).transpose(1, 0, 2)
        vh = v.reshape(n, cfg.n_h, cfg.d_k).transpose(1, 0, 2)
        alpha = (qh @ kh.transpose(0, 2, 1)) * scale
        logits = alpha + pos
        probs = softmax(logits)
        if keep_attn:
            attn_probs.append(probs)
        probs_used, attn_mask = probs, None
        if train and cfg.attn_dropout > 0:
            probs_used, attn_mask = _dropout(probs, cfg.attn_dropout, rng)
        ctx_h = probs_used @ vh
        ctx = ctx_h.transpose(1, 0, 2).reshape(n, cfg.d_h)
        ao = ctx @ p[pre + "attn.wo"] + p[pre + "attn.bo"]
        ao_mask = None
        if train and cfg.dropout > 0:
            ao, ao_mask = _dropout(ao, cfg.dropout, rng)
        h1, ln1 = layernorm(h_in + ao, p[pre + "ln1.g"], p[pre + "ln1.b"])
        f1 = h1 @ p[pre + "ffn.w1"] + p[pre + "ffn.b1"]
        a1, gcache = gelu(f1)
        f2 = a1 @ p[pre + "ffn.w2"] + p[pre + "ffn.b2"]
        f2_mask = None
        if train and cfg.dropout > 0:
            f2, f2_mask = _dropout(f2, cfg.dropout, rng)
        h2, ln2 = layernorm(h1 + f2, p[pre + "ln2.g"], p[pre + "ln2.b"])
        layer_caches.append(
            (h_in, qh, kh, vh, probs, probs_used, attn_mask, ctx, ao_mask, ln1, h1, a1, gcache, f2_mask, ln2)
        )
        h = h2

    return ForwardCache(
        ids=ids,
        hiddens=h,
        cls_index=cls_index,
        lpa_cache=lpa_cache,
        pos=pos,
        emb=emb_cache,
        layers=layer_caches,
        attn_probs=attn_probs,
    )


def forward_instance(state: EncoderState, inst: PretrainInstance, **kw) -> ForwardCache:
    return encode(state, inst.token_ids, inst.s_arr, inst.e_arr, inst.cls_index, **kw)


def encode_backward(
    state: EncoderState,
    cache: ForwardCache,
    dhiddens: np.ndarray,
    grads: dict[str, np.ndarray],
) -> None:
    """Accumulate parameter gradients given d(loss)/d(hiddens)."""
    cfg = state.cfg
    p = state.params
    n = cache.ids.shape[0]
    scale = 1.0 / math.sqrt(2.0 * cfg.d_k)
    dpos_total = np.zeros_like(cache.pos)
    dh = dhiddens

    for l in reversed(range(cfg.n_layers)):
        pre = f"layer.{l}."
        (h_in, qh, kh, vh, probs, probs_used, attn_mask, ctx, ao_mask, ln1, h1, a1, gcache, f2_mask, ln2) = cache.layers[l]

        dsum2, dg2, db2 = layernorm_backward(dh, ln2)
        grads[pre + "ln2.g"] += dg2
        grads[pre + "ln2.b"] += db2
        dh1 = dsum2.copy()
        df2 = dsum2
        if f2_mask is not None:
            df2 = df2 * f2_mask
        grads[pre + "ffn.w2"] += a1.T @ df2
        grads[pre + "ffn.b2"] += df2.sum(axis=0)
        da1 = df2 @ p[pre + "ffn.w2"].T
        df1 = gelu_backward(da1, gcache)
        grads[pre + "ffn.w1"] += h1.T @ df1
        grads[pre + "ffn.b1"] += df1.sum(axis=0)
        dh1 += df1 @ p[pre + "ffn.w1"].T

        dsum1, dg1, db1 = layernorm_backward(dh1, ln1)
        grads[pre + "ln1.g"] += dg1
        grads[pre + "ln1.b"] += db1
        dh_in = dsum1.copy()
        dao = dsum1
        if ao_mask is not None:
            dao = dao * ao_mask
        grads[pre + "attn.wo"] += ctx.T @ dao
        grads[pre + "attn.bo"] += dao.sum(axis=0)
        dctx = dao @ p[pre + "attn.wo"].T
        dctx_h = dctx.reshape(n, cfg.n_h, cfg.d_k).transpose(1, 0, 2)
        dprobs_used = dctx_h @ vh.transpose(0, 2, 1)
        dvh = probs_used.transpose(0, 2, 1) @ dctx_h
        if attn_mask is not None:
            dprobs = dprobs_used * attn_mask
        else:
            dprobs = dprobs_used
        dlogits = softmax_backward(dprobs, probs)
        dpos_total += dlogits
        dqh = (dlogits @ kh) * scale
        dkh = (dlogits.transpose(0, 2, 1) @ qh) * scale
        dq = dqh.transpose(1, 0, 2).reshape(n, cfg.d_h)
        dk = dkh.transpose(1, 0, 2).reshape(n, cfg.d_h)
        dv = dvh.transpose(1, 0, 2).reshape(n, cfg.d_h)
        grads[pre + "attn.wq"] += h_in.T @ dq
        grads[pre + "attn.bq"] += dq.sum(axis=0)
        grads[pre + "attn.wk"] += h_in.T @ dk
        grads[pre + "attn.bk"] += dk.sum(axis=0)
        grads[pre + "attn.wv"] += h_in.T @ dv
        grads[pre + "attn.bv"] += dv.sum(axis=0)
        dh_in += dq @ p[pre + "attn.wq"].T
        dh_in += dk @ p[pre + "attn.wk"].T
        dh_in += dv @ p[pre + "attn.wv"].T
        dh = dh_in

    x_emb, ln0, emb_mask = cache.emb
    if emb_mask is not None:
        dh = dh * emb_mask
    dh_pre, dg0, db0 = layernorm_backward(dh, ln0)
    grads["emb.ln.g"] += dg0
    grads["emb.ln.b"] += db0
    grads["emb.up"] += x_emb.T @ dh_pre
    dx_emb = dh_pre @ p["emb.up"].T
    np.add.at(grads["emb.tok"], cache.ids, dx_emb)

    lpa_grads = position_scores_backward(state.lpa_view(), cache.lpa_cache, dpos_total)
    for name, g in lpa_grads.items():
        grads["lpa." + name] += g


# -- heads and losses -------------------------------------------------------


def msp_logits(state: EncoderState, hiddens: np.ndarray, indices: Sequence[int]):
    p = state.params
    hsel = hiddens[np.asarray(indices, dtype=np.int64)]
    proj = hsel @ p["msp.w"] + p["msp.b"]
    logits = proj @ p["emb.tok"].T + p["msp.bias"]
    return logits, (hsel, proj)


def _ce(logits: np.ndarray, labels: np.ndarray):
    z = logits - logits.max(axis=-1, keepdims=True)
    ez = np.exp(z)
    zsum = ez.sum(axis=-1, keepdims=True)
    rows = np.arange(len(labels))
    loss = -(z[rows, labels] - np.log(zsum[:, 0])).mean()
    dlogits = ez / zsum
    dlogits[rows, labels] -= 1.0
    dlogits /= len(labels)
    return float(loss), dlogits


def msp_loss(state: EncoderState, hiddens: np.ndarray, targets) -> float:
    """Mean cross-entropy over target positions; 0.0 when no targets."""
    if not targets:
        return 0.0
    idx = [i for i, _ in targets]
    y = np.asarray([t for _, t in targets], dtype=np.int64)
    logits, _ = msp_logits(state, hiddens, idx)
    loss, _ = _ce(logits, y)
    return loss


def sop_loss(state: EncoderState, cls_vec: np.ndarray, label: int) -> float:
    p = state.params
    logits = cls_vec @ p["sop.w"] + p["sop.b"]
    loss, _ = _ce(logits[None, :], np.asarray([label]))
    return loss


def classify_cls(cls_vec: np.ndarray, weight: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """Affine map plus softmax over classes (downstream CLS heads)."""
    return softmax(cls_vec @ weight + bias)


@dataclass
class LossParts:
    total: float
    msp: float
    sop: float
    n_targets: int
    msp_correct: int

    @property
    def msp_acc(self) -> float:
        return self.msp_correct / self.n_targets if self.n_targets else 0.0


def loss_and_grads(
    state: EncoderState,
    inst: PretrainInstance,
    train: bool = False,
    rng: np.random.Generator | None = None,
    include_msp: bool = True,
    include_sop: bool = True,
    grads: dict[str, np.ndarray] | None = None,
):
    """Total loss, metrics, and (accumulated) parameter gradients."""
    p = state.params
    cache = forward_instance(state, inst, train=train, rng=rng)
    hiddens = cache.hiddens
    if grads is None:
        grads = state.zero_grads()
    dhiddens = np.zeros_like(hiddens)

    msp_val = 0.0
    n_targets = 0
    n_correct = 0
    if include_msp and inst.msp_targets:
        idx = [i for i, _ in inst.msp_targets]
        labels = np.asarray([t for _, t in inst.msp_targets], dtype=np.int64)
        logits, (hsel, proj) = msp_logits(state, hiddens, idx)
        msp_val, dlogits = _ce(logits, labels)
        n_targets = len(labels)
        n_correct = int((logits.argmax(axis=-1) == labels).sum())
        grads["msp.bias"] += dlogits.sum(axis=0)
        dproj = dlogits @ p["emb.tok"]
        grads["emb.tok"] += dlogits.T @ proj
        grads["msp.w"] += hsel.T @ dproj
        grads["msp.b"] += dproj.sum(axis=0)
        dhsel = dproj @ p["msp.w"].T
        np.add.at(dhiddens, np.asarray(idx, dtype=np.int64), dhsel)

    sop_val = 0.0
    if include_sop:
        cls_vec = hiddens[inst.cls_index]
        logits_s = cls_vec @ p["sop.w"] + p["sop.b"]
        sop_val, dlogits_s = _ce(logits_s[None, :], np.asarray([inst.sop_label]))
        grads["sop.w"] += np.outer(cls_vec, dlogits_s[0])
        grads["sop.b"] += dlogits_s[0]
        dhiddens[inst.cls_index] += dlogits_s[0] @ p["sop.w"].T

    encode_backward(state, cache, dhiddens, grads)
    parts = LossParts(
        total=msp_val + sop_val,
        msp=msp_val,
        sop=sop_val,
        n_targets=n_targets,
        msp_correct=n_correct,
    )
    return parts, grads


def evaluate(state: EncoderState, instances) -> dict[str, float]:
    """Eval-mode losses and masked-prediction accuracy over instances."""
    tot_msp = tot_sop = 0.0
    n_inst = 0
    n_targets = 0
    n_correct = 0
    for inst in instances:
        cache = forward_instance(state, inst)
        if inst.msp_targets:
            idx = [i for i, _ in inst.msp_targets]
            labels = np.asarray([t for _, t in inst.msp_targets], dtype=np.int64)
            logits, _ = msp_logits(state, cache.hiddens, idx)
            loss, _ = _ce(logits, labels)
            tot_msp += loss
            n_targets += len(labels)
            n_correct += int((logits.argmax(axis=-1) == labels).sum())
        tot_sop += sop_loss(state, cache.hiddens[inst.cls_index], inst.sop_label)
        n_inst += 1
    return {
        "msp_loss": tot_msp / max(n_inst, 1),
        "sop_loss": tot_sop / max(n_inst, 1),
        "msp_acc": n_correct / max(n_targets, 1),
        "n_targets": float(n_targets),
    }


def mean_received_attention(state: EncoderState, inst: PretrainInstance):
    """Mean attention each lattice token receives over all layers/heads.

    CLS/SEP rows and columns are excluded and the remaining rows are
    renormalized, so the reported scores sum to 1.
    """
    cache = forward_instance(state, inst, keep_attn=True)
    avg = np.mean([p.mean(axis=0) for p in cache.attn_probs], axis=0)
    specials = inst.special_indices()
    keep = [i for i in range(len(inst)) if i not in specials]
    sub = avg[np.ix_(keep, keep)]
    sub = sub / sub.sum(axis=-1, keepdims=True)
    return keep, sub.mean(axis=0)


# -- finite-difference verification -----------------------------------------


def grad_check(
    state: EncoderState,
    inst: PretrainInstance,
    epsilon: float = 1e-5,
    samples_per_tensor: int = 16,
    rng: np.random.Generator | None = None,
    denom_floor: float = 1e-6,
) -> dict[str, float]:
    """Max relative error of analytic vs central-difference gradients.

    Samples entries per tensor (all entries for small tensors); dropout
    must stay off so the loss is a deterministic function of parameters.
    The denominator floor keeps numerically-zero gradients (for example
    never-indexed distance buckets) from turning central-difference
    roundoff into spurious relative error.
    """
    rng = rng or np.random.default_rng(0)
    _, grads = loss_and_grads(state, inst, train=False)

    def loss_of() -> float:
        parts, _ = loss_and_grads(state, inst, train=False)
        return parts.total

    report: dict[str, float] = {}
    for name, tensor in state.params.items():
        flat = tensor.reshape(-1)
        size = flat.shape[0]
        if size <= samples_per_tensor:
            picks = np.arange(size)
        else:
            picks = rng.choice(size, size=samples_per_tensor, replace=False)
        worst = 0.0
        gflat = grads[name].reshape(-1)
        for j in picks:
            orig = flat[j]
            flat[j] = orig + epsilon
            up = loss_of()
            flat[j] = orig - epsilon
            down = loss_of()
            flat[j] = orig
            fd = (up - down) / (2.0 * epsilon)
            g = gflat[j]
            worst = max(worst, abs(fd - g) / max(abs(fd) + abs(g), denom_floor))
        report[name] = worst
    return report
