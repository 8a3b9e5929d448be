"""Adam training loop for the desk-scale encoder.

Single-threaded and deterministic under a fixed seed: batches are drawn
from the instance list with the loop's own generator, gradients average
over the batch, and a global-norm clip keeps early steps stable.
Metrics stream to a line-delimited JSON log.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import lpa
from .checkpoint import load_tensors, save_tensors
from .encoder import EncoderConfig, EncoderState, LossParts, loss_and_grads
from .errors import ConfigError

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-6
TOY_PEAK_LR = 1e-3


@dataclass
class AdamState:
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)
    t: int = 0

    @classmethod
    def for_state(cls, state: EncoderState) -> "AdamState":
        return cls(
            m={k: np.zeros_like(p) for k, p in state.params.items()},
            v={k: np.zeros_like(p) for k, p in state.params.items()},
        )


def clip_global_norm(grads: dict[str, np.ndarray], max_norm: float) -> float:
    total = float(np.sqrt(sum(float((g * g).sum()) for g in grads.values())))
    if max_norm > 0 and total > max_norm:
        scale = max_norm / total
        for g in grads.values():
            g *= scale
    return total


def adam_step(
    state: EncoderState,
    grads: dict[str, np.ndarray],
    opt: AdamState,
    lr: float,
) -> None:
    opt.t += 1
    bc1 = 1.0 - ADAM_BETA1**opt.t
    bc2 = 1.0 - ADAM_BETA2**opt.t
    for k, p in state.params.items():
        g = grads[k]
        opt.m[k] = ADAM_BETA1 * opt.m[k] + (1.0 - ADAM_BETA1) * g
        opt.v[k] = ADAM_BETA2 * opt.v[k] + (1.0 - ADAM_BETA2) * g * g
        p -= lr * (opt.m[k] / bc1) / (np.sqrt(opt.v[k] / bc2) + ADAM_EPS)


def train(
    state: EncoderState,
    instances: list,
    steps: int,
    seed: int = 0,
    batch_size: int = 8,
    lr: float = TOY_PEAK_LR,
    max_grad_norm: float = 1.0,
    opt: AdamState | None = None,
    metrics_path=None,
    log_every: int = 10,
) -> list[dict]:
    """Run `steps` optimizer steps; returns the metrics records."""
    if not instances:
        raise ConfigError("no training instances")
    opt = opt or AdamState.for_state(state)
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(0xAD,)))
    records = []
    sink = open(metrics_path, "a", encoding="utf-8") if metrics_path else None
    try:
        for _ in range(steps):
            batch_idx = rng.integers(0, len(instances), size=min(batch_size, len(instances)))
            grads = state.zero_grads()
            tot = LossParts(0.0, 0.0, 0.0, 0, 0)
            for bi in batch_idx:
                parts, _ = loss_and_grads(
                    state, instances[int(bi)], train=True, rng=rng, grads=grads
                )
                tot = LossParts(
                    tot.total + parts.total,
                    tot.msp + parts.msp,
                    tot.sop + parts.sop,
                    tot.n_targets + parts.n_targets,
                    tot.msp_correct + parts.msp_correct,
                )
            nb = len(batch_idx)
            for g in grads.values():
                g /= nb
            clip_global_norm(grads, max_grad_norm)
            adam_step(state, grads, opt, lr)
            state.step += 1
            if state.step % log_every == 0 or state.step == 1:
                rec = {
                    "step": state.step,
                    "msp_loss": tot.msp / nb,
                    "sop_loss": tot.sop / nb,
                    "msp_acc": tot.msp_correct / max(tot.n_targets, 1),
                }
                records.append(rec)
                if sink:
                    sink.write(json.dumps(rec, sort_keys=True) + "\n")
                    sink.flush()
    finally:
        if sink:
            sink.close()
    return records


# -- checkpoints -------------------------------------------------------------


def save_checkpoint(path, state: EncoderState, opt: AdamState | None = None) -> None:
    """LPA tensors under their documented names plus encoder tensors."""
    tensors: dict[str, np.ndarray] = {}
    tensors.update(lpa.state_dict(state.lpa_view()))
    for k, p in state.params.items():
        if not k.startswith("lpa."):
            tensors[k] = p
    if opt is not None:
        for k in state.params:
            tensors[f"opt.m.{k}"] = opt.m[k]
            tensors[f"opt.v.{k}"] = opt.v[k]
    meta = {
        "step": state.step,
        "opt_t": opt.t if opt else 0,
        "config": {
            "n_layers": state.cfg.n_layers,
            "d_h": state.cfg.d_h,
            "d_e": state.cfg.d_e,
            "d_ffn": state.cfg.d_ffn,
            "n_h": state.cfg.n_h,
            "vocab_size": state.cfg.vocab_size,
            "l_max": state.cfg.l_max,
            "dropout": state.cfg.dropout,
            "attn_dropout": state.cfg.attn_dropout,
        },
    }
    save_tensors(path, tensors, meta)


def load_checkpoint(path) -> tuple[EncoderState, AdamState | None]:
    tensors, meta = load_tensors(path)
    cfg = EncoderConfig(**meta["config"])
    lp = lpa.from_state_dict(
        {k: v for k, v in tensors.items() if not ("." in k and k.split(".")[0] in ("opt",)) }
    )
    params: dict[str, np.ndarray] = {
        "lpa.p_s": lp.p_s,
        "lpa.p_e": lp.p_e,
        "lpa.w_q": lp.w_q,
        "lpa.w_k": lp.w_k,
        "lpa.b": lp.b,
        "lpa.r": lp.r,
        "lpa.cls_q": lp.cls_q,
        "lpa.cls_k": lp.cls_k,
    }
    for k, v in tensors.items():
        if k.startswith("opt.") or k in ("p_s", "p_e"):
            continue
        head = k.split(".")[0]
        if head in ("w_q", "w_k", "b", "r", "cls_q", "cls_k"):
            continue
        params[k] = v.astype(np.float64)
    state = EncoderState(cfg=cfg, params=params, step=int(meta.get("step", 0)))
    opt = None
    if any(k.startswith("opt.m.") for k in tensors):
        opt = AdamState(
            m={k: tensors[f"opt.m.{k}"].astype(np.float64) for k in params},
            v={k: tensors[f"opt.v.{k}"].astype(np.float64) for k in params},
            t=int(meta.get("opt_t", 0)),
        )
    return state, opt
