"""Command-line surface: vocabulary, lattices, instances, toy training,
and attention summaries.

Exit codes: 0 success, 2 input error, 3 config/shape error. Every
command is deterministic under fixed (inputs, config, seed); manifests
echo the config and input digests. A key=value config file supplies
defaults that explicit flags override; WORDLATTICE_LOG sets verbosity.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import pipeline
from .encoder import EncoderConfig, grad_check, mean_received_attention
from .errors import (
    ConfigError,
    EmptyInput,
    InvalidSpan,
    PositionOverflow,
    ShapeError,
)
from .instances import encode_single, read_instances, write_instances
from .lattice import build_lattice
from .matcher import compile_matcher, default_backend
from .packing import PHASE_PRESETS, PackConfig, PackStats, pack_to_budget
from .trainer import TOY_PEAK_LR, load_checkpoint, save_checkpoint, train
from .vocab import Vocabulary, build_vocabulary
from . import encoder as encoder_mod

log = logging.getLogger("wordlattice")


def _load_config_file(path) -> dict[str, str]:
    cfg: dict[str, str] = {}
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"config line is not key=value: {line!r}")
            key, val = line.split("=", 1)
            cfg[key.strip().replace("-", "_")] = val.strip()
    return cfg


def _resolve(args, name: str, default=None, cast=None):
    """Flag value, else config-file value, else default."""
    val = getattr(args, name, None)
    if val is None and getattr(args, "_file_cfg", None):
        val = args._file_cfg.get(name)
    if val is None:
        return default
    if cast is not None and isinstance(val, str):
        return cast(val)
    return val


def _read_word_freq(path) -> dict[str, int]:
    """Lines of `surface<TAB>freq`, `surface freq`, or bare `surface`."""
    freqs: dict[str, int] = {}
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            parts = line.split("\t") if "\t" in line else line.split()
            surface = parts[0]
            freq = int(parts[1]) if len(parts) > 1 else 1
            freqs[surface] = freqs.get(surface, 0) + freq
    return freqs


def cmd_build_vocab(args) -> int:
    corpus_path = _resolve(args, "input")
    out = _resolve(args, "output")
    if not corpus_path or not out:
        raise ConfigError("build-vocab requires --input and --output")
    max_words = _resolve(args, "max_words", 0, int)
    stats: dict = {}
    docs = pipeline.ingest_corpus(corpus_path, stats)
    corpus = [s for doc in docs for s in doc]
    words = _read_word_freq(args.words) if args.words else None
    pieces = _read_word_freq(args.pieces) if args.pieces else None
    vocab = build_vocabulary(
        corpus,
        max_words=max_words,
        words=words,
        pieces=list(pieces.items()) if pieces else None,
        stats=stats,
    )
    vocab.save(out)
    pipeline.write_manifest(
        str(out) + ".summary.json",
        {
            "command": "build-vocab",
            "config": {"max_words": max_words},
            "counts_by_flag": vocab.counts_by_flag(),
            "entries": len(vocab),
            "inputs": pipeline.input_digests(corpus_path),
            "stats": stats,
        },
    )
    log.info("vocabulary: %d entries -> %s", len(vocab), out)
    return 0


def cmd_lattice(args) -> int:
    vocab_path = _resolve(args, "vocab")
    if not vocab_path:
        raise ConfigError("lattice requires --vocab")
    vocab = Vocabulary.load(vocab_path)
    matcher = compile_matcher(vocab)
    inp = _resolve(args, "input")
    out = _resolve(args, "output")
    if inp == "-" or out == "-":
        # streaming mode: exactly one record (or inline error) per line
        for line in sys.stdin:
            line = line.rstrip("\n")
            try:
                rec = build_lattice(line, matcher, vocab).to_json()
            except EmptyInput:
                rec = json.dumps({"error": "empty_input"})
            sys.stdout.write(rec + "\n")
            sys.stdout.flush()
        return 0
    if not inp or not out:
        raise ConfigError("lattice requires --input and --output (or '-')")
    stats: dict = {}
    lines = list(pipeline.iter_lines(inp, stats))
    shards = _resolve(args, "shards", 1, int)
    ranges = pipeline.shard_ranges(len(lines), shards)
    skipped = 0
    written = 0
    for i, (a, b) in enumerate(ranges):
        path = pipeline.shard_path(out, i, shards)
        with open(path, "w", encoding="utf-8") as f:
            for line in lines[a:b]:
                try:
                    f.write(build_lattice(line, matcher, vocab).to_json() + "\n")
                    written += 1
                except EmptyInput:
                    skipped += 1
    pipeline.write_manifest(
        str(out) + ".manifest.json",
        {
            "command": "lattice",
            "config": {"shards": shards, "matcher_backend": matcher.backend},
            "inputs": pipeline.input_digests(inp),
            "records": written,
            "skipped_empty": skipped,
            "stats": stats,
        },
    )
    log.info("lattice: %d records (%d empty skipped)", written, skipped)
    return 0


def _pack_config(args) -> PackConfig:
    phase = _resolve(args, "phase", None, int)
    mask_ratio = _resolve(args, "mask_ratio", 0.15, float)
    seed = _resolve(args, "seed", 0, int)
    masking = _resolve(args, "masking", "msp")
    if phase is not None:
        return PackConfig.for_phase(
            phase, mask_ratio=mask_ratio, seed=seed, masking=masking
        )
    return PackConfig(
        char_budget=_resolve(args, "char_budget", 128, int),
        token_cap=_resolve(args, "token_cap", 173, int),
        mask_ratio=mask_ratio,
        seed=seed,
        masking=masking,
    )


def cmd_make_instances(args) -> int:
    vocab_path = _resolve(args, "vocab")
    inp = _resolve(args, "input")
    out = _resolve(args, "output")
    if not vocab_path or not inp or not out:
        raise ConfigError("make-instances requires --vocab, --input, --output")
    cfg = _pack_config(args)
    fmt = _resolve(args, "record_format", "jsonl")
    vocab = Vocabulary.load(vocab_path)
    matcher = compile_matcher(vocab)
    stats_in: dict = {}
    docs = pipeline.ingest_corpus(inp, stats_in)
    shards = _resolve(args, "shards", 1, int)
    ranges = pipeline.shard_ranges(len(docs), shards)
    stats = PackStats()
    shard_counts = []
    for i, (a, b) in enumerate(ranges):
        path = pipeline.shard_path(out, i, shards)
        insts = list(
            pack_to_budget(docs[a:b], matcher, vocab, cfg, stats, doc_offset=a)
        )
        over = [len(x) for x in insts if len(x) > cfg.token_cap]
        assert not over, f"token cap violated: {over}"
        n = write_instances(path, insts, fmt=fmt)
        shard_counts.append(n)
    pipeline.write_manifest(
        str(out) + ".manifest.json",
        {
            "command": "make-instances",
            "config": {
                "char_budget": cfg.char_budget,
                "token_cap": cfg.token_cap,
                "mask_ratio": cfg.mask_ratio,
                "seed": cfg.seed,
                "masking": cfg.masking,
                "record_format": fmt,
                "shards": shards,
            },
            "inputs": pipeline.input_digests(inp),
            "records": sum(shard_counts),
            "records_per_shard": shard_counts,
            "mask_rate": round(stats.mask_rate, 6),
            "token_histogram": {
                str(k): v for k, v in sorted(stats.token_histogram.items())
            },
            "stats": {
                "documents": len(docs),
                "split_long_sentences": stats.split_long_sentences,
                "skipped_tiny": stats.skipped_tiny,
                "skipped_overflow": stats.skipped_overflow,
                "total_tokens": stats.total_tokens,
                "masked_tokens": stats.masked_tokens,
            },
        },
    )
    log.info(
        "instances: %d records, mask rate %.4f", sum(shard_counts), stats.mask_rate
    )
    return 0


def cmd_train_toy(args) -> int:
    inst_path = _resolve(args, "instances")
    vocab_path = _resolve(args, "vocab")
    out = _resolve(args, "output")
    if not inst_path or not vocab_path:
        raise ConfigError("train-toy requires --instances and --vocab")
    instances = []
    p = Path(inst_path)
    files = sorted(q for q in p.rglob("*") if q.is_file()) if p.is_dir() else [p]
    for f in files:
        if f.suffix == ".json":
            continue
        instances.extend(read_instances(f))
    vocab = Vocabulary.load(vocab_path)
    seed = _resolve(args, "seed", 0, int)
    if args.resume:
        state, opt = load_checkpoint(args.resume)
    else:
        preset = _resolve(args, "preset", "toy")
        dropout = _resolve(args, "dropout", None, float)
        overrides = {} if dropout is None else {"dropout": dropout, "attn_dropout": dropout}
        cfg = EncoderConfig.preset(preset, vocab_size=len(vocab), **overrides)
        state = encoder_mod.init_state(
            cfg, np.random.default_rng(np.random.SeedSequence(seed))
        )
        opt = None
    if args.grad_check:
        if not instances:
            raise ConfigError("grad check needs at least one instance")
        report = grad_check(state, instances[0], rng=np.random.default_rng(seed))
        worst = max(report.values())
        for name in sorted(report):
            print(f"{name}\t{report[name]:.3e}")
        print(f"max\t{worst:.3e}")
        return 0
    steps = _resolve(args, "steps", 200, int)
    records = train(
        state,
        instances,
        steps=steps,
        seed=seed,
        batch_size=_resolve(args, "batch_size", 8, int),
        lr=_resolve(args, "lr", TOY_PEAK_LR, float),
        opt=opt,
        metrics_path=_resolve(args, "metrics"),
    )
    if out:
        from .trainer import AdamState

        save_checkpoint(out, state, opt or AdamState.for_state(state))
    if records:
        last = records[-1]
        log.info(
            "step %d: msp %.4f sop %.4f acc %.3f",
            last["step"],
            last["msp_loss"],
            last["sop_loss"],
            last["msp_acc"],
        )
    return 0


def cmd_attn_summary(args) -> int:
    ckpt = _resolve(args, "checkpoint")
    vocab_path = _resolve(args, "vocab")
    text = _resolve(args, "text")
    if not ckpt or not vocab_path or text is None:
        raise ConfigError("attn-summary requires --checkpoint, --vocab, --text")
    state, _ = load_checkpoint(ckpt)
    vocab = Vocabulary.load(vocab_path)
    matcher = compile_matcher(vocab)
    lat = build_lattice(text, matcher, vocab)
    inst = encode_single(lat)
    keep, received = mean_received_attention(state, inst)
    out = _resolve(args, "output")
    sink = open(out, "w", encoding="utf-8") if out else sys.stdout
    try:
        sink.write("token\tspan\treceived\n")
        for pos, score in zip(keep, received):
            tok = lat.tokens[pos - 1]
            sink.write(f"{tok.surface}\t({tok.s},{tok.e})\t{score:.6f}\n")
    finally:
        if out:
            sink.close()
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="wordlattice",
        description="Multi-granularity word-lattice toolkit",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="key=value config file; flags override")
        p.add_argument("--seed", type=int, default=None)

    p = sub.add_parser("build-vocab", help="build a vocabulary file")
    common(p)
    p.add_argument("--input", help="corpus file or directory")
    p.add_argument("--output", help="vocabulary file to write")
    p.add_argument("--words", help="word-frequency file (surface<TAB>freq)")
    p.add_argument("--pieces", help="word-piece inventory file")
    p.add_argument("--max-words", type=int, default=None, dest="max_words")
    p.set_defaults(func=cmd_build_vocab)

    p = sub.add_parser("lattice", help="emit one lattice record per input line")
    common(p)
    p.add_argument("--vocab", help="vocabulary file")
    p.add_argument("--input", help="text file, directory, or '-' for stdin")
    p.add_argument("--output", help="records file or '-' for stdout")
    p.add_argument("--shards", type=int, default=None)
    p.set_defaults(func=cmd_lattice)

    p = sub.add_parser("make-instances", help="pack masked pre-training instances")
    common(p)
    p.add_argument("--vocab")
    p.add_argument("--input")
    p.add_argument("--output")
    p.add_argument("--phase", type=int, choices=sorted(PHASE_PRESETS), default=None)
    p.add_argument("--char-budget", type=int, default=None, dest="char_budget")
    p.add_argument("--token-cap", type=int, default=None, dest="token_cap")
    p.add_argument("--mask-ratio", type=float, default=None, dest="mask_ratio")
    p.add_argument("--masking", choices=("msp", "random"), default=None)
    p.add_argument("--shards", type=int, default=None)
    p.add_argument(
        "--record-format",
        choices=("jsonl", "binary"),
        default=None,
        dest="record_format",
    )
    p.set_defaults(func=cmd_make_instances)

    p = sub.add_parser("train-toy", help="train the desk-scale encoder")
    common(p)
    p.add_argument("--instances", help="instance file or directory")
    p.add_argument("--vocab")
    p.add_argument("--output", help="checkpoint path")
    p.add_argument("--metrics", help="metrics JSONL path")
    p.add_argument("--preset", choices=sorted(encoder_mod.PRESETS), default=None)
    p.add_argument("--steps", type=int, default=None)
    p.add_argument("--batch-size", type=int, default=None, dest="batch_size")
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--dropout", type=float, default=None)
    p.add_argument("--resume", help="checkpoint to continue from")
    p.add_argument("--grad-check", action="store_true", dest="grad_check")
    p.set_defaults(func=cmd_train_toy)

    p = sub.add_parser("attn-summary", help="mean received attention per token")
    common(p)
    p.add_argument("--checkpoint")
    p.add_argument("--vocab")
    p.add_argument("--text", help="one sentence to analyze")
    p.add_argument("--output", help="write the table here instead of stdout")
    p.set_defaults(func=cmd_attn_summary)

    return ap


def main(argv=None) -> int:
    level = os.environ.get("WORDLATTICE_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING))
    ap = build_parser()
    args = ap.parse_args(argv)
    if getattr(args, "config", None):
        try:
            args._file_cfg = _load_config_file(args.config)
        except FileNotFoundError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
    else:
        args._file_cfg = {}
    try:
        return args.func(args)
    except (FileNotFoundError, IsADirectoryError, PermissionError, EmptyInput) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ConfigError, ShapeError, PositionOverflow, InvalidSpan, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
