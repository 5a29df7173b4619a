"""``capkit`` command line: one binary, one subcommand per workflow step.

Reports go to stdout as JSON.  Exit status is 0 on success, 1 when inputs
fail validation (missing files, malformed data, rejected annotations) and
2 on usage errors.

``--config FILE`` names a JSON object whose keys become option defaults.
Top-level keys apply to any subcommand that has the option; a nested object
keyed by subcommand name (e.g. ``{"train": {"lr": 0.05}}``) applies only
there.  Explicit flags always win.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import CapkitError, ValidationError

SEED_MAX = 2**64 - 1
THREADS_ENV = "CAPKIT_THREADS"


class InputError(CapkitError, ValueError):
    """Bad input detected by the CLI itself (missing path, bad config, ...)."""


def seed_arg(text: str) -> int:
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}") from None
    if not 0 <= v <= SEED_MAX:
        raise argparse.ArgumentTypeError(f"seed must fit in 64 unsigned bits, got {v}")
    return v


def positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def thread_count() -> int:
    raw = os.environ.get(THREADS_ENV, "1").strip() or "1"
    try:
        n = int(raw)
    except ValueError:
        raise InputError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    if n < 0:
        raise InputError(f"{THREADS_ENV} must be >= 0")
    return n or (os.cpu_count() or 1)


def require(*paths) -> None:
    for p in paths:
        if p is not None and not Path(p).exists():
            raise InputError(f"no such file or directory: {p}")


def emit(obj) -> None:
    sys.stdout.write(json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False) + "\n")


# ------------------------------------------------------------ subcommands


def _metric_config(args):
    from .metrics import MetricConfig, SynonymTable

    synonyms = None
    if args.synonyms:
        require(args.synonyms)
        synonyms = SynonymTable.load(args.synonyms)
    return MetricConfig(smooth_bleu=args.smooth_bleu, rouge_beta=args.rouge_beta, stemmer=not args.no_stem, synonyms=synonyms)


def cmd_score(args) -> int:
    from .metrics import evaluate, load_pairs

    require(args.cand, args.refs)
    pairs = load_pairs(args.cand, args.refs)
    report = evaluate(pairs, _metric_config(args))
    emit({**report.as_dict(), "pairs": len(pairs)})
    return 0


def cmd_augment(args) -> int:
    from .augment import AugmentationPlan, apply_plan, grid_plans
    from .frames import iter_video_dirs, read_video_dir, write_video_dir

    if args.grid:
        if args.plan or args.input:
            raise InputError("--grid cannot be combined with --plan/--in")
        plans = grid_plans(args.grid, args.seed)
        listing = [{"name": p.name, "transforms": p.to_json()} for p in plans]
        if args.out:
            out = Path(args.out)
            out.mkdir(parents=True, exist_ok=True)
            for i, (plan, entry) in enumerate(zip(plans, listing)):
                path = out / f"{i:02d}_{plan.name}.json"
                plan.dump(path)
                entry["file"] = str(path)
        emit({"grid": args.grid, "plans": listing})
        return 0
    if not (args.plan and args.input and args.out):
        raise InputError("applying a plan needs --plan, --in and --out (or use --grid)")
    require(args.plan, args.input)
    plan = AugmentationPlan.load(args.plan)
    dirs = iter_video_dirs(args.input)
    if not dirs:
        raise InputError(f"no video frame directories under {args.input}")
    threads = thread_count()
    single = any(Path(args.input).glob("*.ppm"))  # --in is itself one video
    n_frames = 0
    for d in dirs:
        video = apply_plan(read_video_dir(d), plan, threads)
        target = Path(args.out) if single else Path(args.out) / d.name
        write_video_dir(target, video)
        n_frames += len(video.frames)
    emit({"plan": plan.name, "videos": len(dirs), "frames": n_frames, "out": str(args.out)})
    return 0


def cmd_features_extract(args) -> int:
    from .features import FEATURE_SUFFIX, stub_extract, write_features
    from .frames import iter_video_dirs, read_video_dir

    require(args.input)
    dirs = iter_video_dirs(args.input)
    if not dirs:
        raise InputError(f"no video frame directories under {args.input}")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for d in dirs:
        seq = stub_extract(read_video_dir(d), stride=args.stride, dim=args.dim)
        path = out / f"{seq.video_id}{FEATURE_SUFFIX}"
        write_features(path, seq)
        written.append({"video_id": seq.video_id, "vectors": len(seq), "file": str(path)})
    emit({"dim": args.dim, "stride": args.stride, "videos": written})
    return 0


def _corpus_captions(path, split=None):
    from .cleanse import read_corpus

    return [e for e in read_corpus(path) if split is None or e.split == split]


def _features_for(features: dict, entries, what: str):
    missing = [e.video_id for e in entries if e.video_id not in features]
    if missing:
        raise InputError(f"{what}: no feature file for video(s) {missing[:5]}")
    return [features[e.video_id] for e in entries]


def cmd_train(args) -> int:
    from .features import read_feature_dir
    from .metrics import MetricConfig
    from .seq2seq import TrainConfig, init_params, save_checkpoint, sgd_train
    from .text import build_vocab, load_embeddings, tokenize

    require(args.features, args.captions, args.val_captions, args.embeddings)
    features = read_feature_dir(args.features)
    train_entries = _corpus_captions(args.captions)
    val_entries = _corpus_captions(args.val_captions)
    train = []
    for e, f in zip(train_entries, _features_for(features, train_entries, "training")):
        train.extend((f, tokenize(c, attach_tags=True)) for c in e.captions)
    val = [
        (f, [tokenize(c) for c in e.captions])
        for e, f in zip(val_entries, _features_for(features, val_entries, "validation"))
    ]
    vocab = build_vocab([cap for _, cap in train])
    emb = load_embeddings(args.embeddings, vocab, args.oov_seed, dim=args.embed_dim)
    dims = {f.dim for f, _ in train} | {f.dim for f, _ in val}
    if len(dims) != 1:
        raise InputError(f"feature files disagree on dimension: {sorted(dims)}")
    params = init_params(vocab, emb, dims.pop(), args.hidden, seed=args.seed)
    config = TrainConfig(
        lr=args.lr,
        batch_size=args.batch,
        patience=args.patience,
        seed=args.seed,
        max_epochs=args.max_epochs,
        max_len=args.max_len,
        metrics=MetricConfig(),
    )
    best, log = sgd_train(params, train, val, config)
    save_checkpoint(args.out, best)
    best_epoch = max(log, key=lambda e: (e.val_meteor, -e.epoch))
    emit(
        {
            "model": str(args.out),
            "vocab_size": len(vocab),
            "oov_words": len(emb.oov_tokens),
            "epochs": len(log),
            "best_epoch": best_epoch.epoch,
            "best_val_meteor": best_epoch.val_meteor,
            "log": [{"epoch": e.epoch, "loss": e.loss, "val_meteor": e.val_meteor} for e in log],
        }
    )
    return 0


def cmd_decode(args) -> int:
    from .features import read_feature_dir
    from .seq2seq import greedy_decode, load_checkpoint

    require(args.model, args.features)
    params = load_checkpoint(args.model)
    rows = []
    for vid, seq in read_feature_dir(args.features).items():
        rows.append({"video_id": vid, "caption": greedy_decode(params, seq, args.max_len).text()})
    text = "".join(json.dumps(r, ensure_ascii=False, sort_keys=True) + "\n" for r in rows)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        emit({"videos": len(rows), "out": str(args.out)})
    else:
        sys.stdout.write(text)
    return 0


def _label_files(items):
    out = []
    for item in items:
        label, sep, path = item.partition("=")
        if not sep or not label or not path:
            raise InputError(f"--features expects LABEL=FILE, got {item!r}")
        require(path)
        out.append((label, path))
    return out


def cmd_tsne(args) -> int:
    from .analysis import LabeledPoints, separation_report, tsne, write_svg
    from .features import read_features

    points, labels = [], []
    for label, path in _label_files(args.features):
        seq = read_features(path)
        points.append(seq.vectors.astype(np.float64))
        labels.extend([label] * len(seq))
    dims = {p.shape[1] for p in points}
    if len(dims) != 1:
        raise InputError(f"feature files disagree on dimension: {sorted(dims)}")
    data = LabeledPoints(np.vstack(points), labels)
    if not 1.0 < args.perplexity < len(data):
        raise InputError(f"perplexity must lie in (1, {len(data)})")
    if not 1 <= args.k < len(data):
        raise InputError(f"k must lie in [1, {len(data)})")
    emb = tsne(data.points, args.perplexity, args.iters, args.seed)
    if args.out:
        with open(args.out, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["label", "x", "y"])
            for lab, (x, y) in zip(labels, emb.coords):
                w.writerow([lab, repr(float(x)), repr(float(y))])
    if args.svg:
        write_svg(args.svg, emb.coords, labels)
    report = separation_report(data, args.k)
    emit({**report.as_dict(), "points": len(data), "final_kl": float(emb.kl_trace[-1])})
    return 0


def cmd_cleanse_stats(args) -> int:
    from .cleanse import error_stats, read_records

    require(args.records, args.corpus)
    if (args.corpus is None) == (args.total is None):
        raise InputError("give exactly one of --corpus or --total")
    records = read_records(args.records)
    total = args.total
    if args.corpus:
        entries = _corpus_captions(args.corpus, args.split)
        total = sum(len(e.captions) for e in entries)
        ids = {e.video_id for e in entries}
        records = [r for r in records if r.video_id in ids]
    emit(error_stats(records, total).as_dict())
    return 0


def cmd_cleanse_apply(args) -> int:
    from .cleanse import apply_corrections, read_corpus, read_records, write_corpus

    require(args.corpus, args.records)
    corpus = read_corpus(args.corpus)
    fixed = apply_corrections(corpus, read_records(args.records))
    write_corpus(args.out, fixed)
    changed = sum(a != b for e, f in zip(corpus, fixed) for a, b in zip(e.captions, f.captions))
    emit({"changed_captions": changed, "videos": len(fixed), "out": str(args.out)})
    return 0


def cmd_human_perf(args) -> int:
    from .cleanse import human_performance

    require(args.corpus)
    entries = _corpus_captions(args.corpus, args.split)
    if not entries:
        raise InputError(f"no videos with split {args.split!r} in {args.corpus}")
    hp = human_performance(entries, args.rounds, _metric_config(args), threads=thread_count())
    emit(hp.as_dict())
    return 0


# ------------------------------------------------------------ parser


def _metric_flags(p):
    p.add_argument("--smooth-bleu", action="store_true", help="add-half smoothing of BLEU precisions")
    p.add_argument("--rouge-beta", type=float, default=1.2)
    p.add_argument("--no-stem", action="store_true", help="skip the METEOR stem-matching stage")
    p.add_argument("--synonyms", help="METEOR synonym file, one synonym set per line")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="capkit", description="Video captioning toolkit: scoring, augmentation, training, analysis and corpus cleansing.")
    parser.add_argument("--version", action="version", version=f"capkit {__version__}")
    parser.add_argument("--config", help="JSON file of option defaults")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)

    p = sub.add_parser("score", help="BLEU-4, ROUGE-L, METEOR and CIDEr for candidate captions")
    p.add_argument("--cand", required=True, help="JSONL of {video_id, caption}")
    p.add_argument("--refs", required=True, help="JSONL of {video_id, captions}")
    _metric_flags(p)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("augment", help="list augmentation grids or apply a plan to frames")
    p.add_argument("--grid", choices=["train", "test-only"])
    p.add_argument("--plan", help="plan JSON to apply")
    p.add_argument("--in", dest="input", help="video frame directory, or a directory of them")
    p.add_argument("--out", help="plan directory (with --grid) or output frame root")
    p.add_argument("--seed", type=seed_arg, default=0, help="salt-and-pepper seed written into grid plans")
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("features-extract", help="stub colour-histogram features for frame directories")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--stride", type=positive_int, default=5)
    p.add_argument("--dim", type=positive_int, default=64)
    p.set_defaults(func=cmd_features_extract)

    p = sub.add_parser("train", help="train the encoder-decoder captioner")
    p.add_argument("--features", required=True, help="directory of <video_id>.ften files")
    p.add_argument("--captions", required=True, help="training corpus JSONL")
    p.add_argument("--val-captions", required=True, help="validation corpus JSONL")
    p.add_argument("--out", required=True, help="checkpoint path")
    p.add_argument("--lr", type=float, default=0.1)
    p.add_argument("--batch", type=positive_int, default=64)
    p.add_argument("--patience", type=positive_int, default=10)
    p.add_argument("--max-epochs", type=positive_int, default=1000)
    p.add_argument("--seed", type=seed_arg, default=0)
    p.add_argument("--hidden", type=positive_int, default=1000)
    p.add_argument("--embeddings", help="GloVe-style text embedding file")
    p.add_argument("--embed-dim", type=positive_int, default=None, help="embedding size when no file is given (300)")
    p.add_argument("--oov-seed", type=seed_arg, default=0)
    p.add_argument("--max-len", type=positive_int, default=30)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("decode", help="greedy captions from a trained checkpoint")
    p.add_argument("--model", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--max-len", type=positive_int, default=30)
    p.add_argument("--out", help="write JSONL here instead of stdout")
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("tsne", help="2-D t-SNE embedding and neighbour-purity report")
    p.add_argument("--features", nargs="+", required=True, metavar="LABEL=FILE")
    p.add_argument("--perplexity", type=float, default=30.0)
    p.add_argument("--iters", type=positive_int, default=1000)
    p.add_argument("--seed", type=seed_arg, default=0)
    p.add_argument("--k", type=positive_int, default=10, help="neighbours per point in the purity report")
    p.add_argument("--out", help="CSV of label,x,y")
    p.add_argument("--svg", help="scatter plot")
    p.set_defaults(func=cmd_tsne)

    p = sub.add_parser("cleanse-stats", help="error rate and per-class breakdown of annotations")
    p.add_argument("--records", required=True)
    p.add_argument("--corpus")
    p.add_argument("--total", type=int)
    p.add_argument("--split", help="restrict to one corpus split")
    p.set_defaults(func=cmd_cleanse_stats)

    p = sub.add_parser("cleanse-apply", help="apply double-checked corrections to a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--records", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_cleanse_apply)

    p = sub.add_parser("human-perf", help="leave-one-caption-out human scores")
    p.add_argument("--corpus", required=True)
    p.add_argument("--rounds", type=positive_int, default=23)
    p.add_argument("--split", default="test")
    _metric_flags(p)
    p.set_defaults(func=cmd_human_perf)
    return parser


def _load_config(path) -> dict:
    require(path)
    try:
        cfg = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: {exc}") from None
    if not isinstance(cfg, dict):
        raise InputError(f"{path}: config must be a JSON object")
    return cfg


def _apply_config(parser, argv, cfg: dict) -> None:
    """Install config values as defaults on the chosen subparser."""
    sub_action = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    command = next((a for a in argv if a in sub_action.choices), None)
    if command is None:
        return
    sp = sub_action.choices[command]
    dests = {a.dest for a in sp._actions}
    section = cfg.get(command, {})
    if not isinstance(section, dict):
        raise InputError(f"config section {command!r} must be an object")
    unknown = sorted(set(section) - dests)
    if unknown:
        raise InputError(f"config section {command!r} has unknown keys {unknown}")
    flat = {k.replace("-", "_"): v for k, v in cfg.items() if not isinstance(v, dict)}
    defaults = {k: v for k, v in flat.items() if k in dests}
    defaults.update({k.replace("-", "_"): v for k, v in section.items()})
    for action in sp._actions:
        if action.dest in defaults:
            action.required = False
    sp.set_defaults(**defaults)


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        pre = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
        pre.add_argument("--config")
        known, _ = pre.parse_known_args(argv)
        if known.config:
            _apply_config(parser, argv, _load_config(known.config))
        args = parser.parse_args(argv)
        return args.func(args)
    except SystemExit as exc:  # argparse usage errors (2) and --help (0)
        return exc.code if isinstance(exc.code, int) else 0 if exc.code is None else 2
    except ValidationError as exc:
        print(f"capkit: validation failed: {exc}", file=sys.stderr)
        for v in exc.violations:
            print(f"  {v}", file=sys.stderr)
        return 1
    except (CapkitError, ValueError, KeyError, OSError) as exc:
        print(f"capkit: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
