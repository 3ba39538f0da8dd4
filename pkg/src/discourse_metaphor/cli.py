"""Command-line pipeline: prepare, gen-synthetic, train, predict, evaluate, compare, report."""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
import time
from dataclasses import asdict
from pathlib import Path

from . import corpus, embeddings, features, gbdt, report
from .io import atomic_write_text, file_sha256
from .synthetic import SyntheticConfig, generate, genre_map

log = logging.getLogger("discourse_metaphor")

SPLIT_TAGS = {"train": "Train", "dev": "Dev", "test": "Test"}


class UsageError(Exception):
    """Bad invocation or missing input file; exits with status 2."""


def data_root() -> Path | None:
    root = os.environ.get("DM_DATA_DIR")
    return Path(root) if root else None


def _resolve(path, what, default_name=None) -> Path:
    if path is None:
        root = data_root()
        if root is None or default_name is None:
            raise UsageError(f"no {what} given and DM_DATA_DIR is not set")
        path = root / default_name
    return Path(path)


def _require(path, what) -> Path:
    path = Path(path)
    if not path.exists():
        raise UsageError(f"{what} not found: {path}")
    return path


def _write_json(path, obj) -> None:
    atomic_write_text(path, report.to_json(obj))


def _read_json(path):
    with open(path, encoding="utf-8") as f:
        return json.load(f)


# --------------------------------------------------------------------------
# prepare / gen-synthetic

def cmd_prepare(args) -> int:
    train_csv = _require(args.train_csv, "train CSV")
    test_csv = _require(args.test_csv, "test CSV") if args.test_csv else None
    contexts = _require(args.contexts, "contexts file")
    gmap = _require(args.genre_map, "genre map")
    parse_paths = [_require(p, "parse file") for p in args.parses]
    out = _resolve(args.out, "output directory", "prepared")

    parses = {}
    for p in parse_paths:
        for sid, sent in corpus.load_conllu(p).items():
            if sid in parses:
                raise corpus.CorpusError(f"{p}: sent_id {sid!r} already defined in another parse file")
            parses[sid] = sent

    genre = corpus.load_genre_map(gmap)
    train = corpus.load_shared_task_csv(train_csv, contexts, genre, "Train")
    train = corpus.attach_arguments(train, parses)
    n_loaded = len(train)
    train, dev = corpus.split_dev(train, args.dev_size, args.seed)
    sets = {"train": train, "dev": dev}
    if test_csv:
        test = corpus.load_shared_task_csv(test_csv, contexts, genre, "Test")
        sets["test"] = corpus.attach_arguments(test, parses)
    else:
        sets["test"] = corpus.ExampleSet((), "Test")

    for name, ex in sets.items():
        corpus.save_examples(ex, corpus.split_path(out, name))
    total = sum(len(ex) for ex in sets.values())
    with_arg = sum(1 for ex in sets.values() for e in ex if e.subject or e.object)
    coverage = with_arg / total if total else 0.0
    summary = {
        "loaded_train": n_loaded,
        "counts": {name: len(ex) for name, ex in sets.items()},
        "dev_seed": args.seed,
        "argument_coverage": coverage,
    }
    _write_json(out / "prepare.json", summary)
    print(f"prepared {n_loaded} train ({len(train)} train + {len(dev)} dev), "
          f"{len(sets['test'])} test -> {out}")
    print(f"argument coverage: {report.pct(coverage)}% of verb usages have at least one argument")
    return 0


def cmd_gen_synthetic(args) -> int:
    out = _resolve(args.out, "output directory", "synthetic")
    cfg = SyntheticConfig(n_train=args.n_train, n_test=args.n_test, n_dev=args.dev_size,
                          dim=args.dim, noise=args.noise, seed=args.seed)
    train, dev, test, table = generate(cfg)
    for name, ex in (("train", train), ("dev", dev), ("test", test)):
        corpus.save_examples(ex, corpus.split_path(out, name))
    embeddings.save_vector_table(table, out / "embeddings.txt")
    _write_json(out / "genre_map.json", genre_map())
    print(f"synthetic corpus: {len(train)} train, {len(dev)} dev, {len(test)} test, "
          f"dim {cfg.dim}, noise {cfg.noise} -> {out}")
    return 0


# --------------------------------------------------------------------------
# runs

def _load_provider(cfg):
    if cfg["provider"] == "word-table":
        return embeddings.load_vector_table(cfg["embeddings"])
    return embeddings.load_precomputed(cfg["embeddings"])


def _config_hash(cfg: dict) -> str:
    return hashlib.sha256(json.dumps(cfg, sort_keys=True).encode()).hexdigest()


def _params_from_args(args) -> gbdt.GBDTParams:
    defaults = gbdt.GBDTParams()
    return gbdt.GBDTParams(
        num_trees=args.trees if args.trees is not None else defaults.num_trees,
        max_depth=args.depth if args.depth is not None else defaults.max_depth,
        learning_rate=args.eta if args.eta is not None else defaults.learning_rate,
    )


def cmd_train(args) -> int:
    if bool(args.embeddings) == bool(args.precomputed):
        raise UsageError("give exactly one of --embeddings or --precomputed")
    data = _require(_resolve(args.data, "data directory", "prepared"), "data directory")
    train_path = _require(corpus.split_path(data, "train"), "train split")
    emb_path = _require(args.embeddings or args.precomputed, "embeddings file")
    params = _params_from_args(args)
    mode = args.mode.upper()

    provider_kind = "word-table" if args.embeddings else "precomputed"
    content = {
        "mode": mode,
        "provider": provider_kind,
        "params": asdict(params),
        "train_sha256": file_sha256(train_path),
        "embeddings_sha256": file_sha256(emb_path),
    }
    run_hash = _config_hash(content)
    if args.out:
        out = Path(args.out)
    else:
        out = _resolve(None, "output directory", "runs") / f"{mode.lower()}-{run_hash[:12]}"

    started = time.time()
    provider = _load_provider({"provider": provider_kind, "embeddings": emb_path})
    fcfg = features.FeatureConfig(mode, provider.dim)
    examples = corpus.load_examples(train_path, "Train")
    fm = features.build_matrix(examples, fcfg, provider)
    model = gbdt.train_matrix(fm, params)
    gbdt.save_model(model, out / "model.json")

    config = dict(content, data=str(data), embeddings=str(emb_path), dim=provider.dim,
                  config_hash=run_hash)
    _write_json(out / "run.json", config)
    record = {
        "config": config,
        "artifacts": {"model_sha256": file_sha256(out / "model.json")},
        "train_rows": len(fm),
        "started": started,
        "finished": time.time(),
        "evaluations": {},
        "comparisons": {},
    }
    _write_json(out / "record.json", record)
    print(f"trained {len(model.trees)} trees on {len(fm)} rows ({mode}) -> {out}")
    return 0


def _load_run(run_dir):
    run_dir = _require(run_dir, "run directory")
    cfg = _read_json(_require(run_dir / "run.json", "run config"))
    model = gbdt.load_model(_require(run_dir / "model.json", "model file"))
    return run_dir, cfg, model


def _predict(run_dir, split, data=None):
    run_dir, cfg, model = _load_run(run_dir)
    data = Path(data) if data else Path(cfg["data"])
    split_file = _require(corpus.split_path(data, split), f"{split} split")
    provider = _load_provider(cfg)
    fcfg = features.FeatureConfig(cfg["mode"], provider.dim)
    if fcfg.width != model.feature_count:
        raise features.FeatureError(
            f"feature width {fcfg.width} (dim {provider.dim}) does not match "
            f"model feature count {model.feature_count}")
    fm = features.build_matrix(corpus.load_examples(split_file, SPLIT_TAGS[split]), fcfg, provider)
    probas = model.predict_probas(fm.X) if len(fm) else []
    rows = []
    for i in range(len(fm)):
        p = float(probas[i])
        rows.append({"id": fm.ids[i], "label": int(fm.labels[i]), "genre": fm.genres[i],
                     "proba": p, "pred": int(p >= 0.5)})
    path = run_dir / f"predictions-{split}.jsonl"
    atomic_write_text(path, "".join(json.dumps(r, sort_keys=True) + "\n" for r in rows))
    return rows


def _load_predictions(run_dir, split):
    path = Path(run_dir) / f"predictions-{split}.jsonl"
    if not path.exists():
        return _predict(run_dir, split)
    with open(path, encoding="utf-8") as f:
        return [json.loads(line) for line in f if line.strip()]


def _update_record(run_dir, key, name, value):
    path = Path(run_dir) / "record.json"
    if not path.exists():
        return
    record = _read_json(path)
    record.setdefault(key, {})[name] = value
    _write_json(path, record)


def cmd_predict(args) -> int:
    rows = _predict(Path(args.run), args.split, args.data)
    print(f"wrote {len(rows)} predictions to {Path(args.run) / f'predictions-{args.split}.jsonl'}")
    return 0


def _evaluate(run_dir, split, data=None):
    rows = _predict(run_dir, split, data)
    if not rows:
        raise corpus.CorpusError(f"{split} split is empty")
    rep = report.evaluation_report(
        Path(run_dir).name, split,
        [r["pred"] for r in rows], [r["label"] for r in rows], [r["genre"] for r in rows])
    _write_json(Path(run_dir) / f"report-{split}.json", rep)
    atomic_write_text(Path(run_dir) / f"report-{split}.txt", report.format_evaluation(rep))
    return rep


def cmd_evaluate(args) -> int:
    run_dir = Path(args.run)
    rep = _evaluate(run_dir, args.split, args.data)
    _update_record(run_dir, "evaluations", args.split, rep)
    sys.stdout.write(report.to_json(rep) if args.json else report.format_evaluation(rep))
    return 0


def _compare(run_a, run_b, split):
    pa = _load_predictions(run_a, split)
    pb = _load_predictions(run_b, split)
    ids_a = [r["id"] for r in pa]
    ids_b = [r["id"] for r in pb]
    if sorted(ids_a) != sorted(ids_b):
        sa, sb = set(ids_a), set(ids_b)
        first = next((i for i in ids_a if i not in sb), None) or next(i for i in ids_b if i not in sa)
        raise corpus.CorpusError(
            f"runs {run_a} and {run_b} evaluated different {split} sets; first divergent id {first!r}")
    by_id = {r["id"]: r for r in pb}
    labels = [r["label"] for r in pa]
    if any(by_id[r["id"]]["label"] != r["label"] for r in pa):
        raise corpus.CorpusError("runs disagree on gold labels")
    return report.comparison_report(
        Path(run_a).name, Path(run_b).name, split,
        [r["pred"] for r in pa], [by_id[r["id"]]["pred"] for r in pa], labels)


def cmd_compare(args) -> int:
    cmp = _compare(Path(args.run_a), Path(args.run_b), args.split)
    _update_record(args.run_b, "comparisons", f"{Path(args.run_a).name}:{args.split}", cmp)
    if args.out:
        _write_json(args.out, cmp)
    sys.stdout.write(report.to_json(cmp) if args.json else report.format_comparison(cmp))
    return 0


def cmd_report(args) -> int:
    runs = [Path(r) for r in args.runs]
    evals = [_evaluate(r, args.split) for r in runs]
    comps = [_compare(a, b, args.split) for a, b in zip(runs, runs[1:])]
    if args.json:
        text = report.to_json({"evaluations": evals, "comparisons": comps})
    else:
        text = report.results_table(evals, comps) + "\n" + "\n".join(
            report.format_evaluation(e) for e in evals)
    if args.out:
        atomic_write_text(args.out, text)
    sys.stdout.write(text)
    return 0


# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dm", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("prepare", help="join corpus, contexts and parses into split files")
    s.add_argument("--train-csv", required=True)
    s.add_argument("--test-csv")
    s.add_argument("--contexts", required=True)
    s.add_argument("--parses", nargs="+", required=True, help="CoNLL-U file(s)")
    s.add_argument("--genre-map", required=True)
    s.add_argument("--dev-size", type=int, default=500)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out")
    s.set_defaults(func=cmd_prepare)

    s = sub.add_parser("gen-synthetic", help="write a synthetic context-dependent corpus")
    s.add_argument("--out")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--n-train", type=int, default=2000)
    s.add_argument("--n-test", type=int, default=500)
    s.add_argument("--dev-size", type=int, default=0)
    s.add_argument("--dim", type=int, default=10)
    s.add_argument("--noise", type=float, default=0.1)
    s.set_defaults(func=cmd_gen_synthetic)

    s = sub.add_parser("train", help="train a classifier for one feature mode")
    s.add_argument("--data")
    s.add_argument("--mode", choices=["l", "la", "lac", "L", "LA", "LAC"], required=True)
    s.add_argument("--embeddings", help="word-vector text file")
    s.add_argument("--precomputed", help="JSONL of precomputed unit vectors")
    s.add_argument("--trees", type=int)
    s.add_argument("--depth", type=int)
    s.add_argument("--eta", type=float)
    s.add_argument("--out")
    s.set_defaults(func=cmd_train)

    for name, func, helptext in (("predict", cmd_predict, "write per-example predictions"),
                                 ("evaluate", cmd_evaluate, "overall and per-genre P/R/F1")):
        s = sub.add_parser(name, help=helptext)
        s.add_argument("--run", required=True)
        s.add_argument("--split", choices=list(SPLIT_TAGS), default="test")
        s.add_argument("--data", help="override the run's data directory")
        if name == "evaluate":
            s.add_argument("--json", action="store_true")
        s.set_defaults(func=func)

    s = sub.add_parser("compare", help="mid-p McNemar test between two runs")
    s.add_argument("run_a")
    s.add_argument("run_b")
    s.add_argument("--split", choices=list(SPLIT_TAGS), default="test")
    s.add_argument("--json", action="store_true")
    s.add_argument("--out")
    s.set_defaults(func=cmd_compare)

    s = sub.add_parser("report", help="results table over runs, each compared with the previous")
    s.add_argument("runs", nargs="+")
    s.add_argument("--split", choices=list(SPLIT_TAGS), default="test")
    s.add_argument("--json", action="store_true")
    s.add_argument("--out")
    s.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as e:
        print(f"dm: {e}", file=sys.stderr)
        return 2
    except (OSError, ValueError, KeyError) as e:
        print(f"dm {args.command}: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
