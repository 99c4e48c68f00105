"""Command-line pipeline: segment pages, embed words, score and rank
documents, generate fixture corpora, and run the evaluation metrics.

Exit codes: 0 success, 1 usage error, 2 data error. Every run echoes the
resolved configuration to stderr; all stdout/file output is deterministic
for a fixed seed and configuration.
"""

from __future__ import annotations

import argparse
import configparser
import dataclasses
import hashlib
import json
import os
import re
import sys
from pathlib import Path

import numpy as np
from PIL import Image

from . import config as runconfig
from . import fixtures, matcher, metrics, segmenter
from .descriptor import DescriptorConfig, baseline_descriptor, synth_embed
from .docmodel import (
    CorpusManifest,
    EmbeddingRecord,
    EmbeddingStore,
    read_embeddings,
    read_manifest,
    validate_embeddings,
    write_embeddings,
    write_manifest,
)
from .errors import ModsError

USAGE_ERROR = 1
DATA_ERROR = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors exit 1, not argparse's default 2
        self.print_usage(sys.stderr)
        self.exit(USAGE_ERROR, f"{self.prog}: error: {message}\n")


def build_parser() -> _Parser:
    defaults = "\n".join(f"  {line}" for line in runconfig.RunConfig().echo_lines())
    parser = _Parser(
        prog="mods",
        description=__doc__,
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="flag defaults (overridable via config file or MODS_* env):\n" + defaults,
    )
    parser.add_argument("--config", help="INI config file (key/value sections)")
    parser.add_argument("--seed", type=int, default=None, help="master random seed")
    parser.add_argument("--jobs", type=int, default=None, help="worker processes for rank (0 = cpu count)")
    parser.add_argument("--gamma", type=float, default=None, help="match distance cutoff")
    parser.add_argument("--region-lines", type=int, default=None, dest="region_lines")
    parser.add_argument("--region-stride", type=int, default=None, dest="region_stride")
    parser.add_argument("--stopword-tau", type=float, default=None, dest="stopword_tau")
    parser.add_argument("--ann-mode", choices=("exact", "kdtree"), default=None, dest="ann_mode")
    parser.add_argument("--ann-leaf-size", type=int, default=None, dest="ann_leaf_size")
    parser.add_argument("--ann-max-visited-leaves", type=int, default=None, dest="ann_max_visited_leaves")
    parser.add_argument("--lexicon", default=None, dest="lexicon_path", help="stopword lexicon file")
    parser.add_argument("--small-factor", type=float, default=None, dest="small_factor")
    parser.add_argument("--large-factor", type=float, default=None, dest="large_factor")
    parser.add_argument("--cost-threshold", type=float, default=None, dest="cost_threshold")
    parser.add_argument("--gap-factors", default=None, dest="gap_factors", help="comma-separated factors")
    parser.add_argument("--page-scale-factor", type=float, default=None, dest="page_scale_factor")
    parser.add_argument("--binarize-threshold", type=int, default=None, dest="binarize_threshold")
    parser.add_argument("--noise", type=float, default=None, help="synthetic embedding noise")
    parser.add_argument("--dim", type=int, default=None, help="synthetic embedding dimension")

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("segment", parents=[], help="segment page images into a manifest")
    p.add_argument("images", nargs="+")
    p.add_argument("--out", required=True)

    p = sub.add_parser("embed", help="embed manifest words into a MODSEMB1 store")
    p.add_argument("manifest")
    p.add_argument("--mode", choices=("baseline", "synth"), default="baseline")
    p.add_argument("--out", required=True)

    p = sub.add_parser("score", help="score one document pair")
    p.add_argument("manifest")
    p.add_argument("embeddings")
    p.add_argument("--pair", nargs=2, metavar=("A", "B"), required=True)
    p.add_argument("--out")

    p = sub.add_parser("rank", help="rank the corpus against a query document")
    p.add_argument("manifest")
    p.add_argument("embeddings")
    p.add_argument("--query", required=True)
    p.add_argument("--metric", choices=("mods", "swm"), default="mods")
    p.add_argument("--out")

    p = sub.add_parser("gen-fixtures", help="generate a graded synthetic corpus")
    p.add_argument("spec", help="INI fixture spec ([fixtures] section)")
    p.add_argument("--out-dir", required=True)

    p = sub.add_parser("eval-docsim", help="nDCG/AUC of a score report against truth")
    p.add_argument("report")
    p.add_argument("truth")
    p.add_argument("--metric", choices=("mods", "swm"), default="mods")
    p.add_argument("--ndcg-p", type=int, default=None, dest="ndcg_p")
    p.add_argument("--table", action="store_true")
    p.add_argument("--out")

    p = sub.add_parser("eval-spot", help="word-spotting mAP over labeled words")
    p.add_argument("manifest")
    p.add_argument("embeddings")
    p.add_argument("--inexact", action="store_true", help="stem-level relevance")
    p.add_argument("--out")
    return parser


_FLAG_FIELDS = (
    "seed", "jobs", "gamma", "region_lines", "region_stride", "stopword_tau",
    "ann_mode", "ann_leaf_size", "ann_max_visited_leaves", "lexicon_path",
    "small_factor", "large_factor", "cost_threshold", "page_scale_factor",
    "binarize_threshold", "noise", "dim",
)


def _resolve_config(args, env) -> runconfig.RunConfig:
    overrides: dict[str, object] = {}
    for name in _FLAG_FIELDS:
        value = getattr(args, name, None)
        if value is not None:
            overrides[name] = value
    if getattr(args, "gap_factors", None) is not None:
        overrides["gap_factors"] = tuple(
            float(p) for p in args.gap_factors.split(",") if p.strip()
        )
    return runconfig.resolve(args.config, env, overrides)


def _emit(lines: list[str], out_path: str | None) -> None:
    payload = ("\n".join(lines) + "\n") if lines else ""
    if out_path:
        Path(out_path).write_bytes(payload.encode("utf-8"))
    else:
        sys.stdout.write(payload)


def _pair_to_json(score: matcher.PairScore) -> str:
    region_matches = []
    for m in score.region_matches:
        region_matches.append(
            {
                "region": m.region.region_id,
                "span": [m.region.first_line, m.region.last_line],
                "target": m.target.region_id if m.target else None,
                "target_span": (
                    [m.target.first_line, m.target.last_line] if m.target else None
                ),
                "score": round(m.score, 9),
                "pairs": [[k, l, round(d, 6)] for k, l, d in m.pairs],
            }
        )
    return json.dumps(
        {
            "query_doc": score.query_doc,
            "target_doc": score.target_doc,
            "swm": round(score.swm, 9),
            "mods_raw": round(score.mods_raw, 9),
            "mods_norm": round(score.mods_norm, 9),
            "region_matches": region_matches,
        },
        separators=(",", ":"),
        ensure_ascii=False,
    )


def _load_pair_inputs(manifest_path, embeddings_path):
    manifest = read_manifest(manifest_path)
    store = read_embeddings(embeddings_path)
    validate_embeddings(store, manifest)
    return manifest, store


def _document(manifest: CorpusManifest, doc_id: str):
    try:
        return manifest.document(doc_id)
    except KeyError:
        raise ModsError(f"doc_id {doc_id!r} not found in manifest") from None


def cmd_segment(args, run: runconfig.RunConfig) -> int:
    cfg = run.segmenter_config()
    documents = []
    for image_path in args.images:
        path = Path(image_path)
        if not path.exists():
            raise ModsError(f"missing input image {path}")
        image = np.asarray(Image.open(path).convert("L"))
        for hset in segmenter.segment_page(image, cfg):
            doc_id = f"{path.stem}:{hset.threshold_id}"
            documents.append(
                segmenter.hypotheses_to_document(doc_id, hset, str(path))
            )
    manifest = CorpusManifest(documents=tuple(documents), name="segmented")
    write_manifest(manifest, args.out)
    return 0


def _writer_seed(seed: int, doc_id: str) -> int:
    digest = hashlib.sha256(f"{seed}:{doc_id}".encode("utf-8")).digest()
    return int.from_bytes(digest[:6], "little")


def cmd_embed(args, run: runconfig.RunConfig) -> int:
    manifest = read_manifest(args.manifest)
    records = []
    if args.mode == "synth":
        for doc in manifest.documents:
            writer = _writer_seed(run.seed, doc.doc_id)
            for w in doc.words:
                if w.label is None:
                    raise ModsError(
                        f"synth embedding needs labels; word {w.word_id!r} has none"
                    )
                records.append(
                    EmbeddingRecord(
                        w.word_id, synth_embed(w.label, writer, run.noise, run.dim)
                    )
                )
        dim = run.dim
    else:
        dcfg = DescriptorConfig()
        for doc in manifest.documents:
            if doc.page_image is None:
                raise ModsError(f"document {doc.doc_id!r} has no page_image to crop")
            page_path = Path(doc.page_image)
            if not page_path.exists():
                raise ModsError(f"missing page image {page_path}")
            page = np.asarray(Image.open(page_path).convert("L"))
            h, w = page.shape
            for box in doc.words:
                y0 = max(0, box.bbox.y)
                x0 = max(0, box.bbox.x)
                crop = page[y0 : min(h, box.bbox.y2), x0 : min(w, box.bbox.x2)]
                if crop.size == 0:
                    raise ModsError(f"word {box.word_id!r} lies outside its page image")
                records.append(
                    EmbeddingRecord(box.word_id, baseline_descriptor(crop, dcfg))
                )
        dim = dcfg.dim
    write_embeddings(EmbeddingStore(dim, records), args.out)
    return 0


def cmd_score(args, run: runconfig.RunConfig) -> int:
    manifest, store = _load_pair_inputs(args.manifest, args.embeddings)
    da = _document(manifest, args.pair[0])
    db = _document(manifest, args.pair[1])
    score = matcher.mods_score(da, db, store, run.match_config())
    _emit([_pair_to_json(score)], args.out)
    return 0


def cmd_rank(args, run: runconfig.RunConfig) -> int:
    manifest, store = _load_pair_inputs(args.manifest, args.embeddings)
    query = _document(manifest, args.query)
    jobs = run.jobs
    scores = matcher.score_corpus(
        query, manifest, store, run.match_config(), metric=args.metric, jobs=jobs
    )
    _emit([_pair_to_json(s) for s in scores], args.out)
    return 0


def _read_fixture_spec(path: str, run: runconfig.RunConfig) -> fixtures.FixtureSpec:
    parser = configparser.ConfigParser()
    spec_path = Path(path)
    if not spec_path.exists():
        raise ModsError(f"missing fixture spec {spec_path}")
    parser.read_string(spec_path.read_text(encoding="utf-8"), source=path)
    if not parser.has_section("fixtures"):
        raise ModsError(f"{spec_path.name}: missing [fixtures] section")
    section = parser["fixtures"]
    if "sources_file" in section:
        text = Path(section["sources_file"]).read_text(encoding="utf-8")
        paragraphs = [p.strip() for p in re.split(r"\n\s*\n", text) if p.strip()]
        sources = tuple(p for p in paragraphs if not p.startswith("#"))
    else:
        sources = fixtures.packaged_sources()
    degrees = tuple(
        d.strip() for d in section.get("degrees", "").split(",") if d.strip()
    )
    if not degrees:
        degrees = ("near_copy",) * 5 + ("light",) * 5 + ("heavy",) * 5 + ("none",) * 4
    return fixtures.FixtureSpec(
        sources=sources,
        degrees=degrees,
        words_per_line=section.getint("words_per_line", 10),
        noise=section.getfloat("noise", run.noise),
        dim=section.getint("dim", 256),
        seed=run.seed,
    )


def cmd_gen_fixtures(args, run: runconfig.RunConfig) -> int:
    spec = _read_fixture_spec(args.spec, run)
    manifest, store, truth = fixtures.gen_fixtures(spec)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_manifest(manifest, out_dir / "corpus.manifest")
    write_embeddings(store, out_dir / "corpus.emb")
    fixtures.write_truth(truth, out_dir / "truth.tsv")
    sys.stderr.write(
        f"wrote {len(manifest.documents)} documents, {len(store)} embeddings to {out_dir}\n"
    )
    return 0


def _read_report(path: str) -> dict[tuple[str, str], dict]:
    report = {}
    report_path = Path(path)
    if not report_path.exists():
        raise ModsError(f"missing report file {report_path}")
    for lineno, raw in enumerate(report_path.read_text("utf-8").splitlines(), 1):
        if not raw.strip():
            continue
        try:
            obj = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ModsError(f"{report_path.name}:{lineno}: invalid JSON ({exc.msg})")
        try:
            key = (obj["query_doc"], obj["target_doc"])
        except KeyError as exc:
            raise ModsError(f"{report_path.name}:{lineno}: missing field {exc}")
        report[key] = obj
    return report


def cmd_eval_docsim(args, run: runconfig.RunConfig) -> int:
    report = _read_report(args.report)
    truth = fixtures.read_truth(args.truth)
    queries: dict[str, list[tuple[str, int]]] = {}
    for query_doc, target_doc, grade in truth:
        queries.setdefault(query_doc, []).append((target_doc, grade))

    def score_of(pair):
        if pair not in report:
            raise ModsError(f"report has no line for pair {pair[0]} -> {pair[1]}")
        obj = report[pair]
        return obj["mods_norm"] if args.metric == "mods" else -obj["swm"]

    lines = []
    table = [("query", "p", "ndcg")]
    ndcgs = []
    all_scores: list[float] = []
    all_labels: list[bool] = []
    for query_doc in sorted(queries):
        grade_of = dict(queries[query_doc])
        scored = [(t, score_of((query_doc, t))) for t, _ in queries[query_doc]]
        ranked = metrics.RankedList.from_scored(scored, grade_of)
        p = args.ndcg_p if args.ndcg_p is not None else len(ranked)
        value = metrics.ndcg_at(ranked, p)
        ndcgs.append(value)
        lines.append(
            json.dumps(
                {"metric": "ndcg", "query_doc": query_doc, "p": p, "value": round(value, 9)},
                separators=(",", ":"),
            )
        )
        table.append((query_doc, str(p), f"{value:.4f}"))
        for target_doc, grade in queries[query_doc]:
            all_scores.append(score_of((query_doc, target_doc)))
            all_labels.append(grade >= 1)
    mean_ndcg = sum(ndcgs) / len(ndcgs) if ndcgs else 0.0
    auc = metrics.roc_auc(all_scores, all_labels)
    lines.append(
        json.dumps(
            {"metric": "mean_ndcg", "value": round(mean_ndcg, 9)}, separators=(",", ":")
        )
    )
    lines.append(
        json.dumps({"metric": "auc", "value": round(auc, 9)}, separators=(",", ":"))
    )
    if args.table:
        table.append(("mean", "-", f"{mean_ndcg:.4f}"))
        table.append(("auc", "-", f"{auc:.4f}"))
        widths = [max(len(row[i]) for row in table) for i in range(3)]
        for row in table:
            lines.append("# " + "  ".join(cell.ljust(w) for cell, w in zip(row, widths)))
    _emit(lines, args.out)
    return 0


def cmd_eval_spot(args, run: runconfig.RunConfig) -> int:
    manifest, store = _load_pair_inputs(args.manifest, args.embeddings)
    cfg = run.match_config()
    lexicon = cfg.lexicon()
    word_ids = []
    labels = []
    for doc in manifest.documents:
        for w in doc.words:
            if w.label is not None and w.word_id in store:
                word_ids.append(w.word_id)
                labels.append(w.label)
    if len(word_ids) < 2:
        raise ModsError("eval-spot needs at least two labeled, embedded words")
    vectors = store.matrix(word_ids).astype(np.float64)
    norms = np.linalg.norm(vectors, axis=1, keepdims=True)
    if (norms == 0).any():
        raise ModsError("eval-spot found zero-norm embeddings")
    vectors /= norms
    if args.inexact:
        keys = [metrics.porter_stem(label) for label in labels]
    else:
        keys = labels
    ranked_lists = []
    id_order = np.array(
        sorted(range(len(word_ids)), key=word_ids.__getitem__), dtype=np.int64
    )
    rank_of = np.empty(len(word_ids), dtype=np.int64)
    rank_of[id_order] = np.arange(len(word_ids))
    for qi, word_id in enumerate(word_ids):
        if labels[qi] in lexicon:
            continue  # stopwords stay in the pool as distractors only
        dist = ((vectors - vectors[qi]) ** 2).sum(axis=1)
        order = np.lexsort((rank_of, dist))
        order = order[order != qi]
        grades = tuple(int(keys[int(i)] == keys[qi]) for i in order)
        scores = tuple(-float(dist[int(i)]) for i in order)
        ranked_lists.append(
            metrics.RankedList(
                items=tuple(word_ids[int(i)] for i in order),
                scores=scores,
                grades=grades,
            )
        )
    result = metrics.mean_ap(ranked_lists)
    mode = "inexact" if args.inexact else "exact"
    _emit(
        [
            json.dumps(
                {
                    "metric": "map",
                    "mode": mode,
                    "value": round(result.value, 9),
                    "queries": result.evaluated,
                    "skipped": result.skipped,
                },
                separators=(",", ":"),
            )
        ],
        args.out,
    )
    return 0


_COMMANDS = {
    "segment": cmd_segment,
    "embed": cmd_embed,
    "score": cmd_score,
    "rank": cmd_rank,
    "gen-fixtures": cmd_gen_fixtures,
    "eval-docsim": cmd_eval_docsim,
    "eval-spot": cmd_eval_spot,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        run = _resolve_config(args, os.environ)
    except (ModsError, FileNotFoundError) as exc:
        sys.stderr.write(f"mods: {exc}\n")
        return DATA_ERROR
    if run.jobs == 0:
        run = dataclasses.replace(run, jobs=os.cpu_count() or 1)
    for line in run.echo_lines():
        sys.stderr.write(f"# config {line}\n")
    try:
        return _COMMANDS[args.command](args, run)
    except (ModsError, FileNotFoundError, OSError) as exc:
        sys.stderr.write(f"mods: {exc}\n")
        return DATA_ERROR


if __name__ == "__main__":
    sys.exit(main())
