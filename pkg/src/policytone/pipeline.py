"""Stage-wise pipeline with an artifact manifest.

Each stage reads upstream files, writes its outputs atomically (temp dir
plus rename) and records input/output content hashes in manifest.json.
A stage refuses to run when an upstream artifact no longer matches its
recorded hash, unless forced. One stage at a time per output directory,
enforced with a lock file.
"""

import hashlib
import json
import os
import re
import shutil
import warnings
from datetime import date as Date
from pathlib import Path

import numpy as np
import pandas as pd

from . import corpus as corpus_mod
from . import econo, report, sentiment as sentiment_mod, topicmodel
from .config import DEFAULT_ANALYSIS_CLUSTERS
from .embedding import (CommandEmbeddingProvider, HashEmbeddingProvider,
                        HTTPEmbeddingProvider, embed_batch, load_embeddings,
                        save_embeddings)

STAGE_ORDER = ("ingest", "sentences", "embed", "topics", "sentiment",
               "panel", "lp", "report")

# Hard upstream requirements; report degrades per-figure instead.
STAGE_DEPS = {
    "ingest": (),
    "sentences": ("ingest",),
    "embed": ("sentences",),
    "topics": ("embed", "sentences"),
    "sentiment": ("topics", "sentences"),
    "panel": (),
    "lp": ("panel", "sentiment", "topics"),
    "report": (),
}

MANIFEST = "manifest.json"


class PipelineError(Exception):
    pass


class DependencyError(PipelineError):
    pass


class StaleUpstreamError(PipelineError):
    pass


# ---------------------------------------------------------------------------
# small shared helpers

def sha256_file(path):
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def derive_seed(global_seed, stage):
    """Per-stage seed: stable hash of the global seed and stage name."""
    digest = hashlib.sha256(f"{global_seed}:{stage}".encode("utf-8"))
    return int(digest.hexdigest()[:16], 16)


def write_jsonl(path, rows):
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, sort_keys=True) + "\n")


def read_jsonl(path):
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def write_csv(df, path):
    df.to_csv(path, index=False, lineterminator="\n")


def slugify(name):
    slug = re.sub(r"[^a-z0-9]+", "_", str(name).lower()).strip("_")
    return slug or "topic"


def load_manifest(out_dir):
    path = Path(out_dir) / MANIFEST
    if not path.exists():
        return {"stages": {}}
    return json.loads(path.read_text(encoding="utf-8"))


def _save_manifest(out_dir, manifest):
    path = Path(out_dir) / MANIFEST
    tmp = path.with_suffix(".json.tmp")
    tmp.write_text(json.dumps(manifest, indent=1, sort_keys=True),
                   encoding="utf-8")
    os.replace(tmp, path)


class _OutputLock:
    """One stage at a time per output directory."""

    def __init__(self, out_dir):
        self.path = Path(out_dir) / ".lock"

    def __enter__(self):
        try:
            fd = os.open(self.path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            raise PipelineError(
                f"{self.path} exists; another stage is running in this "
                "directory (delete the lock if that run crashed)") from None
        os.write(fd, str(os.getpid()).encode())
        os.close(fd)
        return self

    def __exit__(self, *exc):
        try:
            self.path.unlink()
        except FileNotFoundError:
            pass
        return False


# ---------------------------------------------------------------------------
# artifact readers

def _read_sentences(out_dir):
    rows = read_jsonl(Path(out_dir) / "sentences.jsonl")
    return [corpus_mod.SentenceRecord(
        sentence_id=r["sentence_id"], paragraph_id=r["paragraph_id"],
        doc_id=r["doc_id"], date=Date.fromisoformat(r["date"]),
        speaker=r["speaker"], text=r["text"], word_count=r["word_count"],
    ) for r in rows]


def _read_topic_assignments(out_dir):
    return {r["sentence_id"]: int(r["topic"])
            for r in read_jsonl(Path(out_dir) / "topics.jsonl")}


def _read_topic_summary(out_dir):
    return json.loads((Path(out_dir) / "topics_summary.json")
                      .read_text(encoding="utf-8"))


def _read_sentiment_table(out_dir):
    df = pd.read_csv(Path(out_dir) / "sentiment_by_date_topic.csv",
                     dtype={"topic": str})
    df["topic"] = [int(t) if t.lstrip("-").isdigit() else t
                   for t in df["topic"]]
    df["balance_defined"] = df["balance_defined"].astype(bool)
    return df


# ---------------------------------------------------------------------------
# stage implementations; each writes files into tmp and returns their names

def _stage_ingest(cfg, out_dir, seed, tmp):
    corpus_dir = Path(cfg.corpus_dir)
    meta_files = sorted(corpus_dir.glob("*.meta.json"))
    if not meta_files:
        raise PipelineError(f"no *.meta.json sidecars in {corpus_dir}")
    rows = []
    for meta_path in meta_files:
        doc_id = meta_path.name[:-len(".meta.json")]
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
        doc_files = [p for p in sorted(corpus_dir.glob(doc_id + ".*"))
                     if p != meta_path]
        if len(doc_files) != 1:
            raise PipelineError(
                f"{doc_id}: expected exactly one document file, found "
                f"{[p.name for p in doc_files]}")
        pub_date = Date.fromisoformat(meta["date"])
        if cfg.study_start and pub_date < cfg.study_start:
            continue
        if cfg.study_end and pub_date > cfg.study_end:
            continue
        doc_meta = corpus_mod.DocumentMeta(
            doc_id=doc_id, doc_type=meta["doc_type"],
            publication_date=pub_date, source_path=str(doc_files[0]))
        raw = doc_files[0].read_text(encoding="utf-8")
        paragraphs = corpus_mod.parse_document(raw, doc_meta, meta["format"])
        if meta["doc_type"] == "transcript":
            allowed = meta.get("speakers") or cfg.qa_speakers
            if allowed:
                paragraphs = corpus_mod.extract_qa_answers(paragraphs,
                                                           allowed)
        for p in paragraphs:
            rows.append({
                "paragraph_id": p.paragraph_id, "doc_id": p.doc_id,
                "date": p.date.isoformat(), "speaker": p.speaker,
                "text": p.text,
            })
    write_jsonl(tmp / "paragraphs.jsonl", rows)
    return ["paragraphs.jsonl"]


def _stage_sentences(cfg, out_dir, seed, tmp):
    paragraphs = [corpus_mod.Paragraph(
        paragraph_id=r["paragraph_id"], text=r["text"],
        speaker=r["speaker"], doc_id=r["doc_id"],
        date=Date.fromisoformat(r["date"]),
    ) for r in read_jsonl(Path(out_dir) / "paragraphs.jsonl")]
    records = []
    for p in paragraphs:
        records.extend(corpus_mod.split_sentences(p))
    kept = corpus_mod.filter_sentences(records, cfg.min_words)
    write_jsonl(tmp / "sentences.jsonl", [{
        "sentence_id": r.sentence_id, "paragraph_id": r.paragraph_id,
        "doc_id": r.doc_id, "date": r.date.isoformat(),
        "speaker": r.speaker, "text": r.text, "word_count": r.word_count,
    } for r in kept])

    stats = corpus_mod.corpus_stats(kept)
    suggestion = corpus_mod.suggest_threshold(records) if records else None
    payload = {
        "n_paragraphs": stats.n_paragraphs,
        "n_sentences": stats.n_sentences,
        "total_words": stats.total_words,
        "avg_sentence_length": stats.avg_sentence_length,
        "n_before_filter": len(records),
        "min_words": cfg.min_words,
    }
    if suggestion:
        payload["suggested_min_words"] = suggestion.suggested
        payload["length_mean"] = suggestion.mean
        payload["length_median"] = suggestion.median
        payload["length_mode"] = suggestion.mode
    (tmp / "corpus_stats.json").write_text(
        json.dumps(payload, indent=1, sort_keys=True), encoding="utf-8")
    return ["sentences.jsonl", "corpus_stats.json"]


def _build_embedding_provider(cfg, seed):
    e = cfg.embedding
    if e.provider == "hash":
        return HashEmbeddingProvider(dim=e.dim, seed=seed)
    if e.provider == "command":
        return CommandEmbeddingProvider(e.command)
    return HTTPEmbeddingProvider(e.url)


def _stage_embed(cfg, out_dir, seed, tmp):
    sentences = _read_sentences(out_dir)
    if not sentences:
        raise PipelineError("sentences.jsonl is empty")
    provider = _build_embedding_provider(cfg, seed)
    matrix = embed_batch(sentences, provider,
                         batch_size=cfg.embedding.batch_size)
    save_embeddings(matrix, tmp / "embeddings.bin")
    return ["embeddings.bin", "embeddings.meta.json"]


def _stage_topics(cfg, out_dir, seed, tmp):
    sentences = _read_sentences(out_dir)
    matrix = load_embeddings(Path(out_dir) / "embeddings.bin")
    if matrix.sentence_ids != [s.sentence_id for s in sentences]:
        raise PipelineError("embeddings and sentences are out of sync")

    params = topicmodel.ReductionParams(
        n_neighbors=cfg.reduction.n_neighbors,
        n_components=cfg.reduction.n_components, seed=seed)
    reduced = topicmodel.reduce_dims(matrix, params,
                                     method=cfg.reduction.method)

    mcs = cfg.clustering.min_cluster_size
    if cfg.clustering.scale_to_corpus:
        mcs = topicmodel.scale_min_cluster_size(mcs, matrix.n_rows)
    cparams = topicmodel.ClusterParams(
        min_cluster_size=mcs, leader_radius=cfg.clustering.leader_radius)
    labels = topicmodel.cluster(reduced, cparams,
                                method=cfg.clustering.method)

    overrides = {int(k): v for k, v in cfg.topics.name_overrides.items()}
    texts = [s.text for s in sentences]
    model = topicmodel.fit_topics(
        texts, labels, min_cluster_size=mcs,
        n_top_terms=cfg.topics.n_top_terms,
        mmr_lambda=cfg.topics.mmr_lambda, name_overrides=overrides)
    if model.n_topics > cfg.topics.target:
        model = topicmodel.reduce_topics(model, cfg.topics.target)

    write_jsonl(tmp / "topics.jsonl", [{
        "sentence_id": s.sentence_id, "topic": int(label),
        "topic_name": model.topic_names.get(int(label), "outlier"),
    } for s, label in zip(sentences, model.labels)])

    ct = model.ctfidf
    term_rows = []
    for j, topic in enumerate(ct.topics):
        present = np.nonzero(ct.counts[:, j] > 0)[0]
        ranked = sorted(present, key=lambda i: (-ct.scores[i, j],
                                                ct.terms[i]))
        for i in ranked:
            term_rows.append({"term": ct.terms[i], "topic": topic,
                              "score": ct.scores[i, j]})
    write_csv(pd.DataFrame(term_rows, columns=["term", "topic", "score"]),
              tmp / "ctfidf.csv")

    over_time = topicmodel.topics_over_time(
        model.labels, [s.date for s in sentences])
    over_time = over_time.assign(date=[d.isoformat()
                                       for d in over_time["date"]])
    write_csv(over_time, tmp / "topics_over_time.csv")

    coords = topicmodel.doc_map_2d(
        matrix, seed=seed, method=cfg.reduction.method,
        n_neighbors=cfg.reduction.n_neighbors)
    doc_map = pd.DataFrame({
        "sentence_id": [s.sentence_id for s in sentences],
        "x": coords[:, 0], "y": coords[:, 1],
        "topic": model.labels,
    })
    write_csv(doc_map, tmp / "doc_map.csv")

    sizes = {int(t): int((model.labels == t).sum()) for t in ct.topics}
    summary = {
        "n_topics": model.n_topics,
        "min_cluster_size": mcs,
        "n_outliers": int((model.labels == topicmodel.OUTLIER).sum()),
        "topics": [{
            "topic": int(t),
            "name": model.topic_names[t],
            "terms": model.top_terms[t],
            "size": sizes[int(t)],
        } for t in ct.topics],
    }
    (tmp / "topics_summary.json").write_text(
        json.dumps(summary, indent=1, sort_keys=True), encoding="utf-8")
    return ["topics.jsonl", "ctfidf.csv", "topics_over_time.csv",
            "doc_map.csv", "topics_summary.json"]


def _build_sentiment_provider(cfg):
    s = cfg.sentiment
    if s.provider == "lexicon":
        lexicon = sentiment_mod.load_lexicon(s.lexicon_path)
        return sentiment_mod.LexiconSentimentProvider(lexicon)
    if s.provider == "command":
        return sentiment_mod.CommandSentimentProvider(s.command)
    return sentiment_mod.HTTPSentimentProvider(s.url)


def _stage_sentiment(cfg, out_dir, seed, tmp):
    sentences = _read_sentences(out_dir)
    topics = _read_topic_assignments(out_dir)
    provider = _build_sentiment_provider(cfg)

    records = []
    batch = cfg.sentiment.batch_size
    for start in range(0, len(sentences), batch):
        chunk = sentences[start:start + batch]
        probs = provider.classify_batch([s.text for s in chunk])
        records.extend(sentiment_mod.make_record(s.sentence_id, p)
                       for s, p in zip(chunk, probs))

    write_jsonl(tmp / "sentiment.jsonl", [{
        "sentence_id": r.sentence_id,
        "p_dovish": r.probs.p_dovish,
        "p_hawkish": r.probs.p_hawkish,
        "p_neutral": r.probs.p_neutral,
        "label": r.label,
        "signed_score": r.signed_score,
    } for r in records])

    dates = {s.sentence_id: s.date for s in sentences}
    aggregates = sentiment_mod.aggregate(records, topics, dates)
    table = pd.DataFrame([{
        "date": a.date.isoformat(),
        "topic": a.topic,
        "n_dovish": a.n_dovish,
        "n_hawkish": a.n_hawkish,
        "n_neutral": a.n_neutral,
        "avg_score": a.avg_score,
        "balance": a.balance,
        "balance_defined": int(a.balance_defined),
    } for a in aggregates])
    write_csv(table, tmp / "sentiment_by_date_topic.csv")
    return ["sentiment.jsonl", "sentiment_by_date_topic.csv"]


def _stage_panel(cfg, out_dir, seed, tmp):
    prices = econo.PriceSeries.from_csv(cfg.panel.prices_csv)
    window = (cfg.panel.covid_start, cfg.panel.covid_end)
    meetings = econo.load_meetings(cfg.panel.meetings_csv, prices, window)
    control_names = sorted({c for m in meetings for c in m.controls})
    rows = []
    for m in meetings:
        row = {
            "meeting_date": m.meeting_date.isoformat(),
            "aligned_trading_date": m.aligned_trading_date.isoformat(),
            "governor": m.governor,
            "covid_flag": m.covid_flag,
        }
        for c in control_names:
            row[c] = m.controls.get(c, float("nan"))
        rows.append(row)
    write_csv(pd.DataFrame(rows), tmp / "meetings_panel.csv")
    return ["meetings_panel.csv"]


def _read_meetings_panel(out_dir):
    df = pd.read_csv(Path(out_dir) / "meetings_panel.csv")
    base = {"meeting_date", "aligned_trading_date", "governor", "covid_flag"}
    control_names = [c for c in df.columns if c not in base]
    meetings = []
    for _, row in df.iterrows():
        controls = {c: float(row[c]) for c in control_names
                    if pd.notna(row[c])}
        meetings.append(econo.MeetingEvent(
            meeting_date=Date.fromisoformat(row["meeting_date"]),
            aligned_trading_date=Date.fromisoformat(
                row["aligned_trading_date"]),
            governor=row["governor"],
            covid_flag=int(row["covid_flag"]),
            controls=controls,
        ))
    return meetings


def _resolve_analysis_clusters(cfg, summary):
    """Map the configured cluster list to fitted (slug, topic_id) pairs.

    The per-date aggregate series always runs, as cluster "all".
    """
    topics = summary["topics"]
    by_name = {t["name"]: t["topic"] for t in topics}
    requested = cfg.regression.clusters
    if requested == "default":
        chosen = [n for n in DEFAULT_ANALYSIS_CLUSTERS if n in by_name]
        if not chosen:
            warnings.warn(
                "no default cluster names match fitted topics; analysing "
                "every topic", stacklevel=2)
            chosen = [t["name"] for t in topics]
    elif requested == "all":
        chosen = [t["name"] for t in topics]
    else:
        missing = [n for n in requested if n not in by_name]
        if missing:
            raise PipelineError(
                f"cluster names not among fitted topics: {missing}; "
                f"available: {sorted(by_name)}")
        chosen = list(requested)

    pairs = [("all", None)]
    used = {"all"}
    for name in chosen:
        slug = slugify(name)
        if slug in used:
            slug = f"{slug}_{by_name[name]}"
        used.add(slug)
        pairs.append((slug, by_name[name]))
    return pairs


def _stage_lp(cfg, out_dir, seed, tmp):
    prices = econo.PriceSeries.from_csv(cfg.panel.prices_csv)
    meetings = _read_meetings_panel(out_dir)
    sent_table = _read_sentiment_table(out_dir)
    summary = _read_topic_summary(out_dir)
    r = cfg.regression

    files = []
    runs = []
    for slug, cluster_id in _resolve_analysis_clusters(cfg, summary):
        spec = econo.LPSpec(
            cluster_id=cluster_id,
            horizons=r.horizons,
            regressor_kind=r.regressor,
            include_dummies=r.include_dummies,
            include_interactions=r.include_interactions,
            controls=r.controls,
            hac_lag_rule=r.hac_lag_rule,
            bootstrap=econo.BootstrapSpec(
                B=r.bootstrap_b, seed=seed, level=r.bootstrap_level,
                kind=r.bootstrap_kind),
            drop_undefined_balance=r.drop_undefined_balance,
        )
        design = econo.build_panel(meetings, sent_table, prices, spec)
        result = econo.run_irf(design, spec)
        name = f"irf_{slug}_{spec.label()}.csv"
        write_csv(econo.irf_frame(result), tmp / name)
        files.append(name)
        runs.append({
            "cluster": slug,
            "topic_id": cluster_id,
            "file": name,
            "n_meetings": len(design.meeting_dates),
            "dropped": [[d.isoformat(), reason]
                        for d, reason in design.dropped],
            "truncated_at": result.truncated_at,
        })
    (tmp / "lp_summary.json").write_text(
        json.dumps({"runs": runs}, indent=1, sort_keys=True),
        encoding="utf-8")
    return files + ["lp_summary.json"]


def _stage_report(cfg, out_dir, seed, tmp):
    return report.emit_reports(cfg, out_dir, tmp)


_STAGE_FUNCS = {
    "ingest": _stage_ingest,
    "sentences": _stage_sentences,
    "embed": _stage_embed,
    "topics": _stage_topics,
    "sentiment": _stage_sentiment,
    "panel": _stage_panel,
    "lp": _stage_lp,
    "report": _stage_report,
}

# External input files per stage, for manifest hashing.
def _stage_inputs(stage, cfg, out_dir):
    out = Path(out_dir)
    if stage == "ingest":
        return sorted(str(p) for p in Path(cfg.corpus_dir).glob("*")
                      if p.is_file())
    if stage == "sentences":
        return [str(out / "paragraphs.jsonl")]
    if stage == "embed":
        return [str(out / "sentences.jsonl")]
    if stage == "topics":
        return [str(out / "embeddings.bin"),
                str(out / "embeddings.meta.json"),
                str(out / "sentences.jsonl")]
    if stage == "sentiment":
        return [str(out / "sentences.jsonl"), str(out / "topics.jsonl")]
    if stage == "panel":
        return [cfg.panel.prices_csv, cfg.panel.meetings_csv]
    if stage == "lp":
        return [str(out / "meetings_panel.csv"),
                str(out / "sentiment_by_date_topic.csv"),
                str(out / "topics_summary.json"), cfg.panel.prices_csv]
    return []


def _check_deps(stage, manifest, out_dir, force):
    for dep in STAGE_DEPS[stage]:
        entry = manifest["stages"].get(dep)
        if entry is None:
            raise DependencyError(
                f"stage {stage!r} needs {dep!r} to have run first")
        for rel, recorded in entry["outputs"].items():
            path = Path(out_dir) / rel
            if not path.exists():
                msg = f"artifact {rel} from stage {dep!r} is missing"
            elif sha256_file(path) != recorded:
                msg = (f"artifact {rel} changed since stage {dep!r} wrote "
                       "it")
            else:
                continue
            if force:
                warnings.warn(msg + " (forced past)", stacklevel=2)
            else:
                raise StaleUpstreamError(
                    msg + f"; rerun {dep!r} or pass --force")


def run_stage(stage, cfg, force=False):
    """Run one stage: check deps, execute, install outputs, update manifest."""
    if stage not in _STAGE_FUNCS:
        raise PipelineError(f"unknown stage {stage!r}; expected one of "
                            f"{', '.join(STAGE_ORDER)}")
    out_dir = Path(cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    with _OutputLock(out_dir):
        manifest = load_manifest(out_dir)
        _check_deps(stage, manifest, out_dir, force)

        input_paths = _stage_inputs(stage, cfg, out_dir)
        input_hashes = {}
        for p in input_paths:
            if not Path(p).exists():
                raise PipelineError(f"stage {stage!r} input {p} is missing")
            input_hashes[Path(p).name] = sha256_file(p)

        stage_seed = derive_seed(cfg.seed, stage)
        tmp = out_dir / f".tmp-{stage}"
        if tmp.exists():
            shutil.rmtree(tmp)
        tmp.mkdir()
        try:
            produced = _STAGE_FUNCS[stage](cfg, out_dir, stage_seed, tmp)
            outputs = {}
            for rel in produced:
                src = tmp / rel
                dst = out_dir / rel
                dst.parent.mkdir(parents=True, exist_ok=True)
                os.replace(src, dst)
                outputs[rel] = sha256_file(dst)
        finally:
            shutil.rmtree(tmp, ignore_errors=True)

        manifest["stages"][stage] = {
            "inputs": input_hashes,
            "outputs": outputs,
            "params": _stage_params(stage, cfg),
            "seed": stage_seed,
        }
        _save_manifest(out_dir, manifest)
    return outputs


def _stage_params(stage, cfg):
    if stage == "ingest":
        return {"study_start": str(cfg.study_start),
                "study_end": str(cfg.study_end)}
    if stage == "sentences":
        return {"min_words": cfg.min_words}
    if stage == "embed":
        return {"provider": cfg.embedding.provider,
                "dim": cfg.embedding.dim}
    if stage == "topics":
        return {"reduction": cfg.reduction.method,
                "clustering": cfg.clustering.method,
                "n_neighbors": cfg.reduction.n_neighbors,
                "n_components": cfg.reduction.n_components,
                "min_cluster_size": cfg.clustering.min_cluster_size,
                "scale_to_corpus": cfg.clustering.scale_to_corpus,
                "target": cfg.topics.target}
    if stage == "sentiment":
        return {"provider": cfg.sentiment.provider}
    if stage == "panel":
        return {"covid_start": cfg.panel.covid_start.isoformat(),
                "covid_end": cfg.panel.covid_end.isoformat()}
    if stage == "lp":
        return {"horizons": cfg.regression.horizons,
                "regressor": cfg.regression.regressor,
                "bootstrap_b": cfg.regression.bootstrap_b,
                "bootstrap_kind": cfg.regression.bootstrap_kind}
    return {}


def run_all(cfg, force=False):
    results = {}
    for stage in STAGE_ORDER:
        results[stage] = run_stage(stage, cfg, force=force)
    return results
