"""Topic discovery over sentence embeddings.

Reduce dimensions, density-cluster, score terms per topic with c-TF-IDF,
pick representative terms via maximal marginal relevance with a
part-of-speech filter, merge similar topics down to a target count, and
tabulate topic prevalence over time.

Two method families per stage: the stochastic pair (umap, hdbscan) mirrors
the production setup; the deterministic pair (svd, leader) is exact and
carries the test suite.
"""

import math
import re
import warnings
from collections import Counter
from dataclasses import dataclass, field, replace

import numpy as np
import pandas as pd

OUTLIER = -1

# Sentence count the stock min_cluster_size of 150 presumes; smaller corpora
# scale it down proportionally (floor 5) via scale_min_cluster_size.
REFERENCE_CORPUS_SIZE = 20000


class TopicModelError(Exception):
    pass


@dataclass(frozen=True)
class ReductionParams:
    n_neighbors: int = 15
    n_components: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.n_neighbors < 2:
            raise TopicModelError("n_neighbors must be >= 2")
        if self.n_components < 1:
            raise TopicModelError("n_components must be >= 1")


@dataclass(frozen=True)
class ClusterParams:
    min_cluster_size: int = 150
    outlier_label: int = OUTLIER
    leader_radius: float | None = None   # leader method; None = auto

    def __post_init__(self):
        if self.min_cluster_size < 2:
            raise TopicModelError("min_cluster_size must be >= 2")


def scale_min_cluster_size(base, n_corpus, reference=REFERENCE_CORPUS_SIZE):
    """Shrink min_cluster_size proportionally for small corpora."""
    return max(5, round(base * n_corpus / reference))


# ---------------------------------------------------------------------------
# dimensionality reduction

def reduce_dims(m, p, method="svd"):
    """Project an EmbeddingMatrix to p.n_components dimensions.

    `svd` centers columns and truncates a singular decomposition with a
    fixed sign convention, so results are exactly reproducible; `umap`
    needs the optional umap-learn dependency.
    """
    X = np.asarray(m.values, dtype=np.float64)
    if not np.isfinite(X).all():
        raise TopicModelError("embedding matrix contains non-finite values")
    n_rows = X.shape[0]
    if n_rows < p.n_neighbors:
        raise TopicModelError(
            f"{n_rows} rows < n_neighbors={p.n_neighbors}")
    if p.n_components >= X.shape[1]:
        raise TopicModelError(
            f"n_components={p.n_components} must be < dim={X.shape[1]}")

    if method == "svd":
        centered = X - X.mean(axis=0)
        U, S, Vt = np.linalg.svd(centered, full_matrices=False)
        k = p.n_components
        if k > len(S):
            raise TopicModelError(f"rank too low for {k} components")
        # Sign convention: largest-|loading| entry of each right vector
        # is positive, which removes the SVD sign ambiguity.
        signs = np.sign(Vt[np.arange(len(S)), np.abs(Vt).argmax(axis=1)])
        signs[signs == 0] = 1.0
        return (U[:, :k] * S[:k]) * signs[:k]

    if method == "umap":
        try:
            import umap
        except ImportError as exc:
            raise TopicModelError(
                "method 'umap' needs the optional umap-learn dependency "
                "(install the [umap] extra); the 'svd' method is the "
                "built-in deterministic alternative") from exc
        reducer = umap.UMAP(n_neighbors=p.n_neighbors,
                            n_components=p.n_components,
                            random_state=p.seed, metric="cosine")
        return np.asarray(reducer.fit_transform(X), dtype=np.float64)

    raise TopicModelError(f"unknown reduction method {method!r}")


def doc_map_2d(m, seed=0, method="svd", n_neighbors=15):
    """2-component projection of the full embedding space, for plotting."""
    p = ReductionParams(n_neighbors=n_neighbors, n_components=2, seed=seed)
    return reduce_dims(m, p, method=method)


# ---------------------------------------------------------------------------
# clustering

def _leader_labels(X, min_cluster_size, radius):
    """Leader clustering over a canonical point order.

    Points are visited in lexicographic coordinate order; each joins its
    nearest leader within the radius or founds a new one, so cluster
    diameter stays bounded by 2 x radius and no chain of points can merge
    two distant groups.  Canonical ordering makes the labels a function
    of the point set alone: permuting input rows permutes labels
    identically.  Undersized leader groups become outliers.
    """
    n = X.shape[0]
    if radius is None:
        if n < 2:
            radius = 0.0
        else:
            # Scale-free default: half the median pairwise distance.
            diff = X[:, None, :] - X[None, :, :]
            dist = np.sqrt((diff ** 2).sum(axis=2))
            radius = 0.5 * float(np.median(dist[np.triu_indices(n, k=1)]))

    order = sorted(range(n), key=lambda i: tuple(X[i]))
    leaders = []
    assign = np.full(n, -1, dtype=int)
    for i in order:
        best, best_d = -1, np.inf
        for li, l in enumerate(leaders):
            d = float(np.linalg.norm(X[i] - X[l]))
            if d <= radius and d < best_d:      # ties keep earlier leader
                best, best_d = li, d
        if best < 0:
            leaders.append(i)
            best = len(leaders) - 1
        assign[i] = best

    sizes = np.bincount(assign, minlength=len(leaders))
    keep = [c for c in range(len(leaders)) if sizes[c] >= min_cluster_size]
    remap = {c: i for i, c in enumerate(keep)}
    return np.array([remap.get(c, OUTLIER) for c in assign], dtype=int)


def cluster(reduced, c, method="leader"):
    """Label rows of a reduced matrix; OUTLIER (-1) marks unassigned points."""
    X = np.asarray(reduced, dtype=np.float64)
    if not np.isfinite(X).all():
        raise TopicModelError("reduced matrix contains non-finite values")
    if method not in ("leader", "hdbscan"):
        raise TopicModelError(f"unknown clustering method {method!r}")
    n = X.shape[0]
    if c.min_cluster_size > n:
        labels = np.full(n, OUTLIER, dtype=int)
    elif method == "leader":
        labels = _leader_labels(X, c.min_cluster_size, c.leader_radius)
    else:
        from sklearn.cluster import HDBSCAN
        labels = HDBSCAN(min_cluster_size=c.min_cluster_size).fit_predict(X)
        labels = np.asarray(labels, dtype=int)

    if (labels == OUTLIER).all():
        warnings.warn("all points labelled outliers", stacklevel=2)
    return labels


# ---------------------------------------------------------------------------
# c-TF-IDF

_TERM = re.compile(r"[a-z][a-z0-9\-']*")


def tokenize(text):
    """Lowercase word tokens; terms start with a letter."""
    return _TERM.findall(text.lower())


@dataclass
class CtfidfResult:
    terms: list                 # vocabulary, sorted
    topics: list                # topic ids, sorted
    scores: np.ndarray          # term x topic c-TF-IDF
    counts: np.ndarray          # term x topic raw counts


def ctfidf(sentences_by_topic):
    """Class-based TF-IDF over topics.

    Each topic's sentences concatenate into one pseudo-document;
    score(w, t) = [count(w,t) / total_words(t)] * log(T / df(w)).  A term
    present in every topic scores exactly 0.
    """
    grouped = {t: texts for t, texts in sentences_by_topic.items()
               if t != OUTLIER}
    if not grouped:
        raise TopicModelError("no non-outlier topics")
    topics = sorted(grouped)
    topic_counters = {}
    for t in topics:
        counter = Counter()
        for text in grouped[t]:
            counter.update(tokenize(text))
        if not counter:
            raise TopicModelError(f"topic {t} has no tokens")
        topic_counters[t] = counter

    terms = sorted(set().union(*topic_counters.values()))
    term_index = {w: i for i, w in enumerate(terms)}
    counts = np.zeros((len(terms), len(topics)), dtype=np.float64)
    for j, t in enumerate(topics):
        for w, c in topic_counters[t].items():
            counts[term_index[w], j] = c

    totals = counts.sum(axis=0)
    df = (counts > 0).sum(axis=1)
    idf = np.log(len(topics) / df)
    scores = (counts / totals) * idf[:, None]
    return CtfidfResult(terms=terms, topics=topics, scores=scores,
                        counts=counts)


# ---------------------------------------------------------------------------
# part-of-speech heuristics for term filtering

# Closed-class words carry no topical content; everything here tags "func".
_FUNCTION_WORDS = frozenset("""
a an the and or but nor so yet if then else than as of in on at by for with
to from into onto over under between during after before above below again
further once about against up down out off this that these those it its they
them their we our us you your he him his she her is are was were be been
being am do does did have has had having can could will would shall should
may might must not no any all both each few more most other some such only
own same too very just there here when where why how which who whom whose
what while also because until though although per
""".split())

_ADJ_SUFFIXES = ("ous", "ful", "ive", "ic", "al", "ary", "able", "ible",
                 "ish", "less", "est")
_VERB_SUFFIXES = ("ize", "ise")
_ADV_SUFFIXES = ("ly",)

DEFAULT_POS_KEEP = frozenset({"noun", "propn", "adj"})


def pos_tag(term):
    """Coarse tag from a closed-class list and suffix heuristics.

    Nouns are the default open class; precision only matters enough to
    drop function words and adverbs from topic representations.
    """
    if term.lower() in _FUNCTION_WORDS:
        return "func"
    if term[:1].isupper():
        return "propn"
    if any(term.endswith(s) for s in _ADV_SUFFIXES) and len(term) > 4:
        return "adv"
    if any(term.endswith(s) for s in _VERB_SUFFIXES):
        return "verb"
    if any(term.endswith(s) for s in _ADJ_SUFFIXES) and len(term) > 4:
        return "adj"
    return "noun"


# ---------------------------------------------------------------------------
# maximal marginal relevance term selection

def _cosine(u, v):
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return float(u @ v) / (nu * nv)


def top_terms(ct, n, mmr_lambda=0.5, pos_keep=DEFAULT_POS_KEEP,
              tagger=pos_tag):
    """Representative terms per topic via greedy MMR.

    Candidates are the top 3n terms by c-TF-IDF present in the topic,
    filtered to pos_keep tags.  Greedy selection maximizes
    mmr_lambda * normalized relevance - (1 - mmr_lambda) * max cosine
    similarity to already-selected terms, where similarity runs over
    term-topic co-occurrence count vectors.  Exact duplicates of a
    selected term are skipped while distinct candidates remain.
    """
    if n < 1:
        raise TopicModelError("n must be >= 1")
    if not 0.0 <= mmr_lambda <= 1.0:
        raise TopicModelError("mmr_lambda must lie in [0, 1]")

    result = {}
    for j, topic in enumerate(ct.topics):
        scores = ct.scores[:, j]
        present = np.nonzero(ct.counts[:, j] > 0)[0]
        # Descending score; ties resolve by term string for determinism.
        ranked = sorted(present, key=lambda i: (-scores[i], ct.terms[i]))
        pool = [i for i in ranked[:3 * n] if tagger(ct.terms[i]) in pos_keep]
        if len(pool) < n:
            warnings.warn(
                f"topic {topic}: only {len(pool)} candidate terms for n={n}",
                stacklevel=2)
        if not pool:
            result[topic] = []
            continue

        rel = scores[pool]
        lo, hi = rel.min(), rel.max()
        rel_norm = (rel - lo) / (hi - lo) if hi > lo else np.ones_like(rel)
        vectors = [ct.counts[i, :] for i in pool]

        selected = []
        remaining = list(range(len(pool)))
        while remaining and len(selected) < n:
            # Ties keep the earlier pool entry (higher relevance rank);
            # duplicates of selected terms lose to any distinct candidate.
            best, best_key, best_dup = None, None, True
            for r in remaining:
                if selected:
                    sim = max(_cosine(vectors[r], vectors[s])
                              for s in selected)
                else:
                    sim = 0.0
                is_dup = sim >= 1.0 - 1e-9
                mmr = mmr_lambda * rel_norm[r] - (1.0 - mmr_lambda) * sim
                key = (mmr, rel_norm[r])
                better = (best is None
                          or (best_dup and not is_dup)
                          or (is_dup == best_dup and key > best_key))
                if better:
                    best, best_key, best_dup = r, key, is_dup
            selected.append(best)
            remaining.remove(best)
        result[topic] = [ct.terms[pool[s]] for s in selected]
    return result


# ---------------------------------------------------------------------------
# the fitted model

@dataclass
class TopicModel:
    labels: np.ndarray          # aligned to sentence order; -1 = outlier
    ctfidf: CtfidfResult
    top_terms: dict             # topic id -> ranked term list
    topic_names: dict           # topic id -> display name
    n_topics: int
    texts: list = field(default_factory=list)   # aligned to labels
    min_cluster_size: int = 2
    n_top_terms: int = 10
    mmr_lambda: float = 0.5
    name_overrides: dict = field(default_factory=dict)


def _default_name(terms):
    return ", ".join(terms[:3]) if terms else "(unnamed)"


def fit_topics(texts, labels, min_cluster_size=2, n_top_terms=10,
               mmr_lambda=0.5, pos_keep=DEFAULT_POS_KEEP,
               name_overrides=None):
    """Assemble a TopicModel from clustered sentences."""
    labels = np.asarray(labels, dtype=int)
    if len(texts) != len(labels):
        raise TopicModelError("texts and labels length mismatch")
    name_overrides = dict(name_overrides or {})

    grouped = {}
    for text, label in zip(texts, labels):
        if label == OUTLIER:
            continue
        grouped.setdefault(int(label), []).append(text)
    ct = ctfidf(grouped)
    terms = top_terms(ct, n_top_terms, mmr_lambda, pos_keep)
    names = {t: name_overrides.get(t, _default_name(terms[t]))
             for t in ct.topics}
    return TopicModel(
        labels=labels, ctfidf=ct, top_terms=terms, topic_names=names,
        n_topics=len(ct.topics), texts=list(texts),
        min_cluster_size=min_cluster_size, n_top_terms=n_top_terms,
        mmr_lambda=mmr_lambda, name_overrides=name_overrides,
    )


def reduce_topics(model, target):
    """Merge most-similar topic pairs until n_topics <= target.

    Similarity is the cosine of c-TF-IDF columns; after every merge the
    labels are remapped to stay consecutive and the model is refit.
    """
    if target < 1:
        raise TopicModelError("target must be >= 1")
    if target > model.n_topics:
        warnings.warn(
            f"target {target} exceeds n_topics {model.n_topics}; no-op",
            stacklevel=2)
        return model

    current = model
    while current.n_topics > target:
        ct = current.ctfidf
        k = len(ct.topics)
        best_pair, best_sim = None, -np.inf
        for a in range(k):
            for b in range(a + 1, k):
                sim = _cosine(ct.scores[:, a], ct.scores[:, b])
                if sim > best_sim:
                    best_sim, best_pair = sim, (ct.topics[a], ct.topics[b])
        keep, absorb = best_pair
        labels = current.labels.copy()
        labels[labels == absorb] = keep
        # Compact to consecutive ids, preserving ascending order.
        live = sorted(t for t in set(labels.tolist()) if t != OUTLIER)
        remap = {t: i for i, t in enumerate(live)}
        labels = np.array([remap.get(l, OUTLIER) for l in labels], dtype=int)
        overrides = {remap[t]: name for t, name in
                     current.name_overrides.items() if t in remap}
        current = fit_topics(
            current.texts, labels, current.min_cluster_size,
            current.n_top_terms, current.mmr_lambda,
            name_overrides=overrides)
    return current


# ---------------------------------------------------------------------------
# topic prevalence over time

def topics_over_time(labels, dates):
    """Count and share of each topic per date; outliers excluded.

    Dates whose sentences are all outliers do not appear.  Shares within
    a date sum to 1.
    """
    labels = np.asarray(labels, dtype=int)
    if len(labels) != len(dates):
        raise TopicModelError("labels and dates length mismatch")
    rows = [(d, int(l)) for d, l in zip(dates, labels) if l != OUTLIER]
    if not rows:
        return pd.DataFrame(columns=["date", "topic", "count", "share"])
    df = pd.DataFrame(rows, columns=["date", "topic"])
    table = (df.groupby(["date", "topic"]).size()
               .rename("count").reset_index())
    totals = table.groupby("date")["count"].transform("sum")
    table["share"] = table["count"] / totals
    return table.sort_values(["date", "topic"]).reset_index(drop=True)
