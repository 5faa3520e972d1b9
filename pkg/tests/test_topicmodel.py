import importlib.util
import math

import numpy as np
import pytest

import oracles
from policytone import topicmodel
from policytone.embedding import EmbeddingMatrix


def matrix(values):
    values = np.asarray(values, dtype=np.float32)
    return EmbeddingMatrix(
        n_rows=values.shape[0], dim=values.shape[1], values=values,
        sentence_ids=[f"s{i}" for i in range(values.shape[0])],
        provider_id="test")


# ---------------------------------------------------------------------------
# reduction

def test_reduce_svd_exact_on_rank_two_matrix():
    rng = np.random.default_rng(0)
    basis = rng.normal(size=(2, 12))
    coef = rng.normal(size=(30, 2))
    X = coef @ basis
    reduced = topicmodel.reduce_dims(
        matrix(X), topicmodel.ReductionParams(n_neighbors=5, n_components=2))
    # Exact rank 2: the reduction preserves the centered Gram matrix.
    Xc = X - X.mean(axis=0)
    Xc = np.asarray(Xc, dtype=np.float64)
    X32c = np.asarray(X, dtype=np.float32).astype(np.float64)
    X32c = X32c - X32c.mean(axis=0)
    assert np.allclose(reduced @ reduced.T, X32c @ X32c.T, atol=1e-8)


def test_reduce_svd_default_shape():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(20, 384))
    reduced = topicmodel.reduce_dims(matrix(X), topicmodel.ReductionParams())
    assert reduced.shape == (20, 5)


def test_reduce_svd_duplicate_rows_identical():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(16, 10))
    X[7] = X[3]
    reduced = topicmodel.reduce_dims(
        matrix(X), topicmodel.ReductionParams(n_neighbors=4, n_components=3))
    assert np.allclose(reduced[7], reduced[3], atol=1e-9)


def test_reduce_svd_deterministic_and_permutation_equivariant():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(18, 9)).astype(np.float32)
    p = topicmodel.ReductionParams(n_neighbors=4, n_components=3)
    r1 = topicmodel.reduce_dims(matrix(X), p)
    r2 = topicmodel.reduce_dims(matrix(X), p)
    assert np.array_equal(r1, r2)

    perm = rng.permutation(18)
    rp = topicmodel.reduce_dims(matrix(X[perm]), p)
    assert np.allclose(rp, r1[perm], atol=1e-8)


def test_reduce_validation_errors():
    rng = np.random.default_rng(4)
    X = rng.normal(size=(6, 8))
    with pytest.raises(topicmodel.TopicModelError):
        topicmodel.reduce_dims(
            matrix(X), topicmodel.ReductionParams(n_neighbors=10))
    with pytest.raises(topicmodel.TopicModelError):
        topicmodel.reduce_dims(
            matrix(X),
            topicmodel.ReductionParams(n_neighbors=3, n_components=8))
    with pytest.raises(topicmodel.TopicModelError):
        topicmodel.reduce_dims(
            matrix(X), topicmodel.ReductionParams(n_neighbors=3),
            method="pca")


@pytest.mark.skipif(importlib.util.find_spec("umap") is not None,
                    reason="umap-learn installed; error path not reachable")
def test_reduce_umap_missing_dependency_message():
    rng = np.random.default_rng(5)
    X = rng.normal(size=(20, 8))
    with pytest.raises(topicmodel.TopicModelError, match="umap-learn"):
        topicmodel.reduce_dims(
            matrix(X),
            topicmodel.ReductionParams(n_neighbors=5, n_components=3),
            method="umap")


def test_doc_map_is_two_components():
    rng = np.random.default_rng(6)
    X = rng.normal(size=(20, 8))
    coords = topicmodel.doc_map_2d(matrix(X), n_neighbors=5)
    assert coords.shape == (20, 2)


# ---------------------------------------------------------------------------
# clustering

def _two_blobs(rng, n=200, separation=10.0, sigma=0.5, dim=5):
    a = rng.normal(scale=sigma, size=(n, dim))
    b = rng.normal(scale=sigma, size=(n, dim))
    b[:, 0] += separation
    return np.vstack([a, b])


def test_leader_two_blobs_exactly_two_clusters():
    X = _two_blobs(np.random.default_rng(7))
    labels = topicmodel.cluster(
        X, topicmodel.ClusterParams(min_cluster_size=150))
    kept = labels[labels != topicmodel.OUTLIER]
    assert set(kept) == {0, 1}
    assert (labels == topicmodel.OUTLIER).sum() <= 10
    # The split follows the blobs, not the labels' numbering.
    first, second = labels[:200], labels[200:]
    first_kept = first[first != topicmodel.OUTLIER]
    second_kept = second[second != topicmodel.OUTLIER]
    assert len(set(first_kept)) == 1 and len(set(second_kept)) == 1
    assert first_kept[0] != second_kept[0]


@pytest.mark.skipif(importlib.util.find_spec("sklearn") is None,
                    reason="scikit-learn not installed")
def test_hdbscan_two_blobs_exactly_two_clusters():
    X = _two_blobs(np.random.default_rng(8))
    labels = topicmodel.cluster(
        X, topicmodel.ClusterParams(min_cluster_size=150), method="hdbscan")
    assert set(labels[labels != topicmodel.OUTLIER]) == {0, 1}


def test_leader_permutation_equivariance():
    rng = np.random.default_rng(9)
    X = _two_blobs(rng, n=40, separation=8.0)
    params = topicmodel.ClusterParams(min_cluster_size=10)
    labels = topicmodel.cluster(X, params)
    perm = rng.permutation(len(X))
    permuted = topicmodel.cluster(X[perm], params)
    assert np.array_equal(permuted, labels[perm])


def test_min_cluster_size_above_n_all_outliers():
    X = np.zeros((10, 3))
    with pytest.warns(UserWarning, match="outliers"):
        labels = topicmodel.cluster(
            X + np.arange(10)[:, None],
            topicmodel.ClusterParams(min_cluster_size=11))
    assert (labels == topicmodel.OUTLIER).all()


def test_leader_explicit_radius():
    # Two tight pairs far apart; radius bridges within pairs only.
    X = np.array([[0.0, 0.0], [0.1, 0.0], [9.0, 0.0], [9.1, 0.0]])
    labels = topicmodel.cluster(
        X, topicmodel.ClusterParams(min_cluster_size=2, leader_radius=1.0))
    assert labels[0] == labels[1] != labels[2]
    assert labels[2] == labels[3]


def test_leader_tiny_radius_warns_all_outliers():
    rng = np.random.default_rng(10)
    X = rng.normal(size=(12, 3)) * 5.0
    with pytest.warns(UserWarning, match="outliers"):
        labels = topicmodel.cluster(
            X, topicmodel.ClusterParams(min_cluster_size=5,
                                        leader_radius=1e-6))
    assert (labels == topicmodel.OUTLIER).all()


def test_cluster_unknown_method():
    with pytest.raises(topicmodel.TopicModelError):
        topicmodel.cluster(np.zeros((5, 2)),
                           topicmodel.ClusterParams(min_cluster_size=2),
                           method="kmeans")


def test_cluster_params_validation():
    with pytest.raises(topicmodel.TopicModelError):
        topicmodel.ClusterParams(min_cluster_size=1)


def test_scale_min_cluster_size():
    assert topicmodel.scale_min_cluster_size(150, 20000) == 150
    assert topicmodel.scale_min_cluster_size(150, 40000) == 300
    assert topicmodel.scale_min_cluster_size(150, 400) == 5
    assert topicmodel.scale_min_cluster_size(150, 10) == 5


# ---------------------------------------------------------------------------
# c-TF-IDF

def test_ctfidf_direct_substitution():
    ct = topicmodel.ctfidf({0: ["rate rate cut"], 1: ["trade"]})
    i = ct.terms.index("rate")
    j = ct.topics.index(0)
    assert ct.scores[i, j] == pytest.approx((2 / 3) * math.log(2), abs=1e-12)


def test_ctfidf_term_in_every_topic_scores_zero():
    ct = topicmodel.ctfidf({0: ["rate cut today"], 1: ["rate hike today"]})
    for term in ("rate", "today"):
        i = ct.terms.index(term)
        assert (ct.scores[i] == 0.0).all()
    i = ct.terms.index("cut")
    assert ct.scores[i, 0] > 0.0


def test_ctfidf_scores_nonnegative_and_doubling_invariant():
    base = {0: ["growth outlook improved", "credit expanded"],
            1: ["inflation stayed high"]}
    doubled = {0: base[0] * 2, 1: base[1]}
    a = topicmodel.ctfidf(base)
    b = topicmodel.ctfidf(doubled)
    assert (a.scores >= 0.0).all()
    assert np.array_equal(a.scores, b.scores)


def test_ctfidf_outlier_topic_excluded():
    ct = topicmodel.ctfidf({-1: ["junk noise"], 0: ["rate"], 1: ["trade"]})
    assert ct.topics == [0, 1]
    assert "junk" not in ct.terms


def test_ctfidf_empty_inputs_raise():
    with pytest.raises(topicmodel.TopicModelError):
        topicmodel.ctfidf({-1: ["only outliers"]})
    with pytest.raises(topicmodel.TopicModelError):
        topicmodel.ctfidf({0: ["rate"], 1: ["???"]})


def _random_toy_corpus(rng):
    vocab = ["rate", "cut", "hike", "growth", "trade", "credit", "bank",
             "rupee", "bond", "yield", "inflation", "food", "fuel", "core",
             "reserve", "deficit", "surplus", "export", "import", "liquidity"]
    n_topics = int(rng.integers(2, 6))
    corpus = {}
    budget = int(rng.integers(200, 1000))
    per_topic = budget // n_topics
    for t in range(n_topics):
        sentences = []
        used = 0
        while used < per_topic:
            n_words = int(rng.integers(3, 9))
            words = rng.choice(vocab, size=n_words, replace=True)
            sentences.append(" ".join(words))
            used += n_words
        corpus[t] = sentences
    return corpus


def test_ctfidf_matches_bruteforce_oracle():
    # The full 20-corpus sweep is the acceptance gate; spot-check 3 here.
    for seed in range(3):
        corpus = _random_toy_corpus(np.random.default_rng(100 + seed))
        ct = topicmodel.ctfidf(corpus)
        vocab, topics, expected = oracles.ctfidf_bruteforce(corpus)
        assert ct.terms == vocab and ct.topics == topics
        for i, w in enumerate(vocab):
            for j, t in enumerate(topics):
                assert ct.scores[i, j] == pytest.approx(
                    expected[(w, t)], abs=1e-12)


# ---------------------------------------------------------------------------
# POS tagging and MMR term selection

def test_pos_tag_heuristics():
    assert topicmodel.pos_tag("the") == "func"
    assert topicmodel.pos_tag("while") == "func"
    assert topicmodel.pos_tag("Reserve") == "propn"
    assert topicmodel.pos_tag("quickly") == "adv"
    assert topicmodel.pos_tag("stabilize") == "verb"
    assert topicmodel.pos_tag("fiscal") == "adj"
    assert topicmodel.pos_tag("rate") == "noun"


def test_top_terms_lambda_one_is_pure_relevance():
    ct = topicmodel.ctfidf({
        0: ["inflation inflation inflation food food fuel basket"],
        1: ["trade exports imports shipping"],
    })
    terms = topicmodel.top_terms(ct, n=3, mmr_lambda=1.0)
    j = ct.topics.index(0)
    ranked = sorted(
        (i for i in range(len(ct.terms)) if ct.counts[i, j] > 0),
        key=lambda i: (-ct.scores[i, j], ct.terms[i]))
    expected = [ct.terms[i] for i in ranked[:3]]
    assert terms[0] == expected


def test_top_terms_function_words_excluded():
    ct = topicmodel.ctfidf({0: ["the repo rate cut"], 1: ["trade flows"]})
    with pytest.warns(UserWarning, match="candidate terms"):
        terms = topicmodel.top_terms(ct, n=4)
    assert "the" not in terms[0]
    assert set(terms[0]) == {"repo", "rate", "cut"}


def test_top_terms_duplicate_rows_deferred():
    # beta2's co-occurrence row is parallel to beta's (cosine exactly 1);
    # a distinct weaker candidate must win the second slot.
    ct = topicmodel.CtfidfResult(
        terms=["alpha", "beta", "beta2"], topics=[0, 1],
        scores=np.array([[0.2, 0.1], [1.0, 0.0], [0.9, 0.0]]),
        counts=np.array([[1.0, 3.0], [4.0, 1.0], [8.0, 2.0]]))
    terms = topicmodel.top_terms(ct, n=2, mmr_lambda=0.5,
                                 pos_keep={"noun"}, tagger=lambda t: "noun")
    assert terms[0] == ["beta", "alpha"]


def test_top_terms_distinct_and_bounded():
    corpus = _random_toy_corpus(np.random.default_rng(42))
    ct = topicmodel.ctfidf(corpus)
    terms = topicmodel.top_terms(ct, n=5)
    for topic, picked in terms.items():
        assert len(picked) == len(set(picked))
        assert len(picked) <= 5


def test_top_terms_validation():
    ct = topicmodel.ctfidf({0: ["rate"], 1: ["trade"]})
    with pytest.raises(topicmodel.TopicModelError):
        topicmodel.top_terms(ct, n=0)
    with pytest.raises(topicmodel.TopicModelError):
        topicmodel.top_terms(ct, n=2, mmr_lambda=1.5)


# ---------------------------------------------------------------------------
# model fit and topic reduction

def _fit_three_topics():
    # Topics 0 and 2 share a vocabulary profile; topic 1 stands apart.
    texts = (["credit banks lending"] * 4
             + ["rupee dollar reserves"] * 4
             + ["credit banks lending", "credit banks loans"] * 2)
    labels = [0] * 4 + [1] * 4 + [2] * 4
    return topicmodel.fit_topics(texts, labels, min_cluster_size=2,
                                 n_top_terms=3)


def test_fit_topics_structure():
    model = _fit_three_topics()
    assert model.n_topics == 3
    assert sorted(model.topic_names) == [0, 1, 2]
    assert set(model.top_terms[1]) <= {"rupee", "dollar", "reserves"}


def test_fit_topics_name_overrides():
    texts = ["credit banks"] * 3 + ["rupee dollar"] * 3
    labels = [0] * 3 + [1] * 3
    with pytest.warns(UserWarning, match="candidate terms"):
        model = topicmodel.fit_topics(texts, labels,
                                      name_overrides={0: "Banking"})
    assert model.topic_names[0] == "Banking"
    assert model.topic_names[1] != "Banking"


def test_fit_topics_length_mismatch():
    with pytest.raises(topicmodel.TopicModelError):
        topicmodel.fit_topics(["a b"], [0, 1])


def test_reduce_topics_merges_most_similar_pair():
    model = _fit_three_topics()
    non_outliers = int((model.labels != topicmodel.OUTLIER).sum())
    reduced = topicmodel.reduce_topics(model, 2)
    assert reduced.n_topics == 2
    assert int((reduced.labels != topicmodel.OUTLIER).sum()) == non_outliers
    # The two credit/banks topics merged; the rupee topic survived alone.
    merged_sizes = sorted(
        int((reduced.labels == t).sum()) for t in range(2))
    assert merged_sizes == [4, 8]
    rupee_topic = [t for t in range(2)
                   if "rupee" in reduced.top_terms[t]]
    assert len(rupee_topic) == 1
    assert int((reduced.labels == rupee_topic[0]).sum()) == 4


def test_reduce_topics_labels_stay_consecutive():
    model = _fit_three_topics()
    reduced = topicmodel.reduce_topics(model, 1)
    live = set(reduced.labels.tolist()) - {topicmodel.OUTLIER}
    assert live == {0}


def test_reduce_topics_target_above_n_warns_identity():
    model = _fit_three_topics()
    with pytest.warns(UserWarning, match="no-op"):
        same = topicmodel.reduce_topics(model, 10)
    assert same.n_topics == model.n_topics


def test_reduce_topics_validation():
    model = _fit_three_topics()
    with pytest.raises(topicmodel.TopicModelError):
        topicmodel.reduce_topics(model, 0)


# ---------------------------------------------------------------------------
# topics over time

def test_topics_over_time_shares_sum_to_one():
    labels = [0, 0, 1, -1, 1, 1, 0, 2]
    dates = ["2020-02-06"] * 4 + ["2020-04-07"] * 4
    table = topicmodel.topics_over_time(labels, dates)
    sums = table.groupby("date")["share"].sum()
    assert (np.abs(sums.to_numpy() - 1.0) <= 1e-12).all()
    feb = table[table["date"] == "2020-02-06"]
    assert dict(zip(feb["topic"], feb["count"])) == {0: 2, 1: 1}


def test_topics_over_time_outlier_only_date_absent():
    table = topicmodel.topics_over_time([-1, -1, 0],
                                        ["2020-01-01", "2020-01-01",
                                         "2020-02-01"])
    assert list(table["date"].unique()) == ["2020-02-01"]


def test_topics_over_time_empty():
    table = topicmodel.topics_over_time([], [])
    assert table.empty
