"""Independent reference implementations the test suite compares against.

Everything here is deliberately literal: dict loops, explicit double
sums, plain list indexing.  Nothing imports from policytone, so these
cannot inherit a bug from the code under test.
"""

import math
from datetime import date as Date, timedelta

import numpy as np


# ---------------------------------------------------------------------------
# class-based TF-IDF, one term at a time

def ctfidf_bruteforce(sentences_by_topic):
    """(term, topic) -> score via direct substitution into the formula.

    Tokenization is plain lowercase whitespace splitting, so feed it text
    whose tokens are bare alphanumeric words.
    """
    topics = sorted(t for t in sentences_by_topic if t != -1)
    T = len(topics)
    counts = {t: {} for t in topics}
    for t in topics:
        for sentence in sentences_by_topic[t]:
            for word in sentence.lower().split():
                counts[t][word] = counts[t].get(word, 0) + 1
    vocab = sorted({w for t in topics for w in counts[t]})
    scores = {}
    for w in vocab:
        df = sum(1 for t in topics if w in counts[t])
        idf = math.log(T / df)
        for t in topics:
            total = sum(counts[t].values())
            tf = counts[t].get(w, 0) / total
            scores[(w, t)] = tf * idf
    return vocab, topics, scores


# ---------------------------------------------------------------------------
# covariance sandwiches from their definitions

def hac_bruteforce(X, residuals, lag):
    """Newey-West meat as the explicit double sum over time pairs."""
    X = np.asarray(X, dtype=float)
    e = np.asarray(residuals, dtype=float)
    n, k = X.shape
    meat = np.zeros((k, k))
    for t in range(n):
        for s in range(n):
            l = abs(t - s)
            if l > lag:
                continue
            w = 1.0 - l / (lag + 1.0)
            meat += w * e[t] * e[s] * np.outer(X[t], X[s])
    bread = np.linalg.inv(X.T @ X)
    return bread @ meat @ bread


def white_bruteforce(X, residuals):
    """Heteroskedasticity-only sandwich, one observation at a time."""
    X = np.asarray(X, dtype=float)
    e = np.asarray(residuals, dtype=float)
    n, k = X.shape
    meat = np.zeros((k, k))
    for t in range(n):
        meat += e[t] ** 2 * np.outer(X[t], X[t])
    bread = np.linalg.inv(X.T @ X)
    return bread @ meat @ bread


def ols_normal_equations(y, X):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    return np.linalg.solve(X.T @ X, X.T @ y)


# ---------------------------------------------------------------------------
# deterministic fixtures shared between the freeze script and the tests

def fixture_price_rows(n=40):
    """n weekday rows of (iso_date, open, close) from integer formulas."""
    rows = []
    d = Date(2021, 1, 4)                # a Monday
    i = 0
    while len(rows) < n:
        if d.weekday() < 5:
            open_ = 100.0 + 3.0 * i + 0.25 * (i % 5)
            close = open_ * (1.0 + 0.002 * ((i % 7) - 3))
            rows.append((d.isoformat(), open_, close))
            i += 1
        d += timedelta(days=1)
    return rows


def horizon_return_spreadsheet(rows, t_iso, h):
    """Cell arithmetic: log(close h rows down) - log(open at the row of t)."""
    idx = [r[0] for r in rows].index(t_iso)
    return math.log(rows[idx + h][2]) - math.log(rows[idx][1])


def fixture_hac_design(n=20):
    """Deterministic n x 3 design and residual vector, no RNG involved."""
    X = np.empty((n, 3))
    e = np.empty(n)
    for t in range(n):
        X[t, 0] = 1.0
        X[t, 1] = ((t * 7) % 11) - 5.0
        X[t, 2] = ((t * 3) % 5) - 2.0
        e[t] = ((t % 4) - 1.5) * 0.7
    return X, e


def count_long_sentences(lines, min_words):
    """(kept count, total words over kept) by literal splitting."""
    kept = 0
    total_words = 0
    for line in lines:
        words = line.strip().split()
        if not words:
            continue
        if len(words) >= min_words:
            kept += 1
            total_words += len(words)
    return kept, total_words
