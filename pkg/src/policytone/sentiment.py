"""Dovish/hawkish/neutral classification and date-by-topic aggregation.

Classification runs through a provider (external transformer via command
or HTTP) with a bundled lexicon counter as the deterministic offline
fallback.  Signed score is p_dovish - p_hawkish, so hawkish text scores
negative.  Aggregates carry counts, the mean signed score, and the
dovish-hawkish balance.
"""

import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .providers import ProviderError, call_command, call_http

LABELS = ("dovish", "hawkish", "neutral")

# Aggregate row spanning every non-outlier topic on a date.
ALL_TOPICS = "all"


class SentimentError(Exception):
    pass


@dataclass(frozen=True)
class SentimentProbs:
    p_dovish: float
    p_hawkish: float
    p_neutral: float

    def __post_init__(self):
        for p in (self.p_dovish, self.p_hawkish, self.p_neutral):
            if not 0.0 <= p <= 1.0:
                raise SentimentError(f"probability {p} outside [0, 1]")
        total = self.p_dovish + self.p_hawkish + self.p_neutral
        if abs(total - 1.0) > 1e-6:
            raise SentimentError(f"probabilities sum to {total}, not 1")

    def as_tuple(self):
        return (self.p_dovish, self.p_hawkish, self.p_neutral)


def assign_label(probs):
    """Argmax label; any tie for the maximum resolves to neutral."""
    values = probs.as_tuple()
    top = max(values)
    winners = [lab for lab, v in zip(LABELS, values) if v == top]
    return winners[0] if len(winners) == 1 else "neutral"


@dataclass(frozen=True)
class SentimentRecord:
    sentence_id: str
    probs: SentimentProbs
    label: str
    signed_score: float


def make_record(sentence_id, probs):
    return SentimentRecord(
        sentence_id=sentence_id,
        probs=probs,
        label=assign_label(probs),
        signed_score=probs.p_dovish - probs.p_hawkish,
    )


# ---------------------------------------------------------------------------
# lexicon fallback

@dataclass(frozen=True)
class Lexicon:
    dovish_terms: tuple
    hawkish_terms: tuple

    def __post_init__(self):
        if not self.dovish_terms or not self.hawkish_terms:
            raise SentimentError("lexicon needs both dovish and hawkish terms")


def load_lexicon(path=None):
    """Read a lexicon file: [dovish] / [hawkish] sections, one term a line.

    Without a path the bundled word list ships with the package.
    """
    if path is None:
        text = (resources.files("policytone") / "data" / "lexicon.txt"
                ).read_text(encoding="utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    sections = {"dovish": [], "hawkish": []}
    current = None
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].lower()
            if current not in sections:
                raise SentimentError(f"unknown lexicon section {current!r}")
            continue
        if current is None:
            raise SentimentError("lexicon term before any section header")
        sections[current].append(line.lower())
    return Lexicon(dovish_terms=tuple(sections["dovish"]),
                   hawkish_terms=tuple(sections["hawkish"]))


def _count_matches(text, terms):
    total = 0
    for term in terms:
        total += len(re.findall(r"\b" + re.escape(term) + r"\b", text))
    return total


def lexicon_classifier(sentence_text, lexicon):
    """Probabilities from lexicon hit counts.

    With d dovish and h hawkish matches: p_dovish = d/(d+h+1),
    p_hawkish = h/(d+h+1), p_neutral = 1/(d+h+1).  Total: any text maps
    to valid probabilities; no matches means neutral.
    """
    text = sentence_text.lower()
    d = _count_matches(text, lexicon.dovish_terms)
    h = _count_matches(text, lexicon.hawkish_terms)
    z = d + h + 1
    return SentimentProbs(p_dovish=d / z, p_hawkish=h / z, p_neutral=1 / z)


# ---------------------------------------------------------------------------
# providers

def _probs_from_raw(row, where):
    if len(row) != 3:
        raise ProviderError(f"{where}: expected 3 probabilities, got {len(row)}")
    total = sum(row)
    if abs(total - 1.0) > 1e-3:
        raise ProviderError(
            f"{where}: probabilities sum to {total:.6f}, outside 1 +/- 1e-3")
    return SentimentProbs(*(p / total for p in row))


class LexiconSentimentProvider:
    def __init__(self, lexicon=None):
        self.lexicon = lexicon or load_lexicon()
        self.provider_id = "lexicon-v1"

    def classify_batch(self, texts):
        return [lexicon_classifier(t, self.lexicon) for t in texts]


class CommandSentimentProvider:
    """Subprocess provider returning [p_dovish, p_hawkish, p_neutral] rows."""

    def __init__(self, command, provider_id=None):
        self.command = command
        self.provider_id = provider_id or f"command:{command}"

    def classify_batch(self, texts):
        rows = call_command(self.command, texts)
        return [_probs_from_raw(row, f"row {i}") for i, row in enumerate(rows)]


class HTTPSentimentProvider:
    def __init__(self, url, provider_id=None):
        self.url = url
        self.provider_id = provider_id or f"http:{url}"

    def classify_batch(self, texts):
        rows = call_http(self.url, texts)
        return [_probs_from_raw(row, f"row {i}") for i, row in enumerate(rows)]


def classify(sentence_text, provider):
    """Classify one sentence; see classify_batch on providers for bulk use."""
    if not sentence_text or not sentence_text.strip():
        raise SentimentError("cannot classify empty text")
    return provider.classify_batch([sentence_text])[0]


# ---------------------------------------------------------------------------
# aggregation

@dataclass(frozen=True)
class TopicSentimentAggregate:
    date: object
    topic: object               # topic id, or ALL_TOPICS for the date total
    n_dovish: int
    n_hawkish: int
    n_neutral: int
    avg_score: float
    balance: float
    balance_defined: bool


def _make_aggregate(date, topic, members):
    n_d = sum(1 for r in members if r.label == "dovish")
    n_h = sum(1 for r in members if r.label == "hawkish")
    n_n = sum(1 for r in members if r.label == "neutral")
    avg = sum(r.signed_score for r in members) / len(members)
    if n_d + n_h > 0:
        balance, defined = (n_d - n_h) / (n_d + n_h), True
    else:
        balance, defined = 0.0, False
    return TopicSentimentAggregate(
        date=date, topic=topic, n_dovish=n_d, n_hawkish=n_h, n_neutral=n_n,
        avg_score=avg, balance=balance, balance_defined=defined)


def aggregate(records, topics, dates):
    """Fold SentimentRecords into per-(date, topic) aggregates.

    topics and dates map sentence_id to topic label and date.  Sentences
    in the outlier topic (-1) are excluded.  Besides the per-topic rows,
    each date gets an ALL_TOPICS row covering its non-outlier sentences.
    Output order: date, then topic id, with the ALL_TOPICS row last.
    """
    missing = [r.sentence_id for r in records
               if r.sentence_id not in topics or r.sentence_id not in dates]
    if missing:
        raise SentimentError(
            f"{len(missing)} records lack topic or date (first: {missing[0]!r})")

    by_group = {}
    by_date = {}
    for r in records:
        topic = topics[r.sentence_id]
        if topic == -1:
            continue
        date = dates[r.sentence_id]
        by_group.setdefault((date, topic), []).append(r)
        by_date.setdefault(date, []).append(r)

    out = []
    for date in sorted(by_date):
        day_topics = sorted(t for (d, t) in by_group if d == date)
        for topic in day_topics:
            out.append(_make_aggregate(date, topic, by_group[(date, topic)]))
        out.append(_make_aggregate(date, ALL_TOPICS, by_date[date]))
    return out
