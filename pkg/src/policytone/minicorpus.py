"""Synthetic mini-corpus generator for end-to-end tests and demos.

Writes a small document collection with four planted themes (disjoint
content vocabulary), a weekday price random walk, a meeting table and a
ready-to-run config. Everything is a pure function of the seed.
"""

import json
from datetime import date as Date, timedelta
from pathlib import Path

import numpy as np

# Disjoint noun pools; every sentence of a theme leans on its pool, so
# token-hash embeddings separate the themes without any semantics.  The
# first pool word anchors every sentence of its theme.  None of these
# words may appear in the bundled sentiment lexicon.
THEMES = {
    "prices": ["inflation", "prices", "cpi", "food", "fuel", "core",
               "headline", "basket", "vegetables", "momentum"],
    "growth": ["growth", "demand", "output", "investment", "consumption",
               "manufacturing", "activity", "industry", "capacity",
               "orders"],
    "banking": ["banks", "credit", "lending", "deposits", "loans",
                "borrowers", "transmission", "capital", "branches",
                "collateral"],
    "markets": ["rupee", "reserves", "bonds", "yields", "equity",
                "volatility", "dollar", "flows", "futures", "forex"],
}

_DOVISH_WORDS = ["subdued", "accommodative", "supportive", "sluggish",
                 "easing"]
_HAWKISH_WORDS = ["tightening", "inflationary", "restrictive", "vigilant"]
# Outside the lexicon: sentences built on these stay neutral.
_NEUTRAL_WORDS = ["steady", "unchanged", "balanced", "mixed", "stable"]

# Scaffold words and verbs are shared by every theme and every sentence
# form, so they wash out of the centered reduction instead of forming
# clusters of their own.
_SCAFFOLD = ["outlook", "quarter", "review", "committee", "assessment",
             "conditions", "period", "data", "readings", "trends"]
_VERBS = ["kept", "turned", "stayed", "looked", "held", "left"]

_QUESTIONS = [
    "Journalist: Could you elaborate on the committee view?",
    "Journalist: What guided the decision this time?",
    "Journalist: Any comment on the outlook ahead?",
]

GOVERNOR_NAME = "Shaktikanta Das"
DEPUTY_NAME = "Michael Patra"


def _theme_sentence(rng, theme, stance):
    """One sentence: 5 theme words, 2-3 scaffold words, tone words.

    Tone words come in same-polarity pairs so the lexicon classifier sees
    an unambiguous signal; roughly a tenth of sentences carry no tone and
    stay neutral.
    """
    pool = THEMES[theme]
    rest = [pool[i + 1] for i in rng.choice(len(pool) - 1, size=4,
                                            replace=False)]
    t = [pool[0]] + rest
    s = [_SCAFFOLD[i] for i in rng.choice(len(_SCAFFOLD), size=2,
                                          replace=False)]
    v = [_VERBS[i] for i in rng.choice(len(_VERBS), size=2, replace=False)]
    if rng.random() < 0.1:
        tone_pool = _NEUTRAL_WORDS
    elif rng.random() < (1.0 + stance) / 2.0:
        tone_pool = _DOVISH_WORDS
    else:
        tone_pool = _HAWKISH_WORDS
    tones = [tone_pool[i] for i in rng.choice(len(tone_pool), size=2,
                                              replace=False)]
    forms = [
        f"The {t[0]} {s[0]} {v[0]} {t[1]} and {t[2]} {tones[0]} while "
        f"{t[3]} with {t[4]} {v[1]} {tones[1]} this {s[1]}.",
        f"In the {s[0]} {s[1]}, {t[0]} and {t[1]} {v[0]} {tones[0]} while "
        f"{t[2]} with {t[3]} and {t[4]} {v[1]} {tones[1]}.",
        f"The {t[0]} {s[0]} {v[0]} {t[1]} with {t[2]} and {t[3]} "
        f"{tones[0]} while {t[4]} {v[1]} {tones[1]} this {s[1]}.",
    ]
    return forms[rng.integers(len(forms))]


def _meeting_dates(n_meetings, start_year=2019):
    months = [2, 4, 6, 8, 10, 12]
    dates = []
    year, mi = start_year, 0
    while len(dates) < n_meetings:
        dates.append(Date(year, months[mi], 7))
        mi += 1
        if mi == len(months):
            mi, year = 0, year + 1
    return dates


def _weekdays(start, end):
    days = []
    d = start
    while d <= end:
        if d.weekday() < 5:
            days.append(d)
        d += timedelta(days=1)
    return days


def generate(root, seed=7, n_meetings=24, sentences_per_statement=15,
             transcripts_every=4):
    """Write corpus/, prices.csv, meetings.csv and config.yaml under root."""
    root = Path(root)
    corpus = root / "corpus"
    corpus.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    theme_names = list(THEMES)

    dates = _meeting_dates(n_meetings)
    stances = rng.uniform(-0.9, 0.9, size=n_meetings)

    n_sentences = 0
    for mi, (mdate, stance) in enumerate(zip(dates, stances)):
        doc_id = f"mtg{mi:03d}_stmt"
        paras = []
        for start in range(0, sentences_per_statement, 5):
            block = []
            for si in range(start, min(start + 5, sentences_per_statement)):
                theme = theme_names[si % len(theme_names)]
                block.append(_theme_sentence(rng, theme, stance))
            paras.append(" ".join(block))
            n_sentences += len(block)
        (corpus / f"{doc_id}.txt").write_text("\n\n".join(paras),
                                              encoding="utf-8")
        meta = {"doc_type": "statement", "date": mdate.isoformat(),
                "format": "plain"}
        (corpus / f"{doc_id}.meta.json").write_text(
            json.dumps(meta, sort_keys=True), encoding="utf-8")

        if mi % transcripts_every == 0:
            doc_id = f"mtg{mi:03d}_qa"
            lines = []
            for qi in range(3):
                lines.append(_QUESTIONS[qi % len(_QUESTIONS)])
                speaker = GOVERNOR_NAME if qi % 2 == 0 else DEPUTY_NAME
                theme = theme_names[(mi + qi) % len(theme_names)]
                answer = " ".join(_theme_sentence(rng, theme, stance)
                                  for _ in range(2))
                lines.append(f"{speaker}: {answer}")
                n_sentences += 2
            (corpus / f"{doc_id}.txt").write_text("\n".join(lines),
                                                  encoding="utf-8")
            meta = {"doc_type": "transcript", "date": mdate.isoformat(),
                    "format": "speaker_tagged",
                    "speakers": [GOVERNOR_NAME, DEPUTY_NAME]}
            (corpus / f"{doc_id}.meta.json").write_text(
                json.dumps(meta, sort_keys=True), encoding="utf-8")

    # Price walk extends well past the last meeting so every horizon of the
    # default mini spec stays estimable.
    days = _weekdays(Date(2019, 1, 1), dates[-1] + timedelta(days=80))
    steps = rng.normal(0.0, 0.01, size=len(days))
    log_close = np.cumsum(steps) + np.log(40000.0)
    close = np.exp(log_close)
    gaps = rng.normal(0.0, 0.003, size=len(days))
    open_ = np.concatenate([[40000.0], close[:-1]]) * np.exp(gaps)
    price_lines = ["date,open,close"]
    for d, o, c in zip(days, open_, close):
        price_lines.append(f"{d.isoformat()},{o:.4f},{c:.4f}")
    (root / "prices.csv").write_text("\n".join(price_lines) + "\n",
                                     encoding="utf-8")

    shocks = rng.normal(0.0, 0.25, size=n_meetings)
    meeting_lines = ["meeting_date,governor,mp_shock"]
    for mdate, shock in zip(dates, shocks):
        meeting_lines.append(f"{mdate.isoformat()},das,{shock:.6f}")
    (root / "meetings.csv").write_text("\n".join(meeting_lines) + "\n",
                                       encoding="utf-8")

    write_config(root, seed=seed)
    return {"root": root, "n_meetings": n_meetings,
            "n_sentences": n_sentences, "dates": dates}


def write_config(root, seed=7):
    """Config tuned to the mini corpus: deterministic methods, small dims."""
    root = Path(root)
    config = f"""\
corpus_dir: corpus
output_dir: out
min_words: 3
seed: {seed}

embedding:
  provider: hash
  dim: 96

reduction:
  method: svd
  n_neighbors: 10
  n_components: 5

clustering:
  method: leader
  min_cluster_size: 150
  scale_to_corpus: true

topics:
  target: 4
  n_top_terms: 8

sentiment:
  provider: lexicon

panel:
  prices_csv: prices.csv
  meetings_csv: meetings.csv

regression:
  clusters: all
  horizons: 12
  regressor: balance
  bootstrap_b: 150
"""
    path = root / "config.yaml"
    path.write_text(config, encoding="utf-8")
    return path
