import statistics
from datetime import date as Date
from pathlib import Path

import pytest

import oracles
from policytone import corpus

D = Date(2021, 6, 4)

FIXTURES = Path(__file__).parent / "fixtures"


def meta(doc_id="doc1", doc_type="statement"):
    return corpus.DocumentMeta(doc_id=doc_id, doc_type=doc_type,
                               publication_date=D)


def rec(text, *, sid="p0-s000", pid="p0"):
    return corpus.SentenceRecord(
        sentence_id=sid, paragraph_id=pid, doc_id="d", date=D,
        speaker=None, text=text, word_count=len(text.split()))


# ---------------------------------------------------------------------------
# parsing

def test_parse_plain_splits_on_blank_lines():
    raw = "First block here.\n\nSecond block.\nStill second block.\n"
    paras = corpus.parse_document(raw, meta(), "plain")
    assert [p.text for p in paras] == [
        "First block here.", "Second block. Still second block."]
    assert [p.paragraph_id for p in paras] == ["doc1-p0000", "doc1-p0001"]
    assert all(p.speaker is None for p in paras)
    assert all(p.date == D for p in paras)


def test_parse_html_keeps_body_paragraphs_only():
    raw = """
    <html><head><title>Press Release</title></head><body>
    <h1>Monetary Policy Statement</h1>
    <p>Growth remained firm &amp; broad-based.</p>
    <script>var x = 1;</script>
    <p>Inflation eased to 4 per cent.</p>
    <footer><p>Page 1 of 2</p></footer>
    </body></html>
    """
    paras = corpus.parse_document(raw, meta(), "html")
    assert [p.text for p in paras] == [
        "Growth remained firm & broad-based.",
        "Inflation eased to 4 per cent."]


def test_parse_speaker_tagged_tracks_turns():
    raw = ("Moderator: We will begin now.\n"
           "Shaktikanta Das: Inflation is moderating.\n"
           "It should ease further.\n"
           "Journalist: What about growth?\n")
    paras = corpus.parse_document(raw, meta(doc_type="transcript"),
                                  "speaker_tagged")
    assert [(p.speaker, p.text) for p in paras] == [
        ("Moderator", "We will begin now."),
        ("Shaktikanta Das", "Inflation is moderating. It should ease further."),
        ("Journalist", "What about growth?")]


def test_parse_unknown_format_raises():
    with pytest.raises(corpus.UnknownFormatError):
        corpus.parse_document("text", meta(), "pdf")


def test_parse_empty_document_raises():
    with pytest.raises(corpus.EmptyDocumentError):
        corpus.parse_document("  \n\n  ", meta(), "plain")


def test_doc_meta_rejects_unknown_type():
    with pytest.raises(corpus.UnknownFormatError):
        corpus.DocumentMeta(doc_id="x", doc_type="memo", publication_date=D)


def test_cleaning_strips_footnotes_and_whitespace():
    raw = "Growth[12] improved  markedly.\tCredit [3] expanded."
    paras = corpus.parse_document(raw, meta(), "plain")
    assert paras[0].text == "Growth improved markedly. Credit expanded."


# ---------------------------------------------------------------------------
# question-and-answer filtering

def _turns(*pairs):
    return [corpus.Paragraph(paragraph_id=f"t-p{i:04d}", text=text,
                             speaker=speaker, doc_id="t", date=D)
            for i, (speaker, text) in enumerate(pairs)]


def test_qa_keeps_only_allowed_speakers():
    paras = _turns(("Journalist", "Question one?"),
                   ("Dr. Michael Patra", "Answer one."),
                   ("Journalist", "Question two?"),
                   ("Shaktikanta Das", "Answer two."))
    kept = corpus.extract_qa_answers(paras, ["michael patra",
                                             "SHAKTIKANTA DAS"])
    assert [p.text for p in kept] == ["Answer one.", "Answer two."]


def test_qa_honorifics_and_case_ignored():
    paras = _turns(("SMT. ANITA RAO", "Yes."), ("mr patel", "No."))
    kept = corpus.extract_qa_answers(paras, ["Anita Rao"])
    assert [p.text for p in kept] == ["Yes."]


def test_qa_all_speakerless_raises():
    paras = _turns((None, "Plain paragraph."), (None, "Another one."))
    with pytest.raises(corpus.MissingSpeakerError):
        corpus.extract_qa_answers(paras, ["das"])


def test_qa_partial_speakers_filters_silently():
    paras = _turns((None, "Preamble."), ("Das", "Answer."))
    kept = corpus.extract_qa_answers(paras, ["Das"])
    assert [p.text for p in kept] == ["Answer."]


# ---------------------------------------------------------------------------
# sentence segmentation

def para(text, pid="doc1-p0000"):
    return corpus.Paragraph(paragraph_id=pid, text=text, speaker=None,
                            doc_id="doc1", date=D)


def test_split_basic():
    records = corpus.split_sentences(para(
        "Inflation eased in March. Growth held up! Will it last?"))
    assert [r.text for r in records] == [
        "Inflation eased in March.", "Growth held up!", "Will it last?"]
    assert [r.sentence_id for r in records] == [
        "doc1-p0000-s000", "doc1-p0000-s001", "doc1-p0000-s002"]
    assert [r.word_count for r in records] == [4, 3, 3]


def test_split_respects_abbreviations():
    records = corpus.split_sentences(para(
        "Dr. Patra presented the outlook. Inflation printed at 5 per cent. "
        "Shri Das concurred."))
    # "Dr." and "per cent." suppress boundaries; real stops still split.
    assert [r.text for r in records] == [
        "Dr. Patra presented the outlook.",
        "Inflation printed at 5 per cent. Shri Das concurred."]


def test_split_custom_abbreviations():
    text = "See Annex. A for details. The rest follows."
    default = corpus.split_sentences(para(text))
    assert len(default) == 3
    custom = corpus.split_sentences(
        para(text), abbreviations=corpus.DEFAULT_ABBREVIATIONS + ("Annex.",))
    assert [r.text for r in custom] == [
        "See Annex. A for details.", "The rest follows."]


def test_split_abbreviation_needs_word_boundary():
    # "index." ends with the fictional abbreviation "dex" only as a
    # substring; the boundary must still split here.
    records = corpus.split_sentences(
        para("The index. Rose again."),
        abbreviations=("dex.",))
    assert len(records) == 2


def test_split_no_boundary_before_lowercase():
    records = corpus.split_sentences(para("Prices rose approx. two percent."))
    assert len(records) == 1


def test_split_boundary_before_quote_and_digit():
    records = corpus.split_sentences(para(
        'The committee agreed. "Risks persist." 2024 may differ.'))
    assert [r.text for r in records] == [
        "The committee agreed.", '"Risks persist."', "2024 may differ."]


def test_split_empty_paragraph_raises():
    with pytest.raises(corpus.CorpusError):
        corpus.split_sentences(para("   "))


def test_split_round_trip_rebuilds_paragraph():
    texts = [
        "Inflation eased in March. Growth held up! Will it last?",
        "Dr. Patra presented. The MPC voted 5-1. Rates held at 6.5 percent.",
        'A single sentence with no terminal punctuation',
    ]
    for text in texts:
        p = para(text)
        records = corpus.split_sentences(p)
        assert " ".join(r.text for r in records) == p.text


# ---------------------------------------------------------------------------
# filtering and statistics

def test_filter_drops_short_sentences():
    records = [rec("Thank you."), rec("Inflation remains above target.")]
    kept = corpus.filter_sentences(records, min_words=3)
    assert [r.text for r in kept] == ["Inflation remains above target."]


def test_filter_min_words_one_is_identity():
    records = [rec("Yes."), rec("Thank you."), rec("Inflation moved up.")]
    assert corpus.filter_sentences(records, min_words=1) == records


def test_filter_rejects_nonpositive_threshold():
    with pytest.raises(ValueError):
        corpus.filter_sentences([], min_words=0)


def test_filter_matches_independent_count_on_fixture(frozen):
    lines = (FIXTURES / "sentences200.txt").read_text(
        encoding="utf-8").splitlines()
    records = []
    for i, line in enumerate(lines):
        records.extend(corpus.split_sentences(para(line, pid=f"f-p{i:04d}")))
    assert len(records) == 200
    kept = corpus.filter_sentences(records, min_words=3)
    assert len(kept) == frozen["sentences200_kept_min3"]
    assert (sum(r.word_count for r in kept)
            == frozen["sentences200_total_words_min3"])


def test_corpus_stats_empty():
    stats = corpus.corpus_stats([])
    assert stats == corpus.CorpusStats(0, 0, 0, 0.0)


def test_corpus_stats_matches_brute_force():
    records = [rec("One two three.", sid="a", pid="p1"),
               rec("Four five.", sid="b", pid="p1"),
               rec("Six seven eight nine.", sid="c", pid="p2")]
    stats = corpus.corpus_stats(records)
    words = [len(r.text.split()) for r in records]
    assert stats.n_paragraphs == 2
    assert stats.n_sentences == 3
    assert stats.total_words == sum(words)
    assert stats.avg_sentence_length == pytest.approx(
        sum(words) / len(words))


# ---------------------------------------------------------------------------
# threshold suggestion

def _recs_of_lengths(lengths):
    return [rec(" ".join(["word"] * n), sid=f"s{i}") for i, n in
            enumerate(lengths)]


def test_suggest_threshold_degenerate_distribution():
    s = corpus.suggest_threshold(_recs_of_lengths([12] * 8))
    assert s.median == 12 and s.suggested == 3


def test_suggest_threshold_quarter_of_median():
    s = corpus.suggest_threshold(_recs_of_lengths([2, 2, 20, 20, 20]))
    assert s.median == 20 and s.suggested == 5


def test_suggest_threshold_floor_is_one():
    s = corpus.suggest_threshold(_recs_of_lengths([1, 1, 2]))
    assert s.suggested == 1


def test_suggest_threshold_mode_ties_take_smallest():
    s = corpus.suggest_threshold(_recs_of_lengths([4, 4, 9, 9, 30]))
    assert s.mode == 4


def test_suggest_threshold_samples_near_suggestion():
    lengths = [2, 3, 4, 8, 8, 8, 8, 12]
    s = corpus.suggest_threshold(_recs_of_lengths(lengths))
    # median 8 -> suggested 2; samples have 1..3 words
    assert s.suggested == 2
    assert s.samples_near_threshold
    for text in s.samples_near_threshold:
        assert 1 <= len(text.split()) <= 3


def test_suggest_threshold_stats_match_statistics_module(frozen):
    lines = (FIXTURES / "sentences200.txt").read_text(
        encoding="utf-8").splitlines()
    records = [rec(line, sid=f"s{i}") for i, line in enumerate(lines)]
    s = corpus.suggest_threshold(records)
    lengths = [len(l.split()) for l in lines]
    assert s.mean == pytest.approx(statistics.fmean(lengths), abs=1e-12)
    assert s.median == pytest.approx(statistics.median(lengths), abs=1e-12)
    assert s.mode == min(statistics.multimode(lengths))


def test_suggest_threshold_empty_raises():
    with pytest.raises(corpus.CorpusError):
        corpus.suggest_threshold([])
