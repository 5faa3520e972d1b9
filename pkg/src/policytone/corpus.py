"""Parsing of monetary-policy documents into paragraphs and sentences.

Handles three source formats (plain text, HTML, speaker-tagged transcripts),
question-and-answer speaker filtering, abbreviation-aware sentence
segmentation, minimum-length filtering and corpus statistics.
"""

import math
import re
import statistics
from dataclasses import dataclass, field
from datetime import date as Date
from html.parser import HTMLParser

DOC_FORMATS = ("html", "plain", "speaker_tagged")
DOC_TYPES = ("statement", "transcript")

# Periods after these tokens (trailing dot ignored, case-insensitive) do not
# end a sentence.  Extend via the `abbreviations` argument of split_sentences.
DEFAULT_ABBREVIATIONS = (
    "Dr.", "Shri", "Smt.", "Mr.", "Ms.", "Mrs.", "Prof.", "Hon.",
    "per cent", "U.S.", "i.e.", "e.g.", "vs.", "No.", "Rs.", "approx.",
)

# Honorifics stripped from speaker names before matching.
HONORIFICS = ("dr.", "dr", "shri", "smt.", "smt", "mr.", "mr", "ms.", "ms")


class CorpusError(Exception):
    """Base error for document parsing and segmentation."""


class EmptyDocumentError(CorpusError):
    """Document contains no usable text after cleaning."""

    def __init__(self, doc_id):
        self.doc_id = doc_id
        super().__init__(f"document {doc_id!r} is empty after cleaning")


class UnknownFormatError(CorpusError):
    """Declared source format is not supported."""


class MissingSpeakerError(CorpusError):
    """Speaker filtering requested on paragraphs without speaker fields."""


@dataclass(frozen=True)
class DocumentMeta:
    doc_id: str
    doc_type: str           # statement | transcript
    publication_date: Date
    source_path: str = ""

    def __post_init__(self):
        if self.doc_type not in DOC_TYPES:
            raise UnknownFormatError(f"unknown doc_type {self.doc_type!r}")


@dataclass(frozen=True)
class Paragraph:
    paragraph_id: str
    text: str
    speaker: str | None
    doc_id: str
    date: Date


@dataclass(frozen=True)
class SentenceRecord:
    sentence_id: str
    paragraph_id: str
    doc_id: str
    date: Date
    speaker: str | None
    text: str
    word_count: int


@dataclass(frozen=True)
class CorpusStats:
    n_paragraphs: int
    n_sentences: int
    total_words: int
    avg_sentence_length: float


@dataclass(frozen=True)
class ThresholdSuggestion:
    suggested: int
    mean: float
    median: float
    mode: float
    samples_near_threshold: list = field(default_factory=list)


_FOOTNOTE_MARK = re.compile(r"\[\d+\]")
_WS = re.compile(r"\s+")


def _clean_text(text):
    """Drop footnote markers and consolidate whitespace."""
    return _WS.sub(" ", _FOOTNOTE_MARK.sub("", text)).strip()


class _BodyParagraphExtractor(HTMLParser):
    """Collects the text of <p> elements, ignoring headers and chrome."""

    _SKIP = {"h1", "h2", "h3", "h4", "h5", "h6", "script", "style",
             "header", "footer", "nav", "title"}

    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.paragraphs = []
        self._in_p = False
        self._skip_depth = 0
        self._buf = []

    def handle_starttag(self, tag, attrs):
        if tag in self._SKIP:
            self._skip_depth += 1
        elif tag == "p" and self._skip_depth == 0:
            self._in_p = True
            self._buf = []

    def handle_endtag(self, tag):
        if tag in self._SKIP and self._skip_depth > 0:
            self._skip_depth -= 1
        elif tag == "p" and self._in_p:
            self._in_p = False
            text = _clean_text("".join(self._buf))
            if text:
                self.paragraphs.append(text)

    def handle_data(self, data):
        if self._in_p and self._skip_depth == 0:
            self._buf.append(data)


_SPEAKER_LINE = re.compile(r"^([A-Z][\w.\- ]{0,60}?):\s+(.*)$")


def _parse_speaker_tagged(raw_text):
    """Lines beginning "Name: " open a turn; other lines continue it."""
    turns = []          # (speaker or None, [line, ...])
    for line in raw_text.splitlines():
        if not line.strip():
            continue
        m = _SPEAKER_LINE.match(line.strip())
        if m:
            turns.append((m.group(1).strip(), [m.group(2)]))
        elif turns:
            turns[-1][1].append(line.strip())
        else:
            turns.append((None, [line.strip()]))
    return [(speaker, " ".join(lines)) for speaker, lines in turns]


def parse_document(raw_text, meta, format):
    """Split one raw document into cleaned, ordered paragraphs.

    For speaker_tagged sources each paragraph carries its speaker; the
    other formats yield speaker=None.  Raises EmptyDocumentError when
    nothing survives cleaning.
    """
    if format not in DOC_FORMATS:
        raise UnknownFormatError(f"unknown document format {format!r}")

    if format == "plain":
        blocks = [(None, b) for b in re.split(r"\n\s*\n", raw_text)]
    elif format == "html":
        extractor = _BodyParagraphExtractor()
        extractor.feed(raw_text)
        extractor.close()
        blocks = [(None, p) for p in extractor.paragraphs]
    else:
        blocks = _parse_speaker_tagged(raw_text)

    paragraphs = []
    for speaker, block in blocks:
        text = _clean_text(block)
        if not text:
            continue
        ordinal = len(paragraphs)
        paragraphs.append(Paragraph(
            paragraph_id=f"{meta.doc_id}-p{ordinal:04d}",
            text=text,
            speaker=speaker,
            doc_id=meta.doc_id,
            date=meta.publication_date,
        ))
    if not paragraphs:
        raise EmptyDocumentError(meta.doc_id)
    return paragraphs


def normalize_speaker(name):
    """Lowercase a speaker name and strip leading honorifics."""
    tokens = name.strip().lower().split()
    while tokens and tokens[0] in HONORIFICS:
        tokens = tokens[1:]
    return " ".join(tokens)


def extract_qa_answers(paragraphs, allowed_speakers):
    """Keep only turns spoken by one of `allowed_speakers`, order preserved.

    Matching is case-insensitive after honorific stripping.  Raises
    MissingSpeakerError when no paragraph carries a speaker at all,
    which indicates the document is not a transcript.
    """
    if paragraphs and all(p.speaker is None for p in paragraphs):
        raise MissingSpeakerError(
            "no paragraph has a speaker; expected a transcript document")
    allowed = {normalize_speaker(s) for s in allowed_speakers}
    return [p for p in paragraphs
            if p.speaker is not None and normalize_speaker(p.speaker) in allowed]


def _compile_abbreviations(abbreviations):
    # "Dr." and "dr" are the same entry: trailing dot dropped, lowercased.
    return tuple(a.lower().rstrip(".") for a in abbreviations)


_BOUNDARY = re.compile(r"([.!?]+[\"')\]]*)(\s+)(?=[\"'(A-Z0-9])")


def split_sentences(paragraph, abbreviations=DEFAULT_ABBREVIATIONS):
    """Segment a paragraph into SentenceRecords.

    A terminal-punctuation run (plus any closing quotes or brackets)
    followed by whitespace and an upper-case, digit or quote opener is a
    boundary unless the preceding token is a configured abbreviation.
    Joining the sentence texts with single spaces reconstructs the
    paragraph text.
    """
    text = paragraph.text
    if not text or not text.strip():
        raise CorpusError(
            f"paragraph {paragraph.paragraph_id!r} has empty text")

    abbrevs = _compile_abbreviations(abbreviations)
    cuts = []
    for m in _BOUNDARY.finditer(text):
        head = text[:m.end(1)]
        if head.endswith("."):
            head = head[:-1]
        head = head.lower()
        if any(head.endswith(a) and
               (len(head) == len(a) or not head[-len(a) - 1].isalnum())
               for a in abbrevs):
            continue
        cuts.append((m.end(1), m.end(2)))

    pieces = []
    start = 0
    for end, next_start in cuts:
        pieces.append(text[start:end])
        start = next_start
    pieces.append(text[start:])

    records = []
    for i, piece in enumerate(p for p in pieces if p.strip()):
        sentence = piece.strip()
        records.append(SentenceRecord(
            sentence_id=f"{paragraph.paragraph_id}-s{i:03d}",
            paragraph_id=paragraph.paragraph_id,
            doc_id=paragraph.doc_id,
            date=paragraph.date,
            speaker=paragraph.speaker,
            text=sentence,
            word_count=len(sentence.split()),
        ))
    return records


def filter_sentences(records, min_words=3):
    """Drop sentences shorter than `min_words` whitespace tokens."""
    if min_words < 1:
        raise ValueError("min_words must be >= 1")
    return [r for r in records if r.word_count >= min_words]


def corpus_stats(records):
    n_paragraphs = len({r.paragraph_id for r in records})
    n_sentences = len(records)
    total_words = sum(r.word_count for r in records)
    avg = total_words / n_sentences if n_sentences else 0.0
    return CorpusStats(n_paragraphs, n_sentences, total_words, avg)


def suggest_threshold(records, n_samples=10):
    """Propose a minimum-word threshold from the length distribution.

    Uses a quarter of the median sentence length (floored, at least 1) and
    returns sample sentences within one word of the suggestion for manual
    review.  Mode ties resolve to the smallest value.
    """
    if not records:
        raise CorpusError("cannot suggest a threshold for an empty corpus")
    lengths = [r.word_count for r in records]
    med = statistics.median(lengths)
    suggested = max(1, math.floor(0.25 * med))
    samples = [r.text for r in records
               if suggested - 1 <= r.word_count <= suggested + 1]
    return ThresholdSuggestion(
        suggested=suggested,
        mean=statistics.fmean(lengths),
        median=float(med),
        mode=float(min(statistics.multimode(lengths))),
        samples_near_threshold=samples[:n_samples],
    )
