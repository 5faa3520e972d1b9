"""Sentiment and topic analysis of central-bank communications, with
local-projection estimates of equity-market responses."""

__version__ = "0.1.0"

from .corpus import (CorpusStats, DocumentMeta, Paragraph, SentenceRecord,
                     corpus_stats, extract_qa_answers, filter_sentences,
                     parse_document, split_sentences, suggest_threshold)
from .embedding import (EmbeddingMatrix, embed_batch, hash_embedder,
                        load_embeddings, save_embeddings)
from .topicmodel import (ClusterParams, CtfidfResult, ReductionParams,
                         TopicModel, cluster, ctfidf, doc_map_2d, fit_topics,
                         reduce_dims, reduce_topics, top_terms,
                         topics_over_time)
from .sentiment import (Lexicon, SentimentProbs, SentimentRecord,
                        TopicSentimentAggregate, aggregate, assign_label,
                        classify, lexicon_classifier, load_lexicon)
from .econo import (BootstrapSpec, IRFResult, LPSpec, MeetingEvent,
                    PanelDesign, PriceSeries, align_meeting, bootstrap_ci,
                    build_panel, hac_covariance, horizon_return, lp_estimate,
                    make_meeting, ols, run_irf)
from .config import PipelineConfig, load_config
from .pipeline import run_all, run_stage

__all__ = [
    "CorpusStats", "DocumentMeta", "Paragraph", "SentenceRecord",
    "corpus_stats", "extract_qa_answers", "filter_sentences",
    "parse_document", "split_sentences", "suggest_threshold",
    "EmbeddingMatrix", "embed_batch", "hash_embedder", "load_embeddings",
    "save_embeddings",
    "ClusterParams", "CtfidfResult", "ReductionParams", "TopicModel",
    "cluster", "ctfidf", "doc_map_2d", "fit_topics", "reduce_dims",
    "reduce_topics", "top_terms", "topics_over_time",
    "Lexicon", "SentimentProbs", "SentimentRecord",
    "TopicSentimentAggregate", "aggregate", "assign_label", "classify",
    "lexicon_classifier", "load_lexicon",
    "BootstrapSpec", "IRFResult", "LPSpec", "MeetingEvent", "PanelDesign",
    "PriceSeries", "align_meeting", "bootstrap_ci", "build_panel",
    "hac_covariance", "horizon_return", "lp_estimate", "make_meeting",
    "ols", "run_irf",
    "PipelineConfig", "load_config", "run_all", "run_stage",
]
