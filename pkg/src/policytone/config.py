"""Pipeline configuration: dataclasses, defaults, YAML/JSON loading.

A single file configures every stage; the global seed fans out to the
stochastic stages through a per-stage derivation in the pipeline.
"""

import json
from dataclasses import dataclass, field, fields as dc_fields
from datetime import date as Date
from pathlib import Path

from .econo import DEFAULT_COVID_WINDOW


class ConfigError(Exception):
    pass


# Sentiment series analysed by default when present among fitted topic
# names; corpora whose topics carry other names fall back to every topic.
DEFAULT_ANALYSIS_CLUSTERS = (
    "Inflation Dynamics and Price Stability",
    "Trade Balance and External Sector",
    "Economic Growth and Demand Dynamics",
    "Foreign Exchange Reserves Management",
    "Foreign Investment in Securities Markets",
    "Interest Rate Policy Framework",
    "Financial Markets and Volatility",
    "Banking Sector Credit Dynamics",
)


@dataclass
class EmbeddingConfig:
    provider: str = "hash"            # hash | command | http
    dim: int = 384
    command: str | None = None
    url: str | None = None
    batch_size: int = 64

    def __post_init__(self):
        if self.provider not in ("hash", "command", "http"):
            raise ConfigError(f"unknown embedding provider {self.provider!r}")
        if self.provider == "command" and not self.command:
            raise ConfigError("embedding.command required for command provider")
        if self.provider == "http" and not self.url:
            raise ConfigError("embedding.url required for http provider")


@dataclass
class ReductionConfig:
    method: str = "svd"               # svd | umap
    n_neighbors: int = 15
    n_components: int = 5


@dataclass
class ClusterConfig:
    method: str = "leader"            # leader | hdbscan
    min_cluster_size: int = 150
    scale_to_corpus: bool = True
    leader_radius: float | None = None


@dataclass
class TopicConfig:
    target: int = 10
    n_top_terms: int = 10
    mmr_lambda: float = 0.5
    name_overrides: dict = field(default_factory=dict)


@dataclass
class SentimentConfig:
    provider: str = "lexicon"         # lexicon | command | http
    lexicon_path: str | None = None   # None = bundled list
    command: str | None = None
    url: str | None = None
    batch_size: int = 64

    def __post_init__(self):
        if self.provider not in ("lexicon", "command", "http"):
            raise ConfigError(f"unknown sentiment provider {self.provider!r}")
        if self.provider == "command" and not self.command:
            raise ConfigError("sentiment.command required for command provider")
        if self.provider == "http" and not self.url:
            raise ConfigError("sentiment.url required for http provider")


@dataclass
class PanelConfig:
    prices_csv: str = "prices.csv"
    meetings_csv: str = "meetings.csv"
    covid_start: Date = DEFAULT_COVID_WINDOW[0]
    covid_end: Date = DEFAULT_COVID_WINDOW[1]


@dataclass
class RegressionConfig:
    clusters: object = "default"      # "default" | "all" | list of names
    horizons: int = 30
    regressor: str = "balance"        # balance | avg_score
    include_dummies: bool = True
    include_interactions: bool = False
    controls: tuple = ()
    hac_lag_rule: object = "horizon"
    bootstrap_b: int = 2000
    bootstrap_kind: str = "percentile"
    bootstrap_level: float = 90.0
    drop_undefined_balance: bool = False

    def __post_init__(self):
        self.controls = tuple(self.controls)


@dataclass
class PipelineConfig:
    corpus_dir: str = "corpus"
    output_dir: str = "out"
    min_words: int = 3
    qa_speakers: tuple = ()           # fallback when a sidecar lists none
    study_start: Date | None = None
    study_end: Date | None = None
    seed: int = 0
    embedding: EmbeddingConfig = field(default_factory=EmbeddingConfig)
    reduction: ReductionConfig = field(default_factory=ReductionConfig)
    clustering: ClusterConfig = field(default_factory=ClusterConfig)
    topics: TopicConfig = field(default_factory=TopicConfig)
    sentiment: SentimentConfig = field(default_factory=SentimentConfig)
    panel: PanelConfig = field(default_factory=PanelConfig)
    regression: RegressionConfig = field(default_factory=RegressionConfig)

    def __post_init__(self):
        self.qa_speakers = tuple(self.qa_speakers)
        if self.min_words < 1:
            raise ConfigError("min_words must be >= 1")

    def resolve(self, base_dir):
        """Anchor relative paths at the config file's directory."""
        base = Path(base_dir)
        for attr in ("corpus_dir", "output_dir"):
            p = Path(getattr(self, attr))
            if not p.is_absolute():
                setattr(self, attr, str(base / p))
        for attr in ("prices_csv", "meetings_csv"):
            p = Path(getattr(self.panel, attr))
            if not p.is_absolute():
                setattr(self.panel, attr, str(base / p))
        if self.sentiment.lexicon_path:
            p = Path(self.sentiment.lexicon_path)
            if not p.is_absolute():
                self.sentiment.lexicon_path = str(base / p)
        return self


def _coerce_date(value):
    if value is None or isinstance(value, Date):
        return value
    return Date.fromisoformat(str(value))


def _build(cls, data, where):
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"{where} must be a mapping")
    known = {f.name for f in dc_fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
    return cls(**data)


def load_config(path, seed=None):
    """Parse a YAML or JSON config file into a validated PipelineConfig.

    `seed` overrides the file's global seed (the CLI --seed flag).
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file {path} does not exist")
    text = path.read_text(encoding="utf-8")
    if path.suffix in (".yaml", ".yml"):
        import yaml
        raw = yaml.safe_load(text)
    elif path.suffix == ".json":
        raw = json.loads(text)
    else:
        raise ConfigError(f"config must be .yaml, .yml or .json, not "
                          f"{path.suffix!r}")
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a mapping")

    nested = {
        "embedding": EmbeddingConfig, "reduction": ReductionConfig,
        "clustering": ClusterConfig, "topics": TopicConfig,
        "sentiment": SentimentConfig, "panel": PanelConfig,
        "regression": RegressionConfig,
    }
    kwargs = {}
    for key, value in raw.items():
        if key in nested:
            kwargs[key] = _build(nested[key], value, key)
        elif key in ("study_start", "study_end"):
            kwargs[key] = _coerce_date(value)
        else:
            kwargs[key] = value

    known = {f.name for f in dc_fields(PipelineConfig)}
    unknown = set(kwargs) - known
    if unknown:
        raise ConfigError(f"unknown config keys {sorted(unknown)}")
    cfg = PipelineConfig(**kwargs)
    cfg.panel.covid_start = _coerce_date(cfg.panel.covid_start)
    cfg.panel.covid_end = _coerce_date(cfg.panel.covid_end)
    if seed is not None:
        cfg.seed = int(seed)
    return cfg.resolve(path.parent)


def validate_paths(cfg, stages=("ingest",)):
    """Check that the inputs the requested stages read actually exist."""
    problems = []
    if "ingest" in stages and not Path(cfg.corpus_dir).is_dir():
        problems.append(f"corpus_dir {cfg.corpus_dir} is not a directory")
    if "panel" in stages:
        for name in ("prices_csv", "meetings_csv"):
            p = Path(getattr(cfg.panel, name))
            if not p.is_file():
                problems.append(f"{name} {p} does not exist")
    if problems:
        raise ConfigError("; ".join(problems))
