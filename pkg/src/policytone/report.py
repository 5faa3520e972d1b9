"""Figure emission: every figure ships as a CSV of the plotted values
plus a rendered PNG, so numerical review never needs image diffing.

Figures degrade independently: a missing upstream artifact skips that
figure and the skip is recorded in report_summary.json.
"""

import json
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import pandas as pd

FIGURE_DIR = "figures"


def _save(fig, png_path):
    fig.savefig(png_path, dpi=120, bbox_inches="tight")
    plt.close(fig)


def _short(name, limit=30):
    return name if len(name) <= limit else name[:limit - 3] + "..."


def _topic_names(out_dir):
    path = Path(out_dir) / "topics_summary.json"
    if not path.exists():
        return {}
    summary = json.loads(path.read_text(encoding="utf-8"))
    return {t["topic"]: t["name"] for t in summary["topics"]}


def _fig_topic_heatmap(out_dir, fig_dir, names):
    src = Path(out_dir) / "topics_over_time.csv"
    if not src.exists():
        return None, str(src)
    table = pd.read_csv(src)
    wide = (table.pivot(index="date", columns="topic", values="count")
                 .fillna(0).astype(int).sort_index())
    wide.columns = [str(c) for c in wide.columns]
    out_csv = fig_dir / "topic_heatmap.csv"
    wide.reset_index().to_csv(out_csv, index=False, lineterminator="\n")

    fig, ax = plt.subplots(figsize=(9, 5))
    im = ax.imshow(wide.to_numpy().T, aspect="auto", cmap="viridis")
    ax.set_yticks(range(len(wide.columns)))
    ax.set_yticklabels([_short(names.get(int(c), c)) for c in wide.columns],
                       fontsize=8)
    step = max(1, len(wide.index) // 12)
    ax.set_xticks(range(0, len(wide.index), step))
    ax.set_xticklabels(wide.index[::step], rotation=45, ha="right",
                       fontsize=7)
    ax.set_xlabel("meeting date")
    ax.set_title("Sentences per topic and date")
    fig.colorbar(im, ax=ax, label="sentences")
    _save(fig, fig_dir / "topic_heatmap.png")
    return ["topic_heatmap.csv", "topic_heatmap.png"], None


def _fig_topic_prevalence(out_dir, fig_dir, names):
    src = Path(out_dir) / "topics_over_time.csv"
    if not src.exists():
        return None, str(src)
    table = pd.read_csv(src)
    wide = (table.pivot(index="date", columns="topic", values="share")
                 .fillna(0.0).sort_index())
    wide.columns = [str(c) for c in wide.columns]
    out_csv = fig_dir / "topic_prevalence.csv"
    wide.reset_index().to_csv(out_csv, index=False, lineterminator="\n")

    fig, ax = plt.subplots(figsize=(9, 5))
    x = pd.to_datetime(wide.index)
    for c in wide.columns:
        ax.plot(x, wide[c], label=_short(names.get(int(c), c)), lw=1.4)
    ax.set_ylabel("share of sentences")
    ax.set_xlabel("meeting date")
    ax.set_title("Topic prevalence over time")
    ax.legend(fontsize=7, ncol=2)
    fig.autofmt_xdate()
    _save(fig, fig_dir / "topic_prevalence.png")
    return ["topic_prevalence.csv", "topic_prevalence.png"], None


def _fig_doc_map(out_dir, fig_dir, names):
    src = Path(out_dir) / "doc_map.csv"
    if not src.exists():
        return None, str(src)
    table = pd.read_csv(src)
    out_csv = fig_dir / "doc_map.csv"
    table.to_csv(out_csv, index=False, lineterminator="\n")

    fig, ax = plt.subplots(figsize=(7, 6))
    outliers = table[table["topic"] < 0]
    ax.scatter(outliers["x"], outliers["y"], s=8, c="lightgray",
               label="outlier")
    for topic, grp in table[table["topic"] >= 0].groupby("topic"):
        ax.scatter(grp["x"], grp["y"], s=8,
                   label=_short(names.get(topic, str(topic)), 24))
    ax.set_xlabel("component 1")
    ax.set_ylabel("component 2")
    ax.set_title("Sentences in 2-component embedding space")
    ax.legend(fontsize=7, markerscale=1.5)
    _save(fig, fig_dir / "doc_map.png")
    return ["doc_map.csv", "doc_map.png"], None


def _fig_sentiment_heatmap(out_dir, fig_dir, names):
    src = Path(out_dir) / "sentiment_by_date_topic.csv"
    if not src.exists():
        return None, str(src)
    table = pd.read_csv(src, dtype={"topic": str})
    per_topic = table[table["topic"].str.lstrip("-").str.isdigit()].copy()
    per_topic["topic"] = per_topic["topic"].astype(int)
    wide = (per_topic.pivot(index="date", columns="topic", values="balance")
                     .sort_index())
    wide.columns = [str(c) for c in wide.columns]
    out_csv = fig_dir / "sentiment_heatmap.csv"
    wide.reset_index().to_csv(out_csv, index=False, lineterminator="\n")

    fig, ax = plt.subplots(figsize=(9, 5))
    im = ax.imshow(wide.to_numpy().T, aspect="auto", cmap="RdBu",
                   vmin=-1.0, vmax=1.0)
    ax.set_yticks(range(len(wide.columns)))
    ax.set_yticklabels([_short(names.get(int(c), c)) for c in wide.columns],
                       fontsize=8)
    step = max(1, len(wide.index) // 12)
    ax.set_xticks(range(0, len(wide.index), step))
    ax.set_xticklabels(wide.index[::step], rotation=45, ha="right",
                       fontsize=7)
    ax.set_xlabel("meeting date")
    ax.set_title("Dovish-hawkish balance by topic and date")
    fig.colorbar(im, ax=ax, label="balance")
    _save(fig, fig_dir / "sentiment_heatmap.png")
    return ["sentiment_heatmap.csv", "sentiment_heatmap.png"], None


def _fig_irfs(out_dir, fig_dir):
    out = Path(out_dir)
    summary_path = out / "lp_summary.json"
    if summary_path.exists():
        runs = json.loads(summary_path.read_text(encoding="utf-8"))["runs"]
        sources = [(r["cluster"], out / r["file"]) for r in runs]
    else:
        sources = [(p.stem, p) for p in sorted(out.glob("irf_*.csv"))]
    if not sources:
        return None, str(out / "irf_*.csv")

    produced = []
    for cluster, path in sources:
        if not path.exists():
            continue
        table = pd.read_csv(path)
        name = path.stem
        table.to_csv(fig_dir / f"{name}.csv", index=False,
                     lineterminator="\n")
        fig, ax = plt.subplots(figsize=(7, 4.5))
        ax.axhline(0.0, color="gray", lw=0.8)
        ax.fill_between(table["horizon"], table["ci_low"], table["ci_high"],
                        alpha=0.25, label="90% bootstrap band")
        ax.plot(table["horizon"], table["beta"], marker="o", ms=3,
                lw=1.5, label="estimate")
        ax.set_xlabel("horizon (trading days)")
        ax.set_ylabel("log-return response")
        ax.set_title(f"Return response to sentiment: {cluster}")
        ax.legend(fontsize=8)
        _save(fig, fig_dir / f"{name}.png")
        produced.extend([f"{name}.csv", f"{name}.png"])
    return produced, None


def emit_reports(cfg, out_dir, tmp):
    """Render every available figure into tmp/figures; returns relpaths."""
    fig_dir = Path(tmp) / FIGURE_DIR
    fig_dir.mkdir(parents=True, exist_ok=True)
    names = _topic_names(out_dir)

    builders = [
        ("topic_heatmap", lambda: _fig_topic_heatmap(out_dir, fig_dir, names)),
        ("topic_prevalence",
         lambda: _fig_topic_prevalence(out_dir, fig_dir, names)),
        ("doc_map", lambda: _fig_doc_map(out_dir, fig_dir, names)),
        ("sentiment_heatmap",
         lambda: _fig_sentiment_heatmap(out_dir, fig_dir, names)),
        ("irf_panels", lambda: _fig_irfs(out_dir, fig_dir)),
    ]
    produced, skipped = [], []
    for figure, build in builders:
        files, missing = build()
        if files is None:
            skipped.append({"figure": figure, "missing": missing})
        else:
            produced.extend(f"{FIGURE_DIR}/{f}" for f in files)

    summary = {"figures": sorted(produced), "skipped": skipped}
    (Path(tmp) / "report_summary.json").write_text(
        json.dumps(summary, indent=1, sort_keys=True), encoding="utf-8")
    return produced + ["report_summary.json"]
