"""Meeting panel construction and local-projection estimation.

Builds the meeting-level design (horizon log returns, sentiment regressor,
COVID and governor dummies, optional controls and interactions), estimates
one OLS per horizon with Newey-West HAC standard errors, and attaches
bootstrap confidence bands from whole-meeting case resampling.
"""

import math
import warnings
from bisect import bisect_left
from dataclasses import dataclass, field, replace
from datetime import date as Date
from statistics import NormalDist

import numpy as np
import pandas as pd

from .sentiment import ALL_TOPICS

GOVERNORS = ("rajan", "patel", "das")
REFERENCE_GOVERNOR = "das"          # absorbed by the intercept

DEFAULT_COVID_WINDOW = (Date(2020, 3, 11), Date(2021, 12, 31))

# Tenure windows from public record; overridable in configuration.
DEFAULT_TENURES = {
    "rajan": (Date(2013, 9, 4), Date(2016, 9, 3)),
    "patel": (Date(2016, 9, 4), Date(2018, 12, 11)),
    "das": (Date(2018, 12, 12), Date(2024, 12, 10)),
}


class EconoError(Exception):
    pass


class HorizonUnavailableError(EconoError):
    """Requested horizon extends past the end of the price series."""


class EstimationError(EconoError):
    pass


class BootstrapError(EconoError):
    pass


# ---------------------------------------------------------------------------
# prices and meetings

@dataclass
class PriceSeries:
    dates: list                  # datetime.date, strictly increasing
    open: np.ndarray
    close: np.ndarray

    def __post_init__(self):
        self.open = np.asarray(self.open, dtype=np.float64)
        self.close = np.asarray(self.close, dtype=np.float64)
        n = len(self.dates)
        if self.open.shape != (n,) or self.close.shape != (n,):
            raise EconoError("price columns misaligned with dates")
        if any(b <= a for a, b in zip(self.dates, self.dates[1:])):
            raise EconoError("price dates must be strictly increasing")
        for name, arr in (("open", self.open), ("close", self.close)):
            if not np.isfinite(arr).all() or (arr <= 0).any():
                raise EconoError(f"{name} prices must be positive and finite")
        self._index = {d: i for i, d in enumerate(self.dates)}

    def __len__(self):
        return len(self.dates)

    def index_of(self, d):
        try:
            return self._index[d]
        except KeyError:
            raise EconoError(f"{d} is not a trading day in the series") from None

    @classmethod
    def from_frame(cls, df):
        required = {"date", "open", "close"}
        if not required.issubset(df.columns):
            raise EconoError(f"price table needs columns {sorted(required)}")
        dates = [_as_date(d) for d in df["date"]]
        return cls(dates=dates, open=df["open"].to_numpy(),
                   close=df["close"].to_numpy())

    @classmethod
    def from_csv(cls, path):
        return cls.from_frame(pd.read_csv(path))


def _as_date(value):
    if isinstance(value, Date):
        return value
    if isinstance(value, pd.Timestamp):
        return value.date()
    return Date.fromisoformat(str(value))


def align_meeting(meeting_date, calendar):
    """The meeting's trading date: itself, or the next trading day after."""
    if len(calendar) == 0:
        raise EconoError("empty price calendar")
    meeting_date = _as_date(meeting_date)
    i = bisect_left(calendar.dates, meeting_date)
    if i >= len(calendar.dates):
        raise EconoError(
            f"meeting {meeting_date} falls after the last trading day "
            f"{calendar.dates[-1]}")
    return calendar.dates[i]


def horizon_return(prices, t, h):
    """log(close at h trading days after t) - log(open at t)."""
    if h < 0:
        raise EconoError("horizon must be >= 0")
    i = prices.index_of(t)
    j = i + h
    if j >= len(prices):
        raise HorizonUnavailableError(
            f"horizon {h} from {t} runs past the series end")
    return math.log(prices.close[j]) - math.log(prices.open[i])


@dataclass(frozen=True)
class MeetingEvent:
    meeting_date: Date
    aligned_trading_date: Date
    governor: str
    covid_flag: int
    controls: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.governor not in GOVERNORS:
            raise EconoError(f"unknown governor {self.governor!r}")
        if self.covid_flag not in (0, 1):
            raise EconoError("covid_flag must be 0 or 1")


def infer_governor(d, tenures=None):
    tenures = tenures or DEFAULT_TENURES
    for name, (start, end) in tenures.items():
        if start <= d <= end:
            return name
    raise EconoError(f"{d} falls in no configured governor tenure")


def make_meeting(meeting_date, governor, prices,
                 covid_window=DEFAULT_COVID_WINDOW, controls=None):
    """Align the date, stamp the COVID flag (on the aligned date)."""
    meeting_date = _as_date(meeting_date)
    aligned = align_meeting(meeting_date, prices)
    start, end = covid_window
    return MeetingEvent(
        meeting_date=meeting_date,
        aligned_trading_date=aligned,
        governor=governor.lower(),
        covid_flag=int(start <= aligned <= end),
        controls=dict(controls or {}),
    )


def load_meetings(path, prices, covid_window=DEFAULT_COVID_WINDOW):
    """Read meetings.csv (meeting_date, governor, control columns...)."""
    df = pd.read_csv(path)
    required = {"meeting_date", "governor"}
    if not required.issubset(df.columns):
        raise EconoError(f"meetings table needs columns {sorted(required)}")
    control_cols = [c for c in df.columns if c not in required]
    meetings = []
    for _, row in df.iterrows():
        controls = {}
        for c in control_cols:
            v = row[c]
            controls[c] = float(v) if pd.notna(v) else float("nan")
        meetings.append(make_meeting(row["meeting_date"], row["governor"],
                                     prices, covid_window, controls))
    return meetings


# ---------------------------------------------------------------------------
# specs

@dataclass(frozen=True)
class BootstrapSpec:
    B: int = 2000
    seed: int = 0
    level: float = 90.0
    kind: str = "percentile"     # percentile | bias_corrected

    def __post_init__(self):
        if self.B < 100:
            raise EconoError("bootstrap B must be >= 100")
        if not 0.0 < self.level < 100.0:
            raise EconoError("level must lie in (0, 100)")
        if self.kind not in ("percentile", "bias_corrected"):
            raise EconoError(f"unknown bootstrap kind {self.kind!r}")


@dataclass(frozen=True)
class LPSpec:
    cluster_id: object = None            # None = per-date aggregate series
    horizons: int = 30                   # estimate h = 0..horizons
    regressor_kind: str = "balance"      # balance | avg_score
    include_dummies: bool = True
    include_interactions: bool = False
    controls: tuple = ()
    hac_lag_rule: object = "horizon"     # "horizon" (max(1, h)) or fixed int
    bootstrap: BootstrapSpec = field(default_factory=BootstrapSpec)
    drop_undefined_balance: bool = False

    def __post_init__(self):
        if self.horizons < 0:
            raise EconoError("horizons must be >= 0")
        if self.regressor_kind not in ("balance", "avg_score"):
            raise EconoError(f"unknown regressor_kind {self.regressor_kind!r}")
        if not (self.hac_lag_rule == "horizon"
                or (isinstance(self.hac_lag_rule, int)
                    and self.hac_lag_rule >= 0)):
            raise EconoError("hac_lag_rule must be 'horizon' or an int >= 0")
        object.__setattr__(self, "controls", tuple(self.controls))

    def hac_lag(self, h):
        if self.hac_lag_rule == "horizon":
            return max(1, h)
        return int(self.hac_lag_rule)

    def label(self):
        parts = [self.regressor_kind.replace("_", "")]
        if not self.include_dummies:
            parts.append("nodum")
        if self.include_interactions:
            parts.append("int")
        if self.controls:
            parts.append("ctrl")
        return "-".join(parts)


# ---------------------------------------------------------------------------
# panel

@dataclass
class PanelDesign:
    X: np.ndarray                # n_meetings x k
    columns: list
    y: np.ndarray                # n_meetings x (H+1); NaN = unavailable
    horizons: list
    meeting_dates: list
    dropped: list                # (meeting_date, reason)


def _sentiment_lookup(rows):
    """Index aggregates by (date, topic); accept dataclasses or a frame."""
    if isinstance(rows, pd.DataFrame):
        records = rows.to_dict("records")
        return {(_as_date(r["date"]), r["topic"]): r for r in records}
    return {(_as_date(r.date), r.topic): {
        "balance": r.balance, "avg_score": r.avg_score,
        "balance_defined": r.balance_defined} for r in rows}


def _collinear_columns(X, columns):
    _, R = np.linalg.qr(X)
    diag = np.abs(np.diag(R))
    tol = max(X.shape) * np.finfo(float).eps * (diag.max() or 1.0)
    return [columns[i] for i in np.nonzero(diag < tol)[0]]


def build_panel(meetings, sentiment_rows, prices, spec):
    """Assemble the per-horizon design for one sentiment series.

    Column order: intercept, S, controls, covid, rajan, patel, then the
    S x dummy interactions when requested.  Dummies that never vary in
    the sample (a tenure absent from the window) are dropped with a
    warning; Das is the reference category and gets no dummy.  Meetings
    lacking a sentiment row or a control value are dropped and logged.
    """
    key = spec.cluster_id if spec.cluster_id is not None else ALL_TOPICS
    lookup = _sentiment_lookup(sentiment_rows)

    rows, dropped = [], []
    for m in meetings:
        srow = lookup.get((m.meeting_date, key))
        if srow is None:
            dropped.append((m.meeting_date, f"no sentiment row for {key!r}"))
            continue
        if spec.regressor_kind == "balance":
            if spec.drop_undefined_balance and not srow["balance_defined"]:
                dropped.append((m.meeting_date, "balance undefined"))
                continue
            s_value = float(srow["balance"])
        else:
            s_value = float(srow["avg_score"])
        control_values = []
        missing = None
        for c in spec.controls:
            v = m.controls.get(c)
            if v is None or (isinstance(v, float) and math.isnan(v)):
                missing = c
                break
            control_values.append(float(v))
        if missing is not None:
            dropped.append((m.meeting_date, f"missing control {missing!r}"))
            continue
        rows.append((m, s_value, control_values))

    if not rows:
        raise EconoError("no usable meetings after drops")

    horizons = list(range(spec.horizons + 1))
    n = len(rows)
    y = np.full((n, len(horizons)), np.nan)
    for i, (m, _, _) in enumerate(rows):
        for h in horizons:
            try:
                y[i, h] = horizon_return(prices, m.aligned_trading_date, h)
            except HorizonUnavailableError:
                break                       # later horizons unavailable too

    columns = ["intercept", "S", *spec.controls]
    data = {
        "intercept": np.ones(n),
        "S": np.array([s for _, s, _ in rows]),
    }
    for ci, c in enumerate(spec.controls):
        data[c] = np.array([cv[ci] for _, _, cv in rows])

    if spec.include_dummies:
        dummies = {
            "covid": np.array([float(m.covid_flag) for m, _, _ in rows]),
            "rajan": np.array([float(m.governor == "rajan")
                               for m, _, _ in rows]),
            "patel": np.array([float(m.governor == "patel")
                               for m, _, _ in rows]),
        }
        kept = []
        for name, col in dummies.items():
            if col.any():
                kept.append(name)
                data[name] = col
            else:
                warnings.warn(
                    f"dummy {name!r} never active in sample; dropped",
                    stacklevel=2)
        columns.extend(kept)
        if spec.include_interactions:
            for name in ("rajan", "patel", "covid"):
                if name in kept:
                    inter = f"S_x_{name}"
                    data[inter] = data["S"] * data[name]
                    columns.append(inter)

    X = np.column_stack([data[c] for c in columns])
    if np.linalg.matrix_rank(X) < X.shape[1]:
        bad = _collinear_columns(X, columns) or columns
        raise EstimationError(f"design is rank deficient; collinear "
                              f"columns: {', '.join(bad)}")
    return PanelDesign(
        X=X, columns=columns, y=y, horizons=horizons,
        meeting_dates=[m.meeting_date for m, _, _ in rows],
        dropped=dropped,
    )


# ---------------------------------------------------------------------------
# estimation

@dataclass(frozen=True)
class OLSResult:
    beta: np.ndarray
    residuals: np.ndarray


def ols(y, X):
    """Least squares via lstsq after an explicit rank check."""
    y = np.asarray(y, dtype=np.float64)
    X = np.asarray(X, dtype=np.float64)
    n, k = X.shape
    if n <= k:
        raise EstimationError(f"{n} rows cannot identify {k} coefficients")
    if np.linalg.matrix_rank(X) < k:
        raise EstimationError("X is rank deficient")
    beta, *_ = np.linalg.lstsq(X, y, rcond=None)
    return OLSResult(beta=beta, residuals=y - X @ beta)


def hac_covariance(X, residuals, lag):
    """Newey-West sandwich with Bartlett weights 1 - l/(lag+1).

    lag 0 degenerates to the heteroskedasticity-only (White) sandwich.
    No small-sample degrees-of-freedom correction is applied.
    """
    if lag < 0:
        raise EconoError("lag must be >= 0")
    X = np.asarray(X, dtype=np.float64)
    e = np.asarray(residuals, dtype=np.float64)
    Xe = X * e[:, None]
    meat = Xe.T @ Xe
    for l in range(1, lag + 1):
        if l >= len(e):
            break
        gamma = Xe[l:].T @ Xe[:-l]
        meat += (1.0 - l / (lag + 1.0)) * (gamma + gamma.T)
    bread = np.linalg.inv(X.T @ X)
    return bread @ meat @ bread


@dataclass
class IRFResult:
    cluster_id: object
    spec_label: str
    horizons: list
    beta: np.ndarray             # S coefficient per horizon
    hac_se: np.ndarray
    ci_low: np.ndarray
    ci_high: np.ndarray
    n_obs: np.ndarray
    coef: np.ndarray             # full coefficient rows, n_h x k
    columns: list
    truncated_at: int | None = None


def lp_estimate(design, spec):
    """One OLS + HAC per horizon; truncates when rows run out."""
    k = len(design.columns)
    s_idx = design.columns.index("S")
    horizons, betas, ses, ns, coefs = [], [], [], [], []
    truncated_at = None
    for h in design.horizons:
        mask = np.isfinite(design.y[:, h])
        n_obs = int(mask.sum())
        if n_obs < k + 5:
            truncated_at = h
            warnings.warn(
                f"horizon {h}: only {n_obs} usable meetings (need "
                f">= {k + 5}); truncating", stacklevel=2)
            break
        fit = ols(design.y[mask, h], design.X[mask])
        cov = hac_covariance(design.X[mask], fit.residuals, spec.hac_lag(h))
        horizons.append(h)
        betas.append(fit.beta[s_idx])
        ses.append(math.sqrt(max(cov[s_idx, s_idx], 0.0)))
        ns.append(n_obs)
        coefs.append(fit.beta)
    if not horizons:
        raise EstimationError("no horizon has enough usable meetings")
    nh = len(horizons)
    return IRFResult(
        cluster_id=spec.cluster_id, spec_label=spec.label(),
        horizons=horizons, beta=np.array(betas), hac_se=np.array(ses),
        ci_low=np.full(nh, np.nan), ci_high=np.full(nh, np.nan),
        n_obs=np.array(ns, dtype=int), coef=np.vstack(coefs),
        columns=list(design.columns), truncated_at=truncated_at,
    )


# ---------------------------------------------------------------------------
# bootstrap

def _replicate_betas(design, horizons, s_idx, idx):
    """S-coefficients for one resample, or None when rank-deficient.

    Horizons sharing an availability mask share one multi-RHS solve.
    """
    X, y = design.X, design.y
    k = X.shape[1]
    groups = {}
    for pos, h in enumerate(horizons):
        key = np.isfinite(y[:, h]).tobytes()
        groups.setdefault(key, []).append(pos)
    out = np.empty(len(horizons))
    for key, positions in groups.items():
        mask = np.frombuffer(key, dtype=bool)
        sel = idx[mask[idx]]
        if len(sel) <= k:
            return None
        Xr = X[sel]
        XtX = Xr.T @ Xr
        if np.linalg.matrix_rank(XtX) < k:
            return None
        hs = [horizons[p] for p in positions]
        Yr = y[sel][:, hs]
        betas = np.linalg.solve(XtX, Xr.T @ Yr)
        out[positions] = betas[s_idx, :]
    return out


def bootstrap_ci(design, spec, point=None):
    """Case-resampling bootstrap bands for the S coefficient.

    Meetings are resampled with replacement as whole rows, all horizons
    jointly.  percentile kind takes the equal-tail order statistics of
    the replicate vector; bias_corrected shifts the percentile levels by
    the standard BC adjustment.  Deterministic given the seed: replicate
    r draws from SeedSequence((seed, r)), including redraws.
    """
    bs = spec.bootstrap
    if point is None:
        point = lp_estimate(design, spec)
    horizons = point.horizons
    s_idx = design.columns.index("S")
    n = design.X.shape[0]

    reps = np.empty((bs.B, len(horizons)))
    accepted = 0
    draws = 0
    while accepted < bs.B:
        if draws >= 10 * bs.B:
            raise BootstrapError(
                f"exceeded {10 * bs.B} draws; resamples persistently "
                "rank-deficient")
        rng = np.random.default_rng(np.random.SeedSequence((bs.seed, draws)))
        draws += 1
        idx = rng.integers(0, n, size=n)
        row = _replicate_betas(design, horizons, s_idx, idx)
        if row is None:
            continue
        reps[accepted] = row
        accepted += 1

    alpha = (100.0 - bs.level) / 200.0          # each tail
    ci_low = np.empty(len(horizons))
    ci_high = np.empty(len(horizons))
    norm = NormalDist()
    for j in range(len(horizons)):
        col = reps[:, j]
        if bs.kind == "percentile":
            q_lo, q_hi = alpha, 1.0 - alpha
        else:
            frac = np.mean(col < point.beta[j])
            frac = min(max(frac, 1.0 / (bs.B + 1)), bs.B / (bs.B + 1.0))
            z0 = norm.inv_cdf(frac)
            q_lo = norm.cdf(2.0 * z0 + norm.inv_cdf(alpha))
            q_hi = norm.cdf(2.0 * z0 + norm.inv_cdf(1.0 - alpha))
        # Order statistics of the replicate vector, not interpolants.
        ci_low[j] = np.quantile(col, q_lo, method="inverted_cdf")
        ci_high[j] = np.quantile(col, q_hi, method="inverted_cdf")
    return ci_low, ci_high


def run_irf(design, spec):
    """lp_estimate plus bootstrap bands in one IRFResult."""
    point = lp_estimate(design, spec)
    ci_low, ci_high = bootstrap_ci(design, spec, point=point)
    return replace(point, ci_low=ci_low, ci_high=ci_high)


def irf_frame(result):
    """IRF as the canonical output table."""
    return pd.DataFrame({
        "horizon": result.horizons,
        "beta": result.beta,
        "hac_se": result.hac_se,
        "ci_low": result.ci_low,
        "ci_high": result.ci_high,
        "n_obs": result.n_obs,
    })
