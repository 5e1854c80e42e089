"""Agreement and correlation statistics plus the evaluation report tables."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

from scipy.stats import t as _student_t

from .annotation import JudgementRecord, Variant, mfg
from .errors import FunlibError
from .scoring import Locale
from .templates import Source

SIGNIFICANCE_LEVEL = 0.05


class MetricsError(FunlibError):
    """Statistic undefined for the given inputs."""


# ---------------------------------------------------------------------------
# Krippendorff's alpha (coincidence-matrix form)


@dataclass(frozen=True)
class ReliabilityMatrix:
    """Units x raters grid of optional grades (None marks a missing cell)."""

    rows: tuple[tuple[int | None, ...], ...]

    def __post_init__(self) -> None:
        widths = {len(r) for r in self.rows}
        if len(widths) > 1:
            raise MetricsError("ragged reliability matrix")
        for row in self.rows:
            for v in row:
                if v is not None and v not in (0, 1, 2, 3):
                    raise MetricsError(f"grade out of 0-3 scale: {v!r}")
        if not any(sum(1 for v in row if v is not None) >= 2 for row in self.rows):
            raise MetricsError("need at least one unit with two or more ratings")

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[int | None]]) -> "ReliabilityMatrix":
        return cls(rows=tuple(tuple(r) for r in rows))


class AlphaMetric(enum.Enum):
    INTERVAL = "interval"
    ORDINAL = "ordinal"


def krippendorff_alpha(
    matrix: ReliabilityMatrix, metric: AlphaMetric | str = AlphaMetric.INTERVAL
) -> float:
    """alpha = 1 - D_o/D_e over the coincidence matrix.

    Units with fewer than two ratings are excluded; within-unit pairs are
    weighted 1/(m_u - 1); expected disagreement comes from the marginal
    value distribution.  All-identical values give alpha = 1.0.
    """
    metric = AlphaMetric(metric) if isinstance(metric, str) else metric
    units = [
        [v for v in row if v is not None]
        for row in matrix.rows
        if sum(1 for v in row if v is not None) >= 2
    ]
    if not units:
        raise MetricsError("no pairable values")

    coincidence: dict[tuple[int, int], float] = {}
    for values in units:
        m_u = len(values)
        weight = 1.0 / (m_u - 1)
        for i, v in enumerate(values):
            for j, w in enumerate(values):
                if i != j:
                    coincidence[(v, w)] = coincidence.get((v, w), 0.0) + weight
    marginals: dict[int, float] = {}
    for (v, _), c in coincidence.items():
        marginals[v] = marginals.get(v, 0.0) + c
    n = sum(marginals.values())
    values_present = sorted(marginals)

    if metric is AlphaMetric.INTERVAL:
        def delta(v: int, w: int) -> float:
            return float((v - w) ** 2)
    else:
        def delta(v: int, w: int) -> float:
            lo, hi = min(v, w), max(v, w)
            between = sum(marginals[g] for g in values_present if lo <= g <= hi)
            return (between - (marginals[v] + marginals[w]) / 2.0) ** 2

    d_o = sum(c * delta(v, w) for (v, w), c in coincidence.items()) / n
    d_e = sum(
        marginals[v] * marginals[w] * delta(v, w)
        for v in values_present
        for w in values_present
    ) / (n * (n - 1))
    if d_e == 0.0:
        return 1.0  # all values identical: perfect agreement by definition
    return 1.0 - d_o / d_e


def reliability_from_judgements(
    judgements: Sequence[JudgementRecord], judge_country: Locale
) -> ReliabilityMatrix:
    """Units are (story, variant) pairs, raters are judges, values are
    funniness grades."""
    recs = [r for r in judgements if r.judge_country is judge_country]
    if not recs:
        raise MetricsError(f"no judgements for {judge_country.value}")
    units = sorted({(r.story_id, r.variant_id) for r in recs})
    raters = sorted({r.judge_id for r in recs})
    grid = {(r.story_id, r.variant_id, r.judge_id): r.funniness for r in recs}
    rows = [
        tuple(grid.get((story, variant, judge)) for judge in raters)
        for story, variant in units
    ]
    return ReliabilityMatrix.from_rows(rows)


# ---------------------------------------------------------------------------
# Pearson correlation with two-tailed t-test significance


def pearson_r(x: Sequence[float], y: Sequence[float]) -> tuple[float, float]:
    """Sample Pearson r and its two-tailed p (t-test, n-2 df)."""
    if len(x) != len(y):
        raise MetricsError(f"length mismatch: {len(x)} vs {len(y)}")
    n = len(x)
    if n < 3:
        raise MetricsError(f"need at least 3 points, got {n}")
    mx = sum(x) / n
    my = sum(y) / n
    sxx = sum((a - mx) ** 2 for a in x)
    syy = sum((b - my) ** 2 for b in y)
    if sxx == 0.0 or syy == 0.0:
        raise MetricsError("zero variance")
    sxy = sum((a - mx) * (b - my) for a, b in zip(x, y))
    r = max(-1.0, min(1.0, sxy / math.sqrt(sxx * syy)))
    if abs(r) == 1.0:
        return r, 0.0
    t_stat = r * math.sqrt((n - 2) / (1.0 - r * r))
    p = 2.0 * float(_student_t.sf(abs(t_stat), n - 2))
    return r, p


# ---------------------------------------------------------------------------
# Evaluation reports


class TopSelection(enum.Enum):
    TOP3 = "top3"
    TOP10 = "top10"


@dataclass(frozen=True)
class EvalConfig:
    top_selection: TopSelection = TopSelection.TOP10


def method_label(source: Source, player_locale: Locale) -> str:
    name = "FT" if source is Source.FREE_TEXT else source.value
    if player_locale is Locale.NEUTRAL:
        return name
    return f"{name}_{player_locale.value}"


def _variant_mfg(
    judgements: Sequence[JudgementRecord], story_id: str, variant_id: str, judge_country: Locale
) -> float | None:
    grades = [
        r.funniness
        for r in judgements
        if r.story_id == story_id and r.variant_id == variant_id and r.judge_country is judge_country
    ]
    return mfg(grades) if grades else None


def _select_variants(
    variants: Sequence[Variant],
    judgements: Sequence[JudgementRecord],
    judge_country: Locale,
    selection: TopSelection,
) -> list[tuple[Variant, float]]:
    """The (variant, MFG) pairs one group cell aggregates, already selected.

    FreeText: every judged variant under Top3 (players wrote 3), absent for
    Top10.  MLM and generated stories: Top10 takes the first 10 in produced
    rank order; Top3 takes the first 3 for MLM and the 3 with the highest
    judge MFG for generated stories.
    """
    judged = []
    for v in sorted(variants, key=lambda v: v.rank_index):
        value = _variant_mfg(judgements, v.story_id, v.variant_id, judge_country)
        if value is not None:
            judged.append((v, value))
    source = variants[0].source
    if source is Source.FREE_TEXT:
        return judged if selection is TopSelection.TOP3 else []
    if selection is TopSelection.TOP10:
        return judged[:10]
    if source is Source.MLM:
        return judged[:3]
    # generated stories: the three Best10 variants judges scored highest
    return sorted(judged, key=lambda pair: (-pair[1], pair[0].rank_index))[:3]


def mfg_cells(
    variants: Sequence[Variant],
    judgements: Sequence[JudgementRecord],
    selection: TopSelection,
) -> dict[tuple[Source, Locale, Locale], float | None]:
    """Cell per (method, player locale, judge locale): mean over stories of
    the mean MFG of the selected variants.  Empty cells are None."""
    groups: dict[tuple[Source, Locale], dict[str, list[Variant]]] = {}
    for v in variants:
        groups.setdefault((v.source, v.player_locale), {}).setdefault(v.story_id, []).append(v)
    judge_locales = sorted({r.judge_country for r in judgements}, key=lambda l: l.value)
    cells: dict[tuple[Source, Locale, Locale], float | None] = {}
    for (source, player_locale), stories in sorted(
        groups.items(), key=lambda kv: (kv[0][0].value, kv[0][1].value)
    ):
        for judge_locale in judge_locales:
            story_means = []
            for story_id in sorted(stories):
                selected = _select_variants(stories[story_id], judgements, judge_locale, selection)
                if selected:
                    story_means.append(sum(m for _, m in selected) / len(selected))
            cells[(source, player_locale, judge_locale)] = (
                sum(story_means) / len(story_means) if story_means else None
            )
    return cells


def mfg_report_csv(variants: Sequence[Variant], judgements: Sequence[JudgementRecord]) -> str:
    """Grid with Top3/Top10 columns per judge locale; '-' marks absent cells."""
    top3 = mfg_cells(variants, judgements, TopSelection.TOP3)
    top10 = mfg_cells(variants, judgements, TopSelection.TOP10)
    judge_locales = sorted({k[2] for k in top3}, key=lambda l: l.value)
    methods = sorted({(k[0], k[1]) for k in top3}, key=lambda mk: (mk[0].value, mk[1].value))
    header = ["method"]
    for loc in judge_locales:
        header.append(f"{loc.value}_top3")
        header.append(f"{loc.value}_top10")
    lines = [",".join(header)]
    for source, player_locale in methods:
        row = [method_label(source, player_locale)]
        for loc in judge_locales:
            for cells in (top3, top10):
                value = cells.get((source, player_locale, loc))
                row.append("-" if value is None else repr(value))
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class CorrelationCell:
    r: float | None
    p: float | None
    note: str | None = None  # set when the correlation is undefined

    @property
    def significant(self) -> bool:
        return self.p is not None and self.p < SIGNIFICANCE_LEVEL

    def render(self) -> str:
        if self.note:
            return f"undefined ({self.note})"
        mark = "*" if self.significant else ""
        return f"{self.r:.4f}{mark}"


def correlation_cells(
    variants: Sequence[Variant],
    judgements: Sequence[JudgementRecord],
    config: EvalConfig,
) -> dict[tuple[Source, Locale, Locale, str], CorrelationCell]:
    """Correlations of coherence/incongruity/deviation with MFG across
    variant-level means, per (method, player locale, judge locale)."""
    groups: dict[tuple[Source, Locale], list[Variant]] = {}
    for v in variants:
        groups.setdefault((v.source, v.player_locale), []).append(v)
    judge_locales = sorted({r.judge_country for r in judgements}, key=lambda l: l.value)
    out: dict[tuple[Source, Locale, Locale, str], CorrelationCell] = {}
    for (source, player_locale), group in sorted(
        groups.items(), key=lambda kv: (kv[0][0].value, kv[0][1].value)
    ):
        by_story: dict[str, list[Variant]] = {}
        for v in group:
            by_story.setdefault(v.story_id, []).append(v)
        # player-written stories have no Top10 pool; correlate over all three
        selection = TopSelection.TOP3 if source is Source.FREE_TEXT else config.top_selection
        for judge_locale in judge_locales:
            points: list[tuple[float, float, float, float]] = []  # mfg, coh, inc, dev
            for story_id in sorted(by_story):
                for v, value in _select_variants(
                    by_story[story_id], judgements, judge_locale, selection
                ):
                    recs = [
                        r
                        for r in judgements
                        if r.story_id == v.story_id
                        and r.variant_id == v.variant_id
                        and r.judge_country is judge_locale
                    ]
                    coh = sum(r.coherence for r in recs) / len(recs)
                    inc = sum(1.0 if r.incongruity else 0.0 for r in recs) / len(recs)
                    dev = sum(r.deviation for r in recs) / len(recs)
                    points.append((value, coh, inc, dev))
            for name, idx in (("coherence", 1), ("incongruity", 2), ("deviation", 3)):
                key = (source, player_locale, judge_locale, name)
                if not points:
                    out[key] = CorrelationCell(None, None, "no data")
                    continue
                xs = [p[idx] for p in points]
                ys = [p[0] for p in points]
                try:
                    r, p_value = pearson_r(xs, ys)
                    out[key] = CorrelationCell(r, p_value)
                except MetricsError as exc:
                    out[key] = CorrelationCell(None, None, str(exc))
    return out


def correlation_report_csv(
    variants: Sequence[Variant],
    judgements: Sequence[JudgementRecord],
    config: EvalConfig,
) -> str:
    cells = correlation_cells(variants, judgements, config)
    judge_locales = sorted({k[2] for k in cells}, key=lambda l: l.value)
    methods = sorted({(k[0], k[1]) for k in cells}, key=lambda mk: (mk[0].value, mk[1].value))
    header = ["method"]
    for loc in judge_locales:
        for name in ("coherence", "incongruity", "deviation"):
            header.append(f"{loc.value}_{name}")
    lines = [",".join(header)]
    for source, player_locale in methods:
        row = [method_label(source, player_locale)]
        for loc in judge_locales:
            for name in ("coherence", "incongruity", "deviation"):
                row.append(cells[(source, player_locale, loc, name)].render())
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def render_text_table(csv_text: str) -> str:
    """Fixed-width rendering of a CSV report for terminal reading."""
    rows = [line.split(",") for line in csv_text.splitlines() if line]
    widths = [max(len(row[i]) for row in rows) for i in range(len(rows[0]))]
    lines = []
    for r, row in enumerate(rows):
        lines.append("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip())
        if r == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def per_story_csv(
    variants: Sequence[Variant], judgements: Sequence[JudgementRecord]
) -> str:
    """One row per (story, method, player locale, judge locale) with the MFG
    of all pooled grades."""
    lines = ["story_id,method,player_locale,judge_locale,mfg"]
    variant_meta = {(v.story_id, v.variant_id): v for v in variants}
    pools: dict[tuple[str, Source, Locale, Locale], list[int]] = {}
    for rec in judgements:
        meta = variant_meta.get((rec.story_id, rec.variant_id))
        if meta is None:
            raise MetricsError(f"judged variant {rec.variant_id!r} missing from variants")
        key = (rec.story_id, meta.source, meta.player_locale, rec.judge_country)
        pools.setdefault(key, []).append(rec.funniness)
    for story_id, source, player_locale, judge_locale in sorted(
        pools, key=lambda k: (k[0], k[1].value, k[2].value, k[3].value)
    ):
        value = mfg(pools[(story_id, source, player_locale, judge_locale)])
        lines.append(
            f"{story_id},{method_label(source, player_locale)},"
            f"{player_locale.value},{judge_locale.value},{value!r}"
        )
    return "\n".join(lines) + "\n"
