"""Command-line entry point wiring templates, lexicons, scorers, pipeline,
and reports.  Runs are reproducible: identical config, seed, and inputs
produce byte-identical artifacts, and outputs never depend on --jobs.
"""
from __future__ import annotations

import json
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import click

from .annotation import (
    Split,
    build_dataset,
    labeled_pair_to_json,
    load_variants,
    make_augmented_pair,
    read_judgements,
    sample_augmentation_sentences,
)
from .compose import baseline_report_lines, compose_story, compose_story_mlm, story_report_lines
from .config import ENDPOINT_ENV_VAR, RunConfig, load_config, load_split_map, parse_locale
from .errors import FunlibError
from .fill import Transformation, fill_sentence_beam, fill_sentence_mlm_baseline
from .lexicon import load_lexicon
from .metrics import (
    AlphaMetric,
    EvalConfig,
    TopSelection,
    correlation_report_csv,
    krippendorff_alpha,
    mfg_report_csv,
    per_story_csv,
    reliability_from_judgements,
    render_text_table,
)
from .remote import remote_scorer
from .scoring import (
    CompositeScorer,
    HashEmbedder,
    Locale,
    feature_humor_scorer,
    tokenize_corpus,
    train_ngram_scorer,
)
from .templates import FilledStory, Source, StoryTemplate, load_template


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _template_paths(config: RunConfig, args: tuple[str, ...]) -> list[Path]:
    if args:
        return [Path(a) for a in args]
    if config.templates is None:
        raise FunlibError("no templates given (pass paths or set the templates key)")
    root = Path(config.templates)
    if root.is_dir():
        return sorted(root.glob("*.funlib"))
    return [root]


def _load_templates(config: RunConfig, args: tuple[str, ...]) -> list[StoryTemplate]:
    templates = [load_template(p) for p in _template_paths(config, args)]
    seen: set[str] = set()
    for t in templates:
        if t.story_id in seen:
            raise FunlibError(f"duplicate story id {t.story_id!r}")
        seen.add(t.story_id)
    return templates


def _require(config: RunConfig, *names: str) -> None:
    missing = [n for n in names if getattr(config, n) is None]
    if missing:
        raise FunlibError(f"config keys required for this command: {', '.join(missing)}")


def _build_lexicon(config: RunConfig):
    _require(config, "lexicon")
    return load_lexicon(config.lexicon, config.blocklist)


def _build_mlm(config: RunConfig):
    if config.scorer == "remote":
        return remote_scorer(config.resolve_endpoint(), locale=config.locale)
    _require(config, "corpus")
    tokens = tokenize_corpus(Path(config.corpus).read_text(encoding="utf-8"))
    return train_ngram_scorer(tokens, config.ngram_order, config.ngram_smoothing, config.locale)


def _build_bundle(config: RunConfig, lexicon) -> CompositeScorer:
    embedder = HashEmbedder(config.seed, dim=config.embedding_dim, locale=config.locale)
    if config.scorer == "remote":
        remote = remote_scorer(config.resolve_endpoint(), locale=config.locale)
        return CompositeScorer(mlm=remote, humor=remote, embedder=remote, locale=config.locale)
    mlm = _build_mlm(config)
    _require(config, "humor_weights")
    humor = feature_humor_scorer(config.humor_weights, mlm, lexicon, embedder, config.locale)
    return CompositeScorer(mlm=mlm, humor=humor, embedder=embedder, locale=config.locale)


def _transformation_line(story_id: str, sentence_index: int, rank: int, t: Transformation) -> str:
    return json.dumps(
        {
            "story_id": story_id,
            "sentence_index": sentence_index,
            "rank": rank,
            "masked_text": t.masked_text,
            "filled_text": t.filled_text,
            "fills": {str(o): w for o, w in t.fills},
            "p_funny": t.p_funny,
            "fill_logprobs": {str(o): lp for o, lp in t.fill_logprobs},
        },
        sort_keys=True,
    )


def _transformation_from_line(line: str, lineno: int) -> tuple[str, int, Transformation]:
    try:
        payload = json.loads(line)
        t = Transformation(
            masked_text=payload["masked_text"],
            filled_text=payload["filled_text"],
            fills=tuple(sorted((int(o), w) for o, w in payload["fills"].items())),
            p_funny=payload["p_funny"],
            fill_logprobs=tuple(sorted((int(o), lp) for o, lp in payload["fill_logprobs"].items())),
        )
        return payload["story_id"], payload["sentence_index"], t
    except (KeyError, ValueError, TypeError) as exc:
        raise FunlibError(f"transformations line {lineno}: {exc}") from None


def _map_jobs(config: RunConfig, fn, items):
    if config.jobs <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=config.jobs) as pool:
        return list(pool.map(fn, items))


@click.group()
def main() -> None:
    """Fill-in-the-blank humorous story generation and evaluation."""


_config_option = click.option("--config", "config_path", type=click.Path(exists=True), default=None)
_common = [
    click.option("--locale", "locale_text", type=click.Choice(["in", "us", "neutral"]), default=None),
    click.option("--k", type=int, default=None),
    click.option("--n", type=int, default=None),
    click.option("--N", "story_beam", type=int, default=None),
    click.option("--scorer", type=click.Choice(["builtin", "remote"]), default=None),
    click.option("--endpoint", default=None, help=f"model service URL (or ${ENDPOINT_ENV_VAR})"),
    click.option("--seed", type=int, default=None),
    click.option("--jobs", type=int, default=None),
    click.option("--out", "out_dir", type=click.Path(), default=None),
]


def _with_common(fn):
    for option in reversed(_common):
        fn = option(fn)
    return _config_option(fn)


def _make_config(config_path, locale_text, k, n, story_beam, scorer, endpoint, seed, jobs, out_dir):
    overrides = {
        "locale": parse_locale(locale_text) if locale_text else None,
        "k": k,
        "n": n,
        "story_beam": story_beam,
        "scorer": scorer,
        "endpoint": endpoint,
        "seed": seed,
        "jobs": jobs,
        "out": Path(out_dir) if out_dir else None,
    }
    return load_config(config_path, overrides)


@main.command()
@click.argument("templates", nargs=-1, type=click.Path(exists=True))
def validate(templates: tuple[str, ...]) -> None:
    """Parse templates and list their blanks and hints."""
    if not templates:
        raise FunlibError("no templates given")
    for path in templates:
        t = load_template(path)
        click.echo(f"{path}: id={t.story_id} title={t.title!r} sentences={len(t.sentences)}")
        for blank in t.blanks():
            click.echo(f"  blank {blank.index}: {blank.hint.value}")


@main.command("train-ngram")
@click.option("--corpus", "corpus_path", type=click.Path(exists=True), required=True)
@click.option("--order", type=int, default=3, show_default=True)
@click.option("--smoothing", type=float, default=0.1, show_default=True)
@click.option("--locale", "locale_text", type=click.Choice(["in", "us", "neutral"]), default="neutral")
@click.option("--out", "out_path", type=click.Path(), required=True)
def train_ngram(corpus_path: str, order: int, smoothing: float, locale_text: str, out_path: str) -> None:
    """Count n-grams over a corpus and save the scorer artifact."""
    tokens = tokenize_corpus(Path(corpus_path).read_text(encoding="utf-8"))
    scorer = train_ngram_scorer(tokens, order, smoothing, parse_locale(locale_text))
    out = Path(out_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    scorer.save(out)
    click.echo(f"saved {len(scorer.vocabulary)}-word {order}-gram scorer to {out}")


@main.command()
@click.argument("templates", nargs=-1, type=click.Path(exists=True))
@_with_common
def fill(templates: tuple[str, ...], config_path, **kwargs) -> None:
    """Generate ranked per-sentence transformations (stages 1 and 2)."""
    config = _make_config(config_path, **kwargs)
    stories = _load_templates(config, templates)
    lexicon = _build_lexicon(config)
    bundle = _build_bundle(config, lexicon)

    def fill_story(story: StoryTemplate) -> list[str]:
        lines = []
        for i, sentence in enumerate(story.sentences):
            if not sentence.has_blanks:
                click.echo(f"warning: {story.story_id} sentence {i} has no blanks", err=True)
                continue
            ranked = fill_sentence_beam(sentence, bundle, lexicon, config.fill_params)
            lines.extend(
                _transformation_line(story.story_id, i, rank, t)
                for rank, t in enumerate(ranked, start=1)
            )
        return lines

    per_story = _map_jobs(config, fill_story, stories)
    out = Path(config.out) / "transformations.jsonl"
    _atomic_write(out, "".join(line + "\n" for lines in per_story for line in lines))
    click.echo(f"wrote {out}")


def _read_transformations(path: Path) -> dict[str, dict[int, list[Transformation]]]:
    grouped: dict[str, dict[int, list[Transformation]]] = {}
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        story_id, sentence_index, t = _transformation_from_line(line, lineno)
        grouped.setdefault(story_id, {}).setdefault(sentence_index, []).append(t)
    return grouped


@main.command()
@click.argument("templates", nargs=-1, type=click.Path(exists=True))
@click.option("--transformations", "transformations_path", type=click.Path(exists=True), required=True)
@click.option("--best", type=int, default=10, show_default=True, help="stories kept per template")
@_with_common
def compose(templates: tuple[str, ...], transformations_path, best, config_path, **kwargs) -> None:
    """Assemble and rank complete stories (stage 3)."""
    config = _make_config(config_path, **kwargs)
    stories = _load_templates(config, templates)
    grouped = _read_transformations(Path(transformations_path))
    embedder = HashEmbedder(config.seed, dim=config.embedding_dim, locale=config.locale)

    report_lines: list[str] = []
    records: list[FilledStory] = []
    for story in stories:
        if not any(s.has_blanks for s in story.sentences):
            click.echo(f"warning: {story.story_id} has no blanks, skipped", err=True)
            continue
        per_sentence = [
            grouped.get(story.story_id, {}).get(i, []) for i in range(len(story.sentences))
        ]
        ranked = compose_story(story, per_sentence, embedder, config.compose_params)[:best]
        report_lines.extend(story_report_lines(ranked))
        records.extend(
            FilledStory(template_ref=story.story_id, fills=s.fills, source=Source.YODALIB)
            for s in ranked
        )
    out_report = Path(config.out) / "stories.jsonl"
    out_records = Path(config.out) / "filled.tsv"
    _atomic_write(out_report, "".join(line + "\n" for line in report_lines))
    _atomic_write(out_records, "".join(_format_filled(r) for r in records))
    click.echo(f"wrote {out_report} and {out_records}")


def _format_filled(record: FilledStory) -> str:
    from .templates import format_filled_story

    return format_filled_story(record) + "\n"


@main.command("baseline-mlm")
@click.argument("templates", nargs=-1, type=click.Path(exists=True))
@click.option("--best", type=int, default=10, show_default=True)
@_with_common
def baseline_mlm(templates: tuple[str, ...], best, config_path, **kwargs) -> None:
    """Fill and rank stories by masked-LM word probabilities alone."""
    config = _make_config(config_path, **kwargs)
    stories = _load_templates(config, templates)
    lexicon = _build_lexicon(config)
    mlm = _build_mlm(config)

    report_lines: list[str] = []
    records: list[FilledStory] = []
    for story in stories:
        if not any(s.has_blanks for s in story.sentences):
            click.echo(f"warning: {story.story_id} has no blanks, skipped", err=True)
            continue
        per_sentence = []
        for sentence in story.sentences:
            if sentence.has_blanks:
                per_sentence.append(
                    fill_sentence_mlm_baseline(sentence, mlm, lexicon, config.fill_params)
                )
            else:
                per_sentence.append([])
        ranked = compose_story_mlm(story, per_sentence, config.compose_params)[:best]
        report_lines.extend(baseline_report_lines(ranked))
        records.extend(
            FilledStory(template_ref=story.story_id, fills=s.fills, source=Source.MLM)
            for s in ranked
        )
    out_report = Path(config.out) / "mlm_stories.jsonl"
    out_records = Path(config.out) / "mlm_filled.tsv"
    _atomic_write(out_report, "".join(line + "\n" for line in report_lines))
    _atomic_write(out_records, "".join(_format_filled(r) for r in records))
    click.echo(f"wrote {out_report} and {out_records}")


def _all_variants(config: RunConfig):
    variants = []
    for name, locale in (
        ("variants_in", Locale.IN),
        ("variants_us", Locale.US),
        ("variants_neutral", Locale.NEUTRAL),
    ):
        path = getattr(config, name)
        if path is not None:
            variants.extend(load_variants(path, locale))
    if not variants:
        raise FunlibError("no variant files configured (variants_in/variants_us/variants_neutral)")
    return variants


@main.command()
@_with_common
def dataset(config_path, **kwargs) -> None:
    """Build labeled sentence-pair datasets and the stats table."""
    config = _make_config(config_path, **kwargs)
    _require(config, "judgements", "splits")
    templates = {t.story_id: t for t in _load_templates(config, ())}
    variants = _all_variants(config)
    judgements = read_judgements(config.judgements)
    split_map = load_split_map(config.splits)

    augmented = []
    if config.augmentation_count > 0:
        _require(config, "wiki_corpus")
        lexicon = _build_lexicon(config)
        mlm = _build_mlm(config)
        corpus_sentences = [
            line.strip()
            for line in Path(config.wiki_corpus).read_text(encoding="utf-8").splitlines()
            if line.strip()
        ]
        train_sentences = _train_sentences(templates, split_map)
        eligible = sample_augmentation_sentences(corpus_sentences, train_sentences)
        for sentence in eligible:
            if len(augmented) >= config.augmentation_count:
                break
            try:
                augmented.append(
                    make_augmented_pair(
                        sentence,
                        lexicon,
                        mlm,
                        pos=config.augmentation_pos,
                        locale=config.locale,
                    )
                )
            except FunlibError:
                continue  # sentence has no eligible word; try the next one

    pairs, stats = build_dataset(templates, variants, judgements, split_map, augmented)
    out_pairs = Path(config.out) / "pairs.jsonl"
    out_stats = Path(config.out) / "dataset_stats.csv"
    _atomic_write(out_pairs, "".join(labeled_pair_to_json(p) + "\n" for p in pairs))
    _atomic_write(out_stats, stats.table_csv())
    click.echo(f"wrote {out_pairs} ({len(pairs)} pairs) and {out_stats}")


def _train_sentences(templates, split_map) -> list[str]:
    from .templates import mask_all

    out = []
    for story_id, template in sorted(templates.items()):
        if split_map.get(story_id) is Split.TRAIN:
            out.extend(mask_all(s) for s in template.sentences if s.has_blanks)
    if not out:
        raise FunlibError("no train-split sentences to take the augmentation median from")
    return out


@main.command()
@click.option("--kind", type=click.Choice(["mfg", "corr", "per-story", "alpha"]), required=True)
@click.option("--top", type=click.Choice(["top3", "top10"]), default="top10", show_default=True)
@click.option(
    "--alpha-metric", type=click.Choice(["interval", "ordinal"]), default="interval", show_default=True
)
@_with_common
def report(kind: str, top: str, alpha_metric: str, config_path, **kwargs) -> None:
    """Emit evaluation reports from judgements and variant files."""
    config = _make_config(config_path, **kwargs)
    _require(config, "judgements")
    judgements = read_judgements(config.judgements)
    out_dir = Path(config.out)
    if kind == "alpha":
        lines = []
        for locale in (Locale.IN, Locale.US):
            if any(r.judge_country is locale for r in judgements):
                matrix = reliability_from_judgements(judgements, locale)
                value = krippendorff_alpha(matrix, AlphaMetric(alpha_metric))
                lines.append(f"{locale.value}\t{value!r}")
        out = out_dir / "alpha.tsv"
        _atomic_write(out, "".join(line + "\n" for line in lines))
    elif kind == "mfg":
        out = out_dir / "mfg_report.csv"
        csv = mfg_report_csv(_all_variants(config), judgements)
        _atomic_write(out, csv)
        _atomic_write(out_dir / "mfg_report.txt", render_text_table(csv))
    elif kind == "corr":
        out = out_dir / "correlation_report.csv"
        csv = correlation_report_csv(
            _all_variants(config), judgements, EvalConfig(top_selection=TopSelection(top))
        )
        _atomic_write(out, csv)
        _atomic_write(out_dir / "correlation_report.txt", render_text_table(csv))
    else:
        out = out_dir / "per_story.csv"
        _atomic_write(out, per_story_csv(_all_variants(config), judgements))
    click.echo(f"wrote {out}")


def entry() -> None:
    try:
        main(standalone_mode=False)
    except click.ClickException as exc:
        exc.show()
        sys.exit(exc.exit_code)
    except click.exceptions.Abort:
        sys.exit(130)
    except FunlibError as exc:
        print(f"error: {exc}", file=sys.stderr)
        sys.exit(1)


if __name__ == "__main__":
    entry()
