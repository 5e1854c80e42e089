"""Judgement ingestion, qualification rules, humor labels, and classifier
dataset construction (including corpus augmentation pairs).
"""
from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import FunlibError
from .lexicon import Lexicon, NumberForm, PartOfSpeech, TenseForm
from .scoring import Locale, ScorerBundle
from .templates import (
    MASK,
    HintType,
    Source,
    StoryTemplate,
    mask_all,
    render_sentence,
)

GRADE_SCALE = (0, 1, 2, 3)  # 0 not funny .. 3 funny
MIN_TASK_SECONDS = 240.0  # judge qualification floor: at least 4 minutes
QUALIFYING_MFG = 1.0


class AnnotationError(FunlibError):
    """Judgement or dataset inputs violate their contracts."""


def _check_grade(value: int, name: str = "grade") -> int:
    if not isinstance(value, int) or isinstance(value, bool) or value not in GRADE_SCALE:
        raise AnnotationError(f"{name} must be an integer in {GRADE_SCALE}, got {value!r}")
    return value


class Split(enum.Enum):
    TRAIN = "train"
    VALIDATION = "validation"
    TEST = "test"


class Origin(enum.Enum):
    ANNOTATED = "annotated"
    WIKI_AUGMENTED = "wiki_augmented"


@dataclass(frozen=True)
class JudgementRecord:
    """One judge's grades for one filled story variant."""

    story_id: str
    variant_id: str
    judge_id: str
    judge_country: Locale
    funniness: int
    coherence: int
    deviation: int
    incongruity: bool
    word_labels: tuple[tuple[int, bool], ...]  # (blank ordinal, is_funny)
    verification_passed: bool
    time_spent_sec: float

    def __post_init__(self) -> None:
        if self.judge_country not in (Locale.IN, Locale.US):
            raise AnnotationError(f"judge_country must be IN or US, got {self.judge_country}")
        for name in ("funniness", "coherence", "deviation"):
            _check_grade(getattr(self, name), name)
        if self.time_spent_sec < 0:
            raise AnnotationError(f"time_spent_sec must be >= 0, got {self.time_spent_sec}")
        ordinals = [o for o, _ in self.word_labels]
        if len(set(ordinals)) != len(ordinals):
            raise AnnotationError("duplicate blank ordinal in word_labels")

    @property
    def word_labels_dict(self) -> dict[int, bool]:
        return dict(self.word_labels)


def judgement_to_json(rec: JudgementRecord) -> str:
    payload = {
        "story_id": rec.story_id,
        "variant_id": rec.variant_id,
        "judge_id": rec.judge_id,
        "judge_country": rec.judge_country.value,
        "funniness": rec.funniness,
        "coherence": rec.coherence,
        "deviation": rec.deviation,
        "incongruity": rec.incongruity,
        "word_labels": {str(o): ("funny" if f else "not_funny") for o, f in sorted(rec.word_labels)},
        "verification_passed": rec.verification_passed,
        "time_spent_sec": rec.time_spent_sec,
    }
    return json.dumps(payload, sort_keys=True)


def judgement_from_json(line: str, lineno: int = 0) -> JudgementRecord:
    try:
        payload = json.loads(line)
        labels = tuple(
            sorted((int(o), label == "funny") for o, label in payload["word_labels"].items())
        )
        return JudgementRecord(
            story_id=payload["story_id"],
            variant_id=payload["variant_id"],
            judge_id=payload["judge_id"],
            judge_country=Locale(payload["judge_country"]),
            funniness=payload["funniness"],
            coherence=payload["coherence"],
            deviation=payload["deviation"],
            incongruity=bool(payload["incongruity"]),
            word_labels=labels,
            verification_passed=bool(payload["verification_passed"]),
            time_spent_sec=float(payload["time_spent_sec"]),
        )
    except (KeyError, ValueError, TypeError) as exc:
        raise AnnotationError(f"judgement line {lineno}: {exc}") from None


def read_judgements(path: str | Path) -> list[JudgementRecord]:
    out = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if line.strip():
            out.append(judgement_from_json(line, lineno))
    return out


def write_judgements(records: Iterable[JudgementRecord], path: str | Path) -> None:
    Path(path).write_text(
        "".join(judgement_to_json(r) + "\n" for r in records), encoding="utf-8"
    )


def judgements_to_csv(records: Sequence[JudgementRecord]) -> str:
    """Flat CSV export; word labels collapse into ordinal=label pairs."""
    header = (
        "story_id,variant_id,judge_id,judge_country,funniness,coherence,"
        "deviation,incongruity,word_labels,verification_passed,time_spent_sec"
    )
    lines = [header]
    for r in records:
        labels = ";".join(
            f"{o}={'funny' if f else 'not_funny'}" for o, f in sorted(r.word_labels)
        )
        lines.append(
            f"{r.story_id},{r.variant_id},{r.judge_id},{r.judge_country.value},"
            f"{r.funniness},{r.coherence},{r.deviation},{int(r.incongruity)},"
            f"{labels},{int(r.verification_passed)},{r.time_spent_sec!r}"
        )
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Qualification and labeling rules


def qualify_judge(
    grades: Sequence[tuple[int, bool]],
    verification_passed: bool,
    time_spent_sec: float,
) -> bool:
    """Screening over 7 pre-filled stories given as (grade, is_wikipedia).

    Qualifies iff the 3 Wikipedia stories all get 0, at least 3 of the 4
    player-filled stories get a grade in {1,2,3}, the verification
    questions were answered correctly, and at least 4 minutes were spent.
    """
    wiki = [g for g, is_wiki in grades if is_wiki]
    others = [g for g, is_wiki in grades if not is_wiki]
    if len(wiki) != 3 or len(others) != 4:
        raise AnnotationError(
            f"expected 3 Wikipedia and 4 player-filled grades, got {len(wiki)} and {len(others)}"
        )
    for g, _ in grades:
        _check_grade(g)
    if any(g != 0 for g in wiki):
        return False
    if sum(1 for g in others if g in (1, 2, 3)) < 3:
        return False
    if not verification_passed:
        return False
    return time_spent_sec >= MIN_TASK_SECONDS


def mfg(grades: Sequence[int]) -> float:
    """Mean funniness grade (canonically over 5 judgements)."""
    if not grades:
        raise AnnotationError("mfg of an empty grade list is undefined")
    for g in grades:
        _check_grade(g)
    return sum(grades) / len(grades)


def qualify_player(story_mfgs: Sequence[float]) -> bool:
    """A player qualifies with MFG >= 1 on at least one story."""
    if not story_mfgs:
        raise AnnotationError("player has no graded stories")
    return any(m >= QUALIFYING_MFG for m in story_mfgs)


def word_label(votes: Sequence[bool]) -> bool:
    """Majority vote over per-word funny judgements; even splits resolve to
    not funny."""
    if not votes:
        raise AnnotationError("word_label needs at least one vote")
    funny = sum(1 for v in votes if v)
    return funny > len(votes) - funny


def sentence_label(labels: Sequence[bool]) -> bool:
    """Funny iff at least 50% of the filled-in words are funny (inclusive)."""
    if not labels:
        raise AnnotationError("sentence_label needs at least one word label")
    funny = sum(1 for v in labels if v)
    return funny * 2 >= len(labels)


# ---------------------------------------------------------------------------
# Dataset construction


@dataclass(frozen=True)
class LabeledPair:
    masked_sentence: str
    filled_sentence: str
    funny: bool
    locale: Locale
    split: Split
    origin: Origin


@dataclass(frozen=True)
class Variant:
    """One filled-in story: the unit judges grade."""

    story_id: str
    variant_id: str
    source: Source
    player_locale: Locale
    fills: tuple[tuple[int, str], ...]
    rank_index: int  # produced order within (story, source, player locale)

    @property
    def fills_dict(self) -> dict[int, str]:
        return dict(self.fills)


def load_variants(path: str | Path, player_locale: Locale) -> list[Variant]:
    """Read a filled-story record file written by one player-locale run.

    The record format carries no variant identity, so ids are derived from
    file order: ``<source>:<player_locale>:<index>`` with the index counting
    records per (story, source).  That index is also the produced rank.
    """
    from .templates import read_filled_stories

    counters: dict[tuple[str, Source], int] = {}
    variants = []
    for rec in read_filled_stories(path):
        idx = counters.get((rec.template_ref, rec.source), 0)
        counters[(rec.template_ref, rec.source)] = idx + 1
        variants.append(
            Variant(
                story_id=rec.template_ref,
                variant_id=f"{rec.source.value}:{player_locale.value}:{idx}",
                source=rec.source,
                player_locale=player_locale,
                fills=rec.fills,
                rank_index=idx,
            )
        )
    return variants


def labeled_pair_to_json(pair: LabeledPair) -> str:
    return json.dumps(
        {
            "masked_sentence": pair.masked_sentence,
            "filled_sentence": pair.filled_sentence,
            "label": "funny" if pair.funny else "not_funny",
            "locale": pair.locale.value,
            "split": pair.split.value,
            "origin": pair.origin.value,
        },
        sort_keys=True,
    )


@dataclass(frozen=True)
class DatasetStats:
    counts: tuple[tuple[tuple[str, str, str], int], ...]  # ((split, locale, label), n)

    def count(self, split: Split, locale: Locale, funny: bool) -> int:
        key = (split.value, locale.value, "funny" if funny else "not_funny")
        return dict(self.counts).get(key, 0)

    def table_csv(self) -> str:
        """Stats grid: one row per split, funny/not-funny columns per locale."""
        locales = sorted({loc for (_, loc, _) in dict(self.counts)})
        header = ["type"]
        for label in ("funny", "not_funny"):
            header.extend(f"{label}_{loc}" for loc in locales)
        rows = [",".join(header)]
        for split in Split:
            row = [split.value]
            for label in ("funny", "not_funny"):
                for loc in locales:
                    row.append(str(dict(self.counts).get((split.value, loc, label), 0)))
            rows.append(",".join(row))
        return "\n".join(rows) + "\n"


def build_dataset(
    templates: Mapping[str, StoryTemplate],
    variants: Sequence[Variant],
    judgements: Sequence[JudgementRecord],
    split_map: Mapping[str, Split],
    augmented: Sequence[LabeledPair] = (),
) -> tuple[list[LabeledPair], DatasetStats]:
    """Label every judged variant's blank-bearing sentences and append the
    given augmentation pairs.

    Word labels come from majority vote per blank, sentence labels from the
    at-least-50% rule; blank-free sentences are skipped.  Each judge
    country yields its own locale-specific pairs.
    """
    variant_index = {(v.story_id, v.variant_id): v for v in variants}
    groups: dict[tuple[str, str, Locale], list[JudgementRecord]] = {}
    for rec in judgements:
        if rec.story_id not in templates:
            raise AnnotationError(f"judged story {rec.story_id!r} missing from templates")
        if (rec.story_id, rec.variant_id) not in variant_index:
            raise AnnotationError(f"judged variant {rec.variant_id!r} missing from variants")
        template = templates[rec.story_id]
        wanted = {b.index for b in template.blanks()}
        got = {o for o, _ in rec.word_labels}
        if got != wanted:
            raise AnnotationError(
                f"story {rec.story_id!r} variant {rec.variant_id!r}: word_labels cover "
                f"{sorted(got)} but template has blanks {sorted(wanted)}"
            )
        groups.setdefault((rec.story_id, rec.variant_id, rec.judge_country), []).append(rec)

    pairs: list[LabeledPair] = []
    for (story_id, variant_id, locale) in sorted(groups, key=lambda k: (k[0], k[1], k[2].value)):
        recs = groups[(story_id, variant_id, locale)]
        template = templates[story_id]
        variant = variant_index[(story_id, variant_id)]
        if story_id not in split_map:
            raise AnnotationError(f"story {story_id!r} missing from split map")
        blank_labels = {
            ordinal: word_label([r.word_labels_dict[ordinal] for r in recs])
            for ordinal in {b.index for b in template.blanks()}
        }
        for sentence in template.sentences:
            ordinals = [b.index for b in sentence.blanks()]
            if not ordinals:
                continue  # blank-free sentences are not used for training
            label = sentence_label([blank_labels[o] for o in ordinals])
            fills = {}
            for o in ordinals:
                if o not in variant.fills_dict:
                    raise AnnotationError(f"variant {variant_id!r} does not fill blank {o}")
                fills[o] = variant.fills_dict[o]
            pairs.append(
                LabeledPair(
                    masked_sentence=mask_all(sentence),
                    filled_sentence=render_sentence(sentence, fills),
                    funny=label,
                    locale=locale,
                    split=split_map[story_id],
                    origin=Origin.ANNOTATED,
                )
            )
    pairs.extend(augmented)

    counts: dict[tuple[str, str, str], int] = {}
    for pair in pairs:
        key = (pair.split.value, pair.locale.value, "funny" if pair.funny else "not_funny")
        counts[key] = counts.get(key, 0) + 1
    stats = DatasetStats(counts=tuple(sorted(counts.items())))
    return pairs, stats


# ---------------------------------------------------------------------------
# Wikipedia-style augmentation


def median_word_count(sentences: Sequence[str]) -> int:
    """Median whitespace word count; even-length medians round half up."""
    if not sentences:
        raise AnnotationError("no sentences to take a median over")
    counts = sorted(len(s.split()) for s in sentences)
    mid = len(counts) // 2
    if len(counts) % 2 == 1:
        return counts[mid]
    return math.floor((counts[mid - 1] + counts[mid]) / 2 + 0.5)


def sample_augmentation_sentences(
    corpus_sentences: Sequence[str], train_sentences: Sequence[str], window: int = 5
) -> list[str]:
    """Corpus sentences whose word count is within +/-window of the median
    train-sentence word count."""
    if not corpus_sentences:
        raise AnnotationError("empty augmentation corpus")
    m = median_word_count(train_sentences)
    return [s for s in corpus_sentences if m - window <= len(s.split()) <= m + window]


_POS_TO_HINTS = {
    PartOfSpeech.NOUN: (HintType.NOUN, HintType.NOUN_PLURAL),
    PartOfSpeech.VERB: (HintType.VERB, HintType.VERB_PAST, HintType.VERB_ING),
    PartOfSpeech.ADJECTIVE: (HintType.ADJECTIVE,),
    PartOfSpeech.ADVERB: (HintType.ADVERB,),
}


def _hint_for_entry(pos: PartOfSpeech, entry) -> HintType:
    if pos is PartOfSpeech.NOUN:
        return HintType.NOUN_PLURAL if entry.number is NumberForm.PLURAL else HintType.NOUN
    if pos is PartOfSpeech.VERB:
        if entry.tense_form is TenseForm.PAST:
            return HintType.VERB_PAST
        if entry.tense_form is TenseForm.ING:
            return HintType.VERB_ING
        return HintType.VERB
    if pos is PartOfSpeech.ADJECTIVE:
        return HintType.ADJECTIVE
    return HintType.ADVERB


def make_augmented_pair(
    sentence: str,
    lexicon: Lexicon,
    mlm_scorer: ScorerBundle,
    pos: PartOfSpeech = PartOfSpeech.NOUN,
    locale: Locale = Locale.NEUTRAL,
    split: Split = Split.TRAIN,
    top_k: int = 10_000,
) -> LabeledPair:
    """Mask the first word of the configured POS and refill it with the
    masked LM's top legal candidate; the pair is labeled not funny.

    The replacement may coincide with the original word.
    """
    if pos not in _POS_TO_HINTS:
        raise AnnotationError(f"augmentation POS must be one of the four content POS, got {pos}")
    tokens = sentence.split()
    target = None
    for i, raw in enumerate(tokens):
        core = raw.strip(".,!?;:()[]\"'").lower()
        entry = lexicon.get(core) if core else None
        if entry is not None and pos in entry.pos_tags:
            target = (i, raw, core, entry)
            break
    if target is None:
        raise AnnotationError(f"no eligible {pos.value} to mask in {sentence!r}")
    i, raw, core, entry = target
    lowered = raw.lower()
    start = lowered.index(core)
    masked_token = raw[:start] + MASK + raw[start + len(core):]
    masked_tokens = tokens[:i] + [masked_token] + tokens[i + 1:]
    masked_text = " ".join(masked_tokens)

    hint = _hint_for_entry(pos, entry)
    candidates = mlm_scorer.mask_distribution(masked_text, 0, top_k)
    replacement = None
    for ms in candidates:
        if lexicon.satisfies_hint(ms.word, hint):
            replacement = ms.word
            break
    if replacement is None:
        raise AnnotationError(f"no legal candidate to refill {sentence!r}")
    filled_token = raw[:start] + replacement + raw[start + len(core):]
    filled_text = " ".join(tokens[:i] + [filled_token] + tokens[i + 1:])
    return LabeledPair(
        masked_sentence=masked_text,
        filled_sentence=filled_text,
        funny=False,
        locale=locale,
        split=split,
        origin=Origin.WIKI_AUGMENTED,
    )
