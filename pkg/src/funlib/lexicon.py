"""Word legality for blanks: dictionary membership, POS/inflection agreement,
semantic classes, slang blocking, single-word constraint.

Morphology is table-driven: each entry records its own number/tense forms,
so agreement checks are exact lookups, not rules.
"""
from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .errors import FunlibError
from .templates import HintType

# one word, Latin alphabet, internal hyphens allowed
_WORD_RE = re.compile(r"[A-Za-z]+(?:-[A-Za-z]+)*")


class LexiconError(FunlibError):
    """Malformed lexicon or blocklist input."""


class PartOfSpeech(enum.Enum):
    NOUN = "noun"
    VERB = "verb"
    ADJECTIVE = "adjective"
    ADVERB = "adverb"
    OTHER = "other"


class NumberForm(enum.Enum):
    SINGULAR = "singular"
    PLURAL = "plural"
    NA = "n/a"


class TenseForm(enum.Enum):
    BASE = "base"
    PAST = "past"
    ING = "ing"
    NA = "n/a"


class SemanticClass(enum.Enum):
    BODYPART = "bodypart"
    FOOD = "food"
    LIQUID = "liquid"
    PLACE = "place"
    ANIMAL = "animal"


@dataclass(frozen=True)
class LexiconEntry:
    surface: str
    lemma: str
    pos_tags: frozenset[PartOfSpeech]
    number: NumberForm
    tense_form: TenseForm
    semantic_classes: frozenset[SemanticClass]
    corpus_frequency: int

    def __post_init__(self) -> None:
        if not _WORD_RE.fullmatch(self.surface):
            raise LexiconError(f"bad surface {self.surface!r}: single Latin-alphabet word required")
        if self.corpus_frequency < 0:
            raise LexiconError(f"{self.surface!r}: negative corpus frequency")
        if PartOfSpeech.NOUN in self.pos_tags and self.number is NumberForm.NA:
            raise LexiconError(f"{self.surface!r}: noun entries must carry a number")
        if PartOfSpeech.VERB in self.pos_tags and self.tense_form is TenseForm.NA:
            raise LexiconError(f"{self.surface!r}: verb entries must carry a tense form")


_HINT_SEMANTIC = {
    HintType.BODYPART: SemanticClass.BODYPART,
    HintType.FOOD: SemanticClass.FOOD,
    HintType.LIQUID: SemanticClass.LIQUID,
    HintType.PLACE: SemanticClass.PLACE,
    HintType.ANIMAL: SemanticClass.ANIMAL,
}


def _entry_matches(entry: LexiconEntry, hint: HintType) -> bool:
    if hint is HintType.NOUN:
        return PartOfSpeech.NOUN in entry.pos_tags and entry.number is NumberForm.SINGULAR
    if hint is HintType.NOUN_PLURAL:
        return PartOfSpeech.NOUN in entry.pos_tags and entry.number is NumberForm.PLURAL
    if hint is HintType.VERB:
        return PartOfSpeech.VERB in entry.pos_tags and entry.tense_form is TenseForm.BASE
    if hint is HintType.VERB_PAST:
        return PartOfSpeech.VERB in entry.pos_tags and entry.tense_form is TenseForm.PAST
    if hint is HintType.VERB_ING:
        return PartOfSpeech.VERB in entry.pos_tags and entry.tense_form is TenseForm.ING
    if hint is HintType.ADJECTIVE:
        return PartOfSpeech.ADJECTIVE in entry.pos_tags
    if hint is HintType.ADVERB:
        return PartOfSpeech.ADVERB in entry.pos_tags
    return _HINT_SEMANTIC[hint] in entry.semantic_classes


class Lexicon:
    """Immutable after construction; surfaces are stored lowercased and the
    blocklist always wins over entries."""

    def __init__(self, entries: Iterable[LexiconEntry], blocklist: Iterable[str] = ()) -> None:
        merged: dict[str, LexiconEntry] = {}
        for entry in entries:
            key = entry.surface.lower()
            prior = merged.get(key)
            merged[key] = entry if prior is None else _merge(prior, entry)
        self._entries: dict[str, LexiconEntry] = merged
        self._blocklist: frozenset[str] = frozenset(w.lower() for w in blocklist)
        freqs = sorted(e.corpus_frequency for e in merged.values())
        self._sorted_freqs: list[int] = freqs

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, word: str) -> bool:
        return word.lower() in self._entries

    def get(self, word: str) -> LexiconEntry | None:
        return self._entries.get(word.lower())

    @property
    def blocklist(self) -> frozenset[str]:
        return self._blocklist

    def with_blocklist(self, blocklist: Iterable[str]) -> "Lexicon":
        return Lexicon(self._entries.values(), blocklist)

    def satisfies_hint(self, word: str, hint: HintType) -> bool:
        """True iff ``word`` may legally fill a blank with ``hint``.

        Total: any input returns a boolean.  Requires dictionary
        membership, one Latin-alphabet token, not blocklisted, and
        POS/number/tense/semantic agreement with the hint.
        """
        if not isinstance(word, str) or not _WORD_RE.fullmatch(word):
            return False
        if word.lower() in self._blocklist:
            return False
        entry = self._entries.get(word.lower())
        if entry is None:
            return False
        return _entry_matches(entry, hint)

    def filter_candidates(self, candidates: Sequence, hint: HintType) -> list:
        """Order-preserving subsequence of ``candidates`` whose words satisfy
        ``hint``.  Items may be plain words or objects with a ``word``
        attribute (e.g. mask scores)."""
        out = []
        for c in candidates:
            word = c if isinstance(c, str) else c.word
            if self.satisfies_hint(word, hint):
                out.append(c)
        return out

    def frequency_percentile(self, word: str) -> float:
        """Fraction of entries with corpus frequency <= this word's; 0.0 for
        unknown words."""
        entry = self.get(word)
        if entry is None or not self._sorted_freqs:
            return 0.0
        import bisect

        rank = bisect.bisect_right(self._sorted_freqs, entry.corpus_frequency)
        return rank / len(self._sorted_freqs)


def _merge(a: LexiconEntry, b: LexiconEntry) -> LexiconEntry:
    number = a.number if b.number is NumberForm.NA else b.number
    if a.number is not NumberForm.NA and b.number is not NumberForm.NA and a.number is not b.number:
        raise LexiconError(f"{a.surface!r}: conflicting number forms {a.number.value}/{b.number.value}")
    tense = a.tense_form if b.tense_form is TenseForm.NA else b.tense_form
    if (
        a.tense_form is not TenseForm.NA
        and b.tense_form is not TenseForm.NA
        and a.tense_form is not b.tense_form
    ):
        raise LexiconError(f"{a.surface!r}: conflicting tense forms {a.tense_form.value}/{b.tense_form.value}")
    return LexiconEntry(
        surface=a.surface,
        lemma=a.lemma,
        pos_tags=a.pos_tags | b.pos_tags,
        number=number,
        tense_form=tense,
        semantic_classes=a.semantic_classes | b.semantic_classes,
        corpus_frequency=a.corpus_frequency + b.corpus_frequency,
    )


def _parse_line(line: str, lineno: int) -> LexiconEntry:
    parts = line.split("\t")
    if len(parts) != 7:
        raise LexiconError(f"line {lineno}: expected 7 tab-separated fields, got {len(parts)}")
    surface, lemma, pos_text, number_text, tense_text, classes_text, freq_text = parts
    try:
        pos = PartOfSpeech(pos_text.strip())
        number = NumberForm(number_text.strip())
        tense = TenseForm(tense_text.strip())
        classes = frozenset(
            SemanticClass(c.strip()) for c in classes_text.split(",") if c.strip()
        )
        frequency = int(freq_text)
    except ValueError as exc:
        raise LexiconError(f"line {lineno}: {exc}") from None
    try:
        return LexiconEntry(
            surface=surface.strip().lower(),
            lemma=lemma.strip().lower(),
            pos_tags=frozenset({pos}),
            number=number,
            tense_form=tense,
            semantic_classes=classes,
            corpus_frequency=frequency,
        )
    except LexiconError as exc:
        raise LexiconError(f"line {lineno}: {exc}") from None


def load_lexicon(path: str | Path, blocklist_path: str | Path | None = None) -> Lexicon:
    """Load a lexicon TSV (surface, lemma, pos, number, tense, classes, freq).

    Duplicate surfaces merge: POS and semantic classes union, frequencies
    add, number/tense keep the non-"n/a" value (conflicts are errors).
    """
    text = Path(path).read_text(encoding="utf-8")
    entries = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        entries.append(_parse_line(line, lineno))
    if not entries:
        raise LexiconError(f"{path}: empty lexicon")
    blocklist = load_blocklist(blocklist_path) if blocklist_path else ()
    try:
        return Lexicon(entries, blocklist)
    except LexiconError as exc:
        raise LexiconError(f"{path}: {exc}") from None


def load_blocklist(path: str | Path) -> frozenset[str]:
    words = set()
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        word = line.strip()
        if word and not word.startswith("#"):
            words.add(word.lower())
    return frozenset(words)
