"""Story templates with typed blanks: parsing, masking, rendering, serialization.

A template document is UTF-8 text: the first line is ``# <title>``, and each
subsequent non-empty line is one sentence.  Blanks are written ``{{hint}}``
(optionally ``{{ordinal:hint}}``; explicit ordinals must match left-to-right
assignment order).  Blank markers must be

delimited by whitespace, by opening quotes, or by trailing punctuation
(``{{noun}}.`` is fine, ``x{{noun}}`` is rejected).
"""
from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Mapping

from .errors import FunlibError

MASK = "[MASK]"

_CLOSE_PUNCT = ".,!?;:"
_OPEN_QUOTES = "“‘"  # curly opening quotes attach to the next token
_BLANK_TOKEN_RE = re.compile(
    r"^(?P<pre>[“‘]*)\{\{(?P<inner>[^{}]*)\}\}(?P<post>[.,!?;:]*)$"
)
_SLUG_RE = re.compile(r"[^a-z0-9]+")


class TemplateError(FunlibError):
    """Malformed template document or illegal fill/mask request."""


class HintType(enum.Enum):
    """Constraint attached to a blank. The inventory is closed: unknown
    hint keywords are parse errors, never coerced."""

    NOUN = "noun"
    NOUN_PLURAL = "noun_plural"
    VERB = "verb"
    VERB_PAST = "verb_past"
    VERB_ING = "verb_ing"
    ADJECTIVE = "adjective"
    ADVERB = "adverb"
    BODYPART = "bodypart"
    FOOD = "food"
    LIQUID = "liquid"
    PLACE = "place"
    ANIMAL = "animal"


class Source(enum.Enum):
    """How a filled story was produced."""

    FREE_TEXT = "FreeText"
    MLM = "MLM"
    YODALIB = "YodaLib"


@dataclass(frozen=True)
class LiteralToken:
    text: str


@dataclass(frozen=True)
class Blank:
    index: int  # 0-based ordinal, unique across the whole story
    hint: HintType


Token = LiteralToken | Blank


@dataclass(frozen=True)
class SentenceTemplate:
    tokens: tuple[Token, ...]

    def blanks(self) -> tuple[Blank, ...]:
        return tuple(t for t in self.tokens if isinstance(t, Blank))

    @property
    def has_blanks(self) -> bool:
        return any(isinstance(t, Blank) for t in self.tokens)


@dataclass(frozen=True)
class StoryTemplate:
    story_id: str
    title: str
    sentences: tuple[SentenceTemplate, ...]

    def __post_init__(self) -> None:
        if not self.title:
            raise TemplateError("story title must be non-empty")
        if not self.sentences:
            raise TemplateError("story must have at least one sentence")
        ordinals = [b.index for s in self.sentences for b in s.blanks()]
        if ordinals != sorted(set(ordinals)) or ordinals != list(range(len(ordinals))):
            raise TemplateError("blank ordinals must be 0..B-1, increasing left-to-right")

    def blanks(self) -> tuple[Blank, ...]:
        return tuple(b for s in self.sentences for b in s.blanks())

    @property
    def blank_count(self) -> int:
        return len(self.blanks())

    def hint_of(self, ordinal: int) -> HintType:
        for b in self.blanks():
            if b.index == ordinal:
                return b.hint
        raise TemplateError(f"no such blank: {ordinal}")

    def sentence_of_blank(self, ordinal: int) -> int:
        for i, s in enumerate(self.sentences):
            if any(b.index == ordinal for b in s.blanks()):
                return i
        raise TemplateError(f"no such blank: {ordinal}")


@dataclass(frozen=True)
class FilledStory:
    """A complete set of fills for one template."""

    template_ref: str
    fills: tuple[tuple[int, str], ...]  # (ordinal, word), ordinal-sorted
    source: Source

    @property
    def fills_dict(self) -> dict[int, str]:
        return dict(self.fills)


@dataclass(frozen=True)
class MaskedSentence:
    """Rendered sentence with exactly one designated target mask.

    ``mask_index`` is the 0-based index of the target among the mask
    markers of ``text``, counted left to right.
    """

    text: str
    mask_index: int


def slugify(title: str) -> str:
    slug = _SLUG_RE.sub("-", title.lower()).strip("-")
    return slug or "untitled"


def detokenize(tokens: Iterable[str]) -> str:
    """Single-space join with punctuation attachment.

    Tokens made only of ``.,!?;:`` attach to the preceding token; curly
    opening quotes attach to the following one.
    """
    parts: list[str] = []
    glue_next = False
    for tok in tokens:
        if parts and tok and all(c in _CLOSE_PUNCT for c in tok):
            parts[-1] += tok
            continue
        if glue_next and parts:
            parts[-1] += tok
        else:
            parts.append(tok)
        glue_next = bool(tok) and all(c in _OPEN_QUOTES for c in tok)
    return " ".join(parts)


def _parse_blank_inner(inner: str, next_ordinal: int, seen: set[int], lineno: int) -> Blank:
    inner = inner.strip()
    explicit: int | None = None
    hint_text = inner
    if ":" in inner:
        left, hint_text = inner.split(":", 1)
        try:
            explicit = int(left)
        except ValueError:
            raise TemplateError(f"line {lineno}: bad blank ordinal {left!r}") from None
    try:
        hint = HintType(hint_text.strip())
    except ValueError:
        raise TemplateError(f"line {lineno}: unknown hint keyword {hint_text.strip()!r}") from None
    if explicit is not None:
        if explicit in seen:
            raise TemplateError(f"line {lineno}: duplicate blank ordinal {explicit}")
        if explicit != next_ordinal:
            raise TemplateError(
                f"line {lineno}: blank ordinal {explicit} out of order (expected {next_ordinal})"
            )
    return Blank(index=next_ordinal, hint=hint)


def _split_literal(raw: str) -> list[str]:
    # peel exactly what detokenize glues back, so parse/serialize invert
    lead = ""
    while raw and raw[0] in _OPEN_QUOTES:
        lead += raw[0]
        raw = raw[1:]
    trail = ""
    while raw and raw[-1] in _CLOSE_PUNCT:
        trail = raw[-1] + trail
        raw = raw[:-1]
    return [part for part in (lead, raw, trail) if part]


def _parse_sentence(line: str, next_ordinal: int, seen: set[int], lineno: int) -> SentenceTemplate:
    tokens: list[Token] = []
    for raw in line.split():
        if "{{" not in raw and "}}" not in raw:
            tokens.extend(LiteralToken(part) for part in _split_literal(raw))
            continue
        m = _BLANK_TOKEN_RE.match(raw)
        if m is None:
            raise TemplateError(f"line {lineno}: unbalanced or malformed blank marker in {raw!r}")
        if m.group("pre"):
            tokens.append(LiteralToken(m.group("pre")))
        blank = _parse_blank_inner(m.group("inner"), next_ordinal, seen, lineno)
        seen.add(blank.index)
        next_ordinal += 1
        tokens.append(blank)
        if m.group("post"):
            tokens.append(LiteralToken(m.group("post")))
    return SentenceTemplate(tokens=tuple(tokens))


def parse_template(text: str, story_id: str | None = None) -> StoryTemplate:
    """Parse a template document.

    ``story_id`` defaults to a slug of the title so that serialization
    (which carries no id) round-trips.
    """
    lines = text.split("\n")
    if not lines or not lines[0].startswith("# "):
        raise TemplateError("line 1: document must start with '# <title>'")
    title = lines[0][2:].strip()
    if not title:
        raise TemplateError("line 1: empty title")
    sentences: list[SentenceTemplate] = []
    next_ordinal = 0
    seen: set[int] = set()
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        sentence = _parse_sentence(line.strip(), next_ordinal, seen, lineno)
        next_ordinal += len(sentence.blanks())
        sentences.append(sentence)
    if not sentences:
        raise TemplateError("document has no sentences")
    return StoryTemplate(story_id=story_id or slugify(title), title=title, sentences=tuple(sentences))


def load_template(path: str | Path, story_id: str | None = None) -> StoryTemplate:
    text = Path(path).read_text(encoding="utf-8")
    try:
        return parse_template(text, story_id=story_id)
    except TemplateError as exc:
        raise TemplateError(f"{path}: {exc}") from None


def serialize_template(t: StoryTemplate) -> str:
    """Canonical text form: blanks as ``{{hint}}``, one sentence per line."""
    lines = [f"# {t.title}"]
    for s in t.sentences:
        lines.append(detokenize(_token_texts(s, fills={}, blank_text=lambda b: "{{" + b.hint.value + "}}")))
    return "\n".join(lines) + "\n"


def _token_texts(s: SentenceTemplate, fills: Mapping[int, str], blank_text) -> Iterator[str]:
    for tok in s.tokens:
        if isinstance(tok, LiteralToken):
            yield tok.text
        elif tok.index in fills:
            yield fills[tok.index]
        else:
            yield blank_text(tok)


def render_sentence(s: SentenceTemplate, fills: Mapping[int, str]) -> str:
    """Render one sentence; every blank of ``s`` must be covered by ``fills``."""
    missing = [b.index for b in s.blanks() if b.index not in fills]
    if missing:
        raise TemplateError(f"missing fill for blank(s) {missing}")
    return detokenize(_token_texts(s, fills, blank_text=None))


def render_partial(s: SentenceTemplate, fills: Mapping[int, str]) -> str:
    """Render with the given fills; unfilled blanks stay as mask markers."""
    return detokenize(_token_texts(s, fills, blank_text=lambda b: MASK))


def mask_all(s: SentenceTemplate) -> str:
    """The fully masked form of a sentence (every blank a mask marker)."""
    return render_partial(s, {})


def mask_sentence(
    s: SentenceTemplate,
    blank: int,
    fills: Mapping[int, str] | None = None,
    mask_future: bool = True,
) -> MaskedSentence:
    """Render ``s`` for scoring blank ``blank``.

    Blanks left of the target must all be filled; blanks right of it must
    not be, and render as mask markers (or as ``{{hint}}`` placeholders
    when ``mask_future`` is false).
    """
    fills = dict(fills or {})
    ordinals = [b.index for b in s.blanks()]
    if blank not in ordinals:
        raise TemplateError(f"no such blank: {blank}")
    left = [o for o in ordinals if o < blank]
    missing = [o for o in left if o not in fills]
    if missing:
        raise TemplateError(f"blanks left of target must be filled; missing {missing}")
    overfilled = sorted(o for o in fills if o >= blank)
    if overfilled:
        raise TemplateError(f"fill given for target or later blank(s) {overfilled}")

    def blank_text(b: Blank) -> str:
        if b.index == blank or mask_future:
            return MASK
        return "{{" + b.hint.value + "}}"

    text = detokenize(_token_texts(s, fills, blank_text=blank_text))
    # Target mask occurrence index: number of unfilled blanks rendered as
    # masks before the target (zero under the left-to-right discipline).
    before = sum(1 for o in ordinals if o < blank and o not in fills)
    return MaskedSentence(text=text, mask_index=before)


def render_story(t: StoryTemplate, fills: Mapping[int, str]) -> str:
    """Render the whole story: title line, then one sentence per line.

    ``fills`` must cover every blank exactly once, with no extras.
    """
    wanted = {b.index for b in t.blanks()}
    got = set(fills)
    if got != wanted:
        missing, extra = sorted(wanted - got), sorted(got - wanted)
        raise TemplateError(f"fills mismatch: missing {missing}, extra {extra}")
    lines = [t.title]
    lines.extend(render_sentence(s, fills) for s in t.sentences)
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# FilledStory records: story_id<TAB>source<TAB>ordinal=word;ordinal=word;...

def format_filled_story(record: FilledStory) -> str:
    body = ";".join(f"{o}={w}" for o, w in sorted(record.fills))
    return f"{record.template_ref}\t{record.source.value}\t{body}"


def parse_filled_story(line: str, lineno: int = 0) -> FilledStory:
    parts = line.rstrip("\n").split("\t")
    if len(parts) != 3:
        raise TemplateError(f"line {lineno}: expected 3 tab-separated fields, got {len(parts)}")
    story_id, source_text, body = parts
    try:
        source = Source(source_text)
    except ValueError:
        raise TemplateError(f"line {lineno}: unknown source {source_text!r}") from None
    fills: list[tuple[int, str]] = []
    if body:
        for item in body.split(";"):
            if "=" not in item:
                raise TemplateError(f"line {lineno}: bad fill entry {item!r}")
            key, word = item.split("=", 1)
            try:
                ordinal = int(key)
            except ValueError:
                raise TemplateError(f"line {lineno}: bad ordinal {key!r}") from None
            fills.append((ordinal, word))
    ordinals = [o for o, _ in fills]
    if len(set(ordinals)) != len(ordinals):
        raise TemplateError(f"line {lineno}: duplicate fill ordinal")
    return FilledStory(template_ref=story_id, fills=tuple(sorted(fills)), source=source)


def write_filled_stories(records: Iterable[FilledStory], path: str | Path) -> None:
    Path(path).write_text(
        "".join(format_filled_story(r) + "\n" for r in records), encoding="utf-8"
    )


def read_filled_stories(path: str | Path) -> list[FilledStory]:
    out = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if line.strip():
            out.append(parse_filled_story(line, lineno))
    return out
