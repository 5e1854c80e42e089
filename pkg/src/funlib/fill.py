"""Candidate selection and beam search over a sentence's blanks.

Blanks are processed left to right.  Every surviving partial fill is
extended with its legal candidate list, extensions are scored, and the
beam is pruned to the top n with a deterministic tie-break, so ranked
output is identical regardless of evaluation parallelism.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

from .errors import FunlibError
from .lexicon import Lexicon
from .scoring import MaskScore, ScorerBundle
from .templates import SentenceTemplate, mask_all, mask_sentence, render_partial, render_sentence


class FillError(FunlibError):
    """Beam search cannot proceed on this sentence."""


class UnfillableBlankError(FillError):
    def __init__(self, ordinal: int) -> None:
        super().__init__(f"unfillable blank {ordinal}: no legal candidates survive")
        self.ordinal = ordinal


@dataclass(frozen=True)
class FillParams:
    k: int = 10_000  # candidate pool retained per mask
    n: int = 100  # beam width

    def __post_init__(self) -> None:
        if not self.k >= self.n >= 1:
            raise FillError(f"need k >= n >= 1, got k={self.k}, n={self.n}")


@dataclass(frozen=True)
class Transformation:
    """A filled-in version of a masked sentence, scored for humor."""

    masked_text: str
    filled_text: str
    fills: tuple[tuple[int, str], ...]  # ordinal-sorted
    p_funny: float | None  # None for transformations never humor-ranked
    fill_logprobs: tuple[tuple[int, float], ...]

    @property
    def fills_dict(self) -> dict[int, str]:
        return dict(self.fills)

    @property
    def fill_words(self) -> tuple[str, ...]:
        return tuple(w for _, w in sorted(self.fills))

    @property
    def mean_fill_logprob(self) -> float:
        if not self.fill_logprobs:
            raise FillError("transformation has no fills")
        return sum(lp for _, lp in self.fill_logprobs) / len(self.fill_logprobs)


def select_candidates(
    sentence: SentenceTemplate,
    blank: int,
    fills,
    scorer: ScorerBundle,
    lexicon: Lexicon,
    params: FillParams,
) -> list[MaskScore]:
    """Top-k masked-LM candidates for one blank, filtered down to words that
    legally satisfy the blank's hint (order preserved, may be empty)."""
    masked = mask_sentence(sentence, blank, fills, mask_future=True)
    pool = scorer.mask_distribution(masked.text, masked.mask_index, params.k)
    hint = next(b.hint for b in sentence.blanks() if b.index == blank)
    return lexicon.filter_candidates(pool, hint)


@dataclass(frozen=True)
class _Item:
    fills: tuple[tuple[int, str], ...]
    logprobs: tuple[tuple[int, float], ...]
    score: float  # ranking value of the current partial fill

    @property
    def logprob_sum(self) -> float:
        return sum(lp for _, lp in self.logprobs)

    @property
    def words(self) -> tuple[str, ...]:
        return tuple(w for _, w in sorted(self.fills))


def _beam(
    sentence: SentenceTemplate,
    scorer: ScorerBundle,
    lexicon: Lexicon,
    params: FillParams,
    rank: Callable[[Sequence[_Item]], list[float]],
    sort_key: Callable[[_Item], tuple],
) -> list[_Item]:
    blanks = sentence.blanks()
    if not blanks:
        raise FillError("sentence has no blank")
    beam: list[_Item] = [_Item(fills=(), logprobs=(), score=0.0)]
    for blank in blanks:
        extensions: list[_Item] = []
        for item in beam:
            candidates = select_candidates(
                sentence, blank.index, dict(item.fills), scorer, lexicon, params
            )
            for ms in candidates:
                extensions.append(
                    _Item(
                        fills=tuple(sorted(item.fills + ((blank.index, ms.word),))),
                        logprobs=tuple(sorted(item.logprobs + ((blank.index, ms.log_probability),))),
                        score=0.0,
                    )
                )
        if not extensions:
            raise UnfillableBlankError(blank.index)
        scores = rank(extensions)
        extensions = [
            _Item(fills=e.fills, logprobs=e.logprobs, score=s)
            for e, s in zip(extensions, scores)
        ]
        extensions.sort(key=sort_key)
        beam = extensions[: params.n]
    return beam


def fill_sentence_beam(
    sentence: SentenceTemplate,
    scorer: ScorerBundle,
    lexicon: Lexicon,
    params: FillParams,
    humor_map: Callable = map,
) -> list[Transformation]:
    """Left-to-right beam over the sentence's blanks, ranked by humor
    probability of (fully masked, partially filled) with remaining blanks
    still masked.  Ties break on higher summed fill log-probability, then
    lexicographic fills.  ``humor_map`` may be a parallel map; results are
    reassembled in order, so output does not depend on it."""
    masked = mask_all(sentence)

    def rank(items: Sequence[_Item]) -> list[float]:
        texts = [render_partial(sentence, dict(it.fills)) for it in items]
        return list(humor_map(lambda t: scorer.humor_probability(masked, t), texts))

    def sort_key(it: _Item) -> tuple:
        return (-it.score, -it.logprob_sum, it.words)

    beam = _beam(sentence, scorer, lexicon, params, rank, sort_key)
    return [
        Transformation(
            masked_text=masked,
            filled_text=render_sentence(sentence, dict(it.fills)),
            fills=it.fills,
            p_funny=it.score,
            fill_logprobs=it.logprobs,
        )
        for it in beam
    ]


def fill_sentence_mlm_baseline(
    sentence: SentenceTemplate,
    scorer: ScorerBundle,
    lexicon: Lexicon,
    params: FillParams,
) -> list[Transformation]:
    """Same beam mechanics, ranked by mean fill log-probability alone
    (no humor scorer); ties break lexicographically on fills."""
    masked = mask_all(sentence)

    def rank(items: Sequence[_Item]) -> list[float]:
        return [it.logprob_sum / len(it.logprobs) for it in items]

    def sort_key(it: _Item) -> tuple:
        return (-it.score, it.words)

    beam = _beam(sentence, scorer, lexicon, params, rank, sort_key)
    return [
        Transformation(
            masked_text=masked,
            filled_text=render_sentence(sentence, dict(it.fills)),
            fills=it.fills,
            p_funny=None,
            fill_logprobs=it.logprobs,
        )
        for it in beam
    ]
