"""Story completion: an N-wide left-to-right beam over per-sentence
transformations, balancing funniness and similarity to the story so far,
plus the final story scores and rankings.
"""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import FunlibError
from .fill import Transformation
from .scoring import ScorerBundle, cosine_similarity, sentence_embedding
from .templates import StoryTemplate, render_sentence


class ComposeError(FunlibError):
    """Story beam cannot run or a story score is undefined."""


class RankMode(enum.Enum):
    LEXICOGRAPHIC = "lexicographic"
    WEIGHTED = "weighted"


@dataclass(frozen=True)
class ComposeParams:
    beam_width: int = 100  # N: stories advanced per sentence
    funny_threshold: float = 0.5
    rank_mode: RankMode = RankMode.LEXICOGRAPHIC
    alpha: float = 0.5  # weighted mode: alpha*funniness + (1-alpha)*coherence

    def __post_init__(self) -> None:
        if self.beam_width < 1:
            raise ComposeError(f"beam width must be >= 1, got {self.beam_width}")
        if not 0.0 <= self.funny_threshold <= 1.0:
            raise ComposeError(f"funny_threshold must be in [0, 1], got {self.funny_threshold}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ComposeError(f"alpha must be in [0, 1], got {self.alpha}")


@dataclass(frozen=True)
class CompletedStory:
    template_ref: str
    chosen: tuple[Transformation, ...]  # one per sentence; pass-throughs have no fills
    story_funniness: float
    avg_word_coherence: float
    coherence_vacuous: bool  # True when fewer than 2 fills made coherence 1.0 by fiat

    @property
    def fills(self) -> tuple[tuple[int, str], ...]:
        return tuple(sorted(f for t in self.chosen for f in t.fills))

    @property
    def fill_words(self) -> tuple[str, ...]:
        return tuple(w for _, w in self.fills)


def passthrough(text: str) -> Transformation:
    """The single fixed entry a blank-free sentence contributes."""
    return Transformation(masked_text=text, filled_text=text, fills=(), p_funny=None, fill_logprobs=())


def story_funniness(chosen: Sequence[Transformation]) -> float:
    """Mean humor probability over the blank-bearing sentences."""
    scores = [t.p_funny for t in chosen if t.fills]
    if not scores:
        raise ComposeError("story has no blank-bearing sentence")
    if any(s is None for s in scores):
        raise ComposeError("story contains transformations that were never humor-ranked")
    return sum(scores) / len(scores)


def avg_word_coherence(chosen: Sequence[Transformation], embedder: ScorerBundle) -> tuple[float, bool]:
    """Mean pairwise cosine similarity among filled-word embeddings.

    Stories with fewer than 2 fills get vacuous coherence 1.0, flagged via
    the second return value.
    """
    words = [w for t in chosen for _, w in sorted(t.fills)]
    if len(words) < 2:
        return 1.0, True
    vectors = [embedder.token_embeddings(w)[0] for w in words]
    sims = []
    for i in range(len(vectors)):
        for j in range(i + 1, len(vectors)):
            sims.append(cosine_similarity(vectors[i], vectors[j]))
    return sum(sims) / len(sims), False


@dataclass(frozen=True)
class _Prefix:
    chosen: tuple[Transformation, ...]
    funny_sum: float
    funny_count: int
    emb_sum: tuple[float, ...] | None
    emb_count: int

    @property
    def mean_funny(self) -> float:
        return self.funny_sum / self.funny_count if self.funny_count else 0.0

    @property
    def words(self) -> tuple[str, ...]:
        return tuple(w for t in self.chosen for _, w in sorted(t.fills))


def _survivors(candidates: Sequence[Transformation], params: ComposeParams) -> list[Transformation]:
    ranked = sorted(candidates, key=lambda t: (-(t.p_funny or 0.0), t.fill_words))
    above = [t for t in ranked if (t.p_funny or 0.0) >= params.funny_threshold]
    if len(above) >= params.beam_width:
        return above[: params.beam_width]
    below = [t for t in ranked if (t.p_funny or 0.0) < params.funny_threshold]
    return above + below[: params.beam_width - len(above)]


def compose_story(
    template: StoryTemplate,
    per_sentence: Sequence[Sequence[Transformation]],
    embedder: ScorerBundle,
    params: ComposeParams,
) -> list[CompletedStory]:
    """Left-to-right story beam.

    Per sentence: transformations classified funny (p_funny >= threshold)
    survive, backfilled by the best below-threshold ones when fewer than N
    remain; each surviving prefix x candidate pair is ranked by (mean
    funniness so far, similarity of the candidate to the mean embedding of
    previously chosen sentences, lexicographic fills) and the top N
    advance.  Output is sorted by ``finalize_ranking``.
    """
    if len(per_sentence) != len(template.sentences):
        raise ComposeError(
            f"expected {len(template.sentences)} transformation lists, got {len(per_sentence)}"
        )
    beam = [_Prefix(chosen=(), funny_sum=0.0, funny_count=0, emb_sum=None, emb_count=0)]
    for i, sentence in enumerate(template.sentences):
        if sentence.has_blanks:
            candidates = list(per_sentence[i])
            if not candidates:
                raise ComposeError(f"sentence {i} has no transformations")
            candidates = _survivors(candidates, params)
        else:
            candidates = [passthrough(render_sentence(sentence, {}))]
        embeddings = [
            sentence_embedding(embedder.token_embeddings(c.filled_text)) for c in candidates
        ]
        scored: list[tuple[tuple, _Prefix]] = []
        for prefix in beam:
            context = (
                np.asarray(prefix.emb_sum) / prefix.emb_count if prefix.emb_count else None
            )
            for cand, cand_emb in zip(candidates, embeddings):
                similarity = (
                    cosine_similarity(cand_emb, context) if context is not None else 0.0
                )
                funny_sum = prefix.funny_sum + (cand.p_funny if cand.fills else 0.0)
                funny_count = prefix.funny_count + (1 if cand.fills else 0)
                emb_sum = (
                    cand_emb if prefix.emb_sum is None else np.asarray(prefix.emb_sum) + cand_emb
                )
                new = _Prefix(
                    chosen=prefix.chosen + (cand,),
                    funny_sum=funny_sum,
                    funny_count=funny_count,
                    emb_sum=tuple(float(x) for x in emb_sum),
                    emb_count=prefix.emb_count + 1,
                )
                mean_funny = funny_sum / funny_count if funny_count else 0.0
                scored.append(((-mean_funny, -similarity, new.words), new))
        scored.sort(key=lambda pair: pair[0])
        beam = [p for _, p in scored[: params.beam_width]]
    stories = []
    for prefix in beam:
        funniness = story_funniness(prefix.chosen)
        coherence, vacuous = avg_word_coherence(prefix.chosen, embedder)
        stories.append(
            CompletedStory(
                template_ref=template.story_id,
                chosen=prefix.chosen,
                story_funniness=funniness,
                avg_word_coherence=coherence,
                coherence_vacuous=vacuous,
            )
        )
    return finalize_ranking(stories, params)


def finalize_ranking(stories: Sequence[CompletedStory], params: ComposeParams) -> list[CompletedStory]:
    """Lexicographic mode: funniness desc, then coherence desc, then fills;
    weighted mode: alpha*funniness + (1-alpha)*coherence desc, then fills."""
    if params.rank_mode is RankMode.LEXICOGRAPHIC:
        key = lambda s: (-s.story_funniness, -s.avg_word_coherence, s.fill_words)
    else:
        key = lambda s: (
            -(params.alpha * s.story_funniness + (1.0 - params.alpha) * s.avg_word_coherence),
            s.fill_words,
        )
    return sorted(stories, key=key)


# ---------------------------------------------------------------------------
# Baseline: stories ranked by filled-in word probabilities only


@dataclass(frozen=True)
class BaselineStory:
    template_ref: str
    chosen: tuple[Transformation, ...]
    mean_fill_logprob: float

    @property
    def fills(self) -> tuple[tuple[int, str], ...]:
        return tuple(sorted(f for t in self.chosen for f in t.fills))

    @property
    def fill_words(self) -> tuple[str, ...]:
        return tuple(w for _, w in self.fills)


def compose_story_mlm(
    template: StoryTemplate,
    per_sentence: Sequence[Sequence[Transformation]],
    params: ComposeParams,
) -> list[BaselineStory]:
    """Beam over sentences ranked purely by mean fill log-probability."""
    if len(per_sentence) != len(template.sentences):
        raise ComposeError(
            f"expected {len(template.sentences)} transformation lists, got {len(per_sentence)}"
        )
    beam: list[tuple[tuple[Transformation, ...], float, int]] = [((), 0.0, 0)]
    for i, sentence in enumerate(template.sentences):
        if sentence.has_blanks:
            candidates = list(per_sentence[i])
            if not candidates:
                raise ComposeError(f"sentence {i} has no transformations")
            candidates = candidates[: params.beam_width]
        else:
            candidates = [passthrough(render_sentence(sentence, {}))]
        scored = []
        for chosen, lp_sum, lp_count in beam:
            for cand in candidates:
                new_sum = lp_sum + sum(lp for _, lp in cand.fill_logprobs)
                new_count = lp_count + len(cand.fill_logprobs)
                mean = new_sum / new_count if new_count else 0.0
                words = tuple(w for t in chosen + (cand,) for _, w in sorted(t.fills))
                scored.append(((-mean, words), (chosen + (cand,), new_sum, new_count)))
        scored.sort(key=lambda pair: pair[0])
        beam = [state for _, state in scored[: params.beam_width]]
    stories = []
    for chosen, lp_sum, lp_count in beam:
        if not lp_count:
            raise ComposeError("story has no blank-bearing sentence")
        stories.append(
            BaselineStory(
                template_ref=template.story_id,
                chosen=chosen,
                mean_fill_logprob=lp_sum / lp_count,
            )
        )
    stories.sort(key=lambda s: (-s.mean_fill_logprob, s.fill_words))
    return stories


# ---------------------------------------------------------------------------
# JSON report


def story_report_lines(stories: Sequence[CompletedStory]) -> list[str]:
    """One JSON object per story: fills, per-sentence humor, scores, rank."""
    lines = []
    for rank, story in enumerate(stories, start=1):
        payload = {
            "rank": rank,
            "story_id": story.template_ref,
            "fills": {str(o): w for o, w in story.fills},
            "per_sentence_p_funny": [t.p_funny for t in story.chosen],
            "story_funniness": story.story_funniness,
            "avg_word_coherence": story.avg_word_coherence,
            "coherence_vacuous": story.coherence_vacuous,
        }
        lines.append(json.dumps(payload, sort_keys=True))
    return lines


def baseline_report_lines(stories: Sequence[BaselineStory]) -> list[str]:
    lines = []
    for rank, story in enumerate(stories, start=1):
        payload = {
            "rank": rank,
            "story_id": story.template_ref,
            "fills": {str(o): w for o, w in story.fills},
            "mean_fill_logprob": story.mean_fill_logprob,
        }
        lines.append(json.dumps(payload, sort_keys=True))
    return lines
