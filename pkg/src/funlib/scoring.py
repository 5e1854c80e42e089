"""Scoring capabilities the pipeline consumes, plus deterministic built-ins.

A scorer bundle can provide three capabilities: a masked-token
distribution, a humor probability for a (masked, filled) sentence pair,
and per-token embeddings.  Built-ins here are pure functions of their
construction inputs; identical queries always return identical results.
"""
from __future__ import annotations

import enum
import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import FunlibError
from .templates import MASK

_PUNCT = set(".,!?;:()[]\"'“”‘’")


class ScorerError(FunlibError):
    """Scoring failed or a scorer contract was violated."""


class CapabilityError(ScorerError):
    """The scorer does not provide the requested capability."""


class Locale(enum.Enum):
    IN = "IN"
    US = "US"
    NEUTRAL = "neutral"


@dataclass(frozen=True)
class MaskScore:
    word: str
    log_probability: float  # always <= 0


class ScorerBundle:
    """Abstract capability bundle.  Subclasses override what they support;
    everything else raises CapabilityError."""

    locale: Locale = Locale.NEUTRAL

    def mask_distribution(self, text: str, mask_index: int, top_k: int) -> list[MaskScore]:
        raise CapabilityError(f"{type(self).__name__} has no masked-LM capability")

    def humor_probability(self, masked_text: str, filled_text: str) -> float:
        raise CapabilityError(f"{type(self).__name__} has no humor capability")

    def token_embeddings(self, sentence: str) -> np.ndarray:
        raise CapabilityError(f"{type(self).__name__} has no embedding capability")


def scorer_tokens(text: str) -> list[str]:
    """Whitespace split, then peel leading/trailing punctuation into their
    own tokens.  Mask markers survive intact even with attached punctuation."""
    out: list[str] = []
    for raw in text.split():
        _peel(raw, out)
    return out


def _peel(raw: str, out: list[str]) -> None:
    if MASK in raw:
        i = raw.index(MASK)
        _peel_plain(raw[:i], out)
        out.append(MASK)
        _peel(raw[i + len(MASK):], out)
        return
    _peel_plain(raw, out)


def _peel_plain(raw: str, out: list[str]) -> None:
    start, end = 0, len(raw)
    lead: list[str] = []
    trail: list[str] = []
    while start < end and raw[start] in _PUNCT:
        lead.append(raw[start])
        start += 1
    while end > start and raw[end - 1] in _PUNCT:
        trail.append(raw[end - 1])
        end -= 1
    out.extend(lead)
    if end > start:
        out.append(raw[start:end])
    out.extend(reversed(trail))


def _mask_positions(tokens: Sequence[str]) -> list[int]:
    return [i for i, t in enumerate(tokens) if t == MASK]


# ---------------------------------------------------------------------------
# Pseudo-bidirectional additive-smoothed n-gram masked LM


class NgramMaskScorer(ScorerBundle):
    """Scores a masked position as the mean of forward and backward
    additive-smoothed n-gram log-probabilities.  Vocabulary = corpus types."""

    def __init__(
        self,
        order: int,
        smoothing: float,
        counts: Mapping[int, Mapping[tuple[str, ...], int]],
        locale: Locale = Locale.NEUTRAL,
    ) -> None:
        self.order = order
        self.smoothing = smoothing
        self.locale = locale
        self._counts = {o: dict(table) for o, table in counts.items()}
        self._prefix_totals: dict[int, dict[tuple[str, ...], int]] = {}
        self._suffix_totals: dict[int, dict[tuple[str, ...], int]] = {}
        for o, table in self._counts.items():
            pre: dict[tuple[str, ...], int] = {}
            suf: dict[tuple[str, ...], int] = {}
            for gram, c in table.items():
                pre[gram[:-1]] = pre.get(gram[:-1], 0) + c
                suf[gram[1:]] = suf.get(gram[1:], 0) + c
            self._prefix_totals[o] = pre
            self._suffix_totals[o] = suf
        self.vocabulary: tuple[str, ...] = tuple(sorted(w for (w,) in self._counts[1]))

    # -- per-direction conditionals (each sums to 1 over the vocabulary) --

    def forward_log_prob(self, context: Sequence[str], word: str) -> float:
        ctx = tuple(context[-(self.order - 1):]) if self.order > 1 else ()
        o = len(ctx) + 1
        num = self._counts[o].get(ctx + (word,), 0) + self.smoothing
        den = self._prefix_totals[o].get(ctx, 0) + self.smoothing * len(self.vocabulary)
        return math.log(num / den)

    def backward_log_prob(self, word: str, right_context: Sequence[str]) -> float:
        ctx = tuple(right_context[: self.order - 1]) if self.order > 1 else ()
        o = len(ctx) + 1
        num = self._counts[o].get((word,) + ctx, 0) + self.smoothing
        den = self._suffix_totals[o].get(ctx, 0) + self.smoothing * len(self.vocabulary)
        return math.log(num / den)

    def _score_at(self, tokens: Sequence[str], pos: int, word: str) -> float:
        left = tokens[max(0, pos - (self.order - 1)): pos]
        right = tokens[pos + 1: pos + self.order]
        return 0.5 * (self.forward_log_prob(left, word) + self.backward_log_prob(word, right))

    def _target_position(self, text: str, mask_index: int) -> tuple[list[str], int]:
        tokens = scorer_tokens(text)
        positions = _mask_positions(tokens)
        if mask_index < 0 or mask_index >= len(positions):
            raise ScorerError(f"no mask at index {mask_index} in {text!r}")
        return tokens, positions[mask_index]

    def mask_distribution(self, text: str, mask_index: int, top_k: int) -> list[MaskScore]:
        if top_k < 1:
            raise ScorerError(f"top_k must be >= 1, got {top_k}")
        tokens, pos = self._target_position(text, mask_index)
        scored = [MaskScore(w, self._score_at(tokens, pos, w)) for w in self.vocabulary]
        scored.sort(key=lambda s: (-s.log_probability, s.word))
        return scored[:top_k]

    def word_log_prob(self, text: str, mask_index: int, word: str) -> float:
        """Mean bidirectional log-probability of ``word`` at the given mask."""
        tokens, pos = self._target_position(text, mask_index)
        return self._score_at(tokens, pos, word)

    def save(self, path: str | Path) -> None:
        payload = {
            "format": "ngram-mlm-v1",
            "order": self.order,
            "smoothing": self.smoothing,
            "locale": self.locale.value,
            "counts": {
                str(o): {" ".join(gram): c for gram, c in sorted(table.items())}
                for o, table in self._counts.items()
            },
        }
        Path(path).write_text(json.dumps(payload, indent=None, sort_keys=True), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "NgramMaskScorer":
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
        if payload.get("format") != "ngram-mlm-v1":
            raise ScorerError(f"{path}: not an ngram scorer artifact")
        counts = {
            int(o): {tuple(gram.split(" ")): c for gram, c in table.items()}
            for o, table in payload["counts"].items()
        }
        return cls(
            order=payload["order"],
            smoothing=payload["smoothing"],
            counts=counts,
            locale=Locale(payload["locale"]),
        )


def train_ngram_scorer(
    corpus: Sequence[str],
    order: int,
    smoothing: float,
    locale: Locale = Locale.NEUTRAL,
) -> NgramMaskScorer:
    """Count n-grams of every length 1..order over a token stream."""
    if not 2 <= order <= 5:
        raise ScorerError(f"order must be in [2, 5], got {order}")
    if smoothing <= 0:
        raise ScorerError(f"smoothing must be > 0, got {smoothing}")
    tokens = list(corpus)
    if not tokens:
        raise ScorerError("empty corpus")
    counts: dict[int, dict[tuple[str, ...], int]] = {}
    for o in range(1, order + 1):
        table: dict[tuple[str, ...], int] = {}
        for i in range(len(tokens) - o + 1):
            gram = tuple(tokens[i : i + o])
            table[gram] = table.get(gram, 0) + 1
        counts[o] = table
    return NgramMaskScorer(order=order, smoothing=smoothing, counts=counts, locale=locale)


def tokenize_corpus(text: str) -> list[str]:
    """Lowercased scorer tokenization for corpus files."""
    return scorer_tokens(text.lower())


# ---------------------------------------------------------------------------
# Deterministic feature-based humor scorer


@dataclass(frozen=True)
class HumorWeights:
    incongruity: float = 0.0
    frequency: float = 0.0
    topic: float = 0.0
    bias: float = 0.0
    topic_threshold: float = 0.0


def load_humor_weights(path: str | Path) -> HumorWeights:
    """Read a ``key = value`` weights file (see HumorWeights field names,
    suffixed ``_weight`` for the three feature weights)."""
    values: dict[str, float] = {}
    known = {
        "incongruity_weight": "incongruity",
        "frequency_weight": "frequency",
        "topic_weight": "topic",
        "bias": "bias",
        "topic_threshold": "topic_threshold",
    }
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ScorerError(f"{path} line {lineno}: expected 'key = value'")
        key, _, value = stripped.partition("=")
        key = key.strip()
        if key not in known:
            raise ScorerError(f"{path} line {lineno}: unknown weight {key!r}")
        try:
            values[known[key]] = float(value.strip())
        except ValueError:
            raise ScorerError(f"{path} line {lineno}: bad number {value.strip()!r}") from None
    return HumorWeights(**values)


class FeatureHumorScorer(ScorerBundle):
    """Logistic model over hand-built features of a (masked, filled) pair:
    mean fill surprisal under the LM, mean fill corpus-frequency percentile,
    and fraction of fills near the sentence topic centroid."""

    def __init__(
        self,
        weights: HumorWeights,
        lm: NgramMaskScorer,
        lexicon,
        embedder: "HashEmbedder",
        locale: Locale = Locale.NEUTRAL,
    ) -> None:
        self.weights = weights
        self.lm = lm
        self.lexicon = lexicon
        self.embedder = embedder
        self.locale = locale

    def _fills(self, masked_text: str, filled_text: str) -> tuple[list[str], list[tuple[int, str]]]:
        mtoks = scorer_tokens(masked_text)
        ftoks = scorer_tokens(filled_text)
        if len(mtoks) != len(ftoks):
            raise ScorerError("masked and filled sentences are misaligned")
        fills = []
        for i, (m, f) in enumerate(zip(mtoks, ftoks)):
            if m == MASK:
                if f != MASK:
                    fills.append((i, f))
            elif m != f:
                raise ScorerError(f"masked and filled sentences differ outside masks at token {i}")
        return ftoks, fills

    def features(self, masked_text: str, filled_text: str) -> tuple[float, float, float]:
        ftoks, fills = self._fills(masked_text, filled_text)
        if not fills:
            return 0.0, 0.0, 0.0
        surprisals = []
        for pos, word in fills:
            context = list(ftoks)
            context[pos] = MASK
            # the target is this position's mask occurrence
            occ = _mask_positions(context).index(pos)
            surprisals.append(-self.lm.word_log_prob(" ".join(context), occ, word))
        incongruity = sum(surprisals) / len(surprisals)
        frequency = sum(self.lexicon.frequency_percentile(w) for _, w in fills) / len(fills)
        topic = self._topic_fraction(ftoks, fills)
        return incongruity, frequency, topic

    def _topic_fraction(self, ftoks: list[str], fills: list[tuple[int, str]]) -> float:
        fill_positions = {pos for pos, _ in fills}
        context_words = [
            t
            for i, t in enumerate(ftoks)
            if i not in fill_positions and t != MASK and any(c.isalpha() for c in t)
        ]
        if not context_words:
            return 0.0
        centroid = self.embedder.embed_tokens(context_words).mean(axis=0)
        if not np.linalg.norm(centroid):
            return 0.0
        hits = 0
        for _, word in fills:
            v = self.embedder.embed_tokens([word])[0]
            if cosine_similarity(v, centroid) >= self.weights.topic_threshold:
                hits += 1
        return hits / len(fills)

    def humor_probability(self, masked_text: str, filled_text: str) -> float:
        incongruity, frequency, topic = self.features(masked_text, filled_text)
        w = self.weights
        z = w.incongruity * incongruity + w.frequency * frequency + w.topic * topic + w.bias
        return 1.0 / (1.0 + math.exp(-z))


def feature_humor_scorer(
    weights_path: str | Path,
    lm: NgramMaskScorer,
    lexicon,
    embedder: "HashEmbedder",
    locale: Locale = Locale.NEUTRAL,
) -> FeatureHumorScorer:
    return FeatureHumorScorer(load_humor_weights(weights_path), lm, lexicon, embedder, locale)


# ---------------------------------------------------------------------------
# Seeded hashing embedder


class HashEmbedder(ScorerBundle):
    """Maps each token to a unit-norm vector by summing dense pseudo-random
    vectors hashed from its character 3-grams; identical tokens always share
    a vector, and shared 3-grams pull vectors together."""

    def __init__(self, seed: int, dim: int = 768, locale: Locale = Locale.NEUTRAL) -> None:
        if dim < 2:
            raise ScorerError(f"dim must be >= 2, got {dim}")
        self.seed = seed
        self.dim = dim
        self.locale = locale
        self._key = (seed & 0xFFFFFFFFFFFFFFFF).to_bytes(8, "little")
        self._cache: dict[str, np.ndarray] = {}

    def _gram_vector(self, gram: str) -> np.ndarray:
        # counter-mode keyed hashing; 64 bytes per call = 8 lanes
        chunks = []
        for i in range((self.dim + 7) // 8):
            digest = hashlib.blake2b(
                f"{i}|{gram}".encode("utf-8"), key=self._key, digest_size=64
            ).digest()
            chunks.append(np.frombuffer(digest, dtype="<u8"))
        raw = np.concatenate(chunks)[: self.dim]
        return raw.astype(np.float64) / 2.0**63 - 1.0

    def _token_vector(self, token: str) -> np.ndarray:
        core = token.lower().strip("".join(_PUNCT)) or token
        cached = self._cache.get(core)
        if cached is not None:
            return cached
        padded = f"^{core}$"
        v = np.zeros(self.dim)
        for i in range(max(1, len(padded) - 2)):
            v += self._gram_vector(padded[i : i + 3])
        norm = np.linalg.norm(v)
        if norm == 0.0:  # unreachable in practice, kept for totality
            v[0] = 1.0
            norm = 1.0
        v /= norm
        self._cache[core] = v
        return v

    def embed_tokens(self, tokens: Sequence[str]) -> np.ndarray:
        if not tokens:
            raise ScorerError("no tokens to embed")
        return np.stack([self._token_vector(t) for t in tokens])

    def token_embeddings(self, sentence: str) -> np.ndarray:
        tokens = [
            t for t in scorer_tokens(sentence) if t != MASK and any(c.isalpha() for c in t)
        ]
        if not tokens:
            raise ScorerError(f"no embeddable tokens in {sentence!r}")
        return self.embed_tokens(tokens)


def hash_embedder(seed: int, dim: int = 768, locale: Locale = Locale.NEUTRAL) -> HashEmbedder:
    return HashEmbedder(seed=seed, dim=dim, locale=locale)


# ---------------------------------------------------------------------------
# Composition and vector operations


class CompositeScorer(ScorerBundle):
    """One bundle from separate capability providers."""

    def __init__(
        self,
        mlm: ScorerBundle | None = None,
        humor: ScorerBundle | None = None,
        embedder: ScorerBundle | None = None,
        locale: Locale | None = None,
    ) -> None:
        self._mlm = mlm
        self._humor = humor
        self._embedder = embedder
        parts = [p for p in (mlm, humor, embedder) if p is not None]
        self.locale = locale if locale is not None else (parts[0].locale if parts else Locale.NEUTRAL)

    def mask_distribution(self, text: str, mask_index: int, top_k: int) -> list[MaskScore]:
        if self._mlm is None:
            raise CapabilityError("no masked-LM provider configured")
        return self._mlm.mask_distribution(text, mask_index, top_k)

    def humor_probability(self, masked_text: str, filled_text: str) -> float:
        if self._humor is None:
            raise CapabilityError("no humor provider configured")
        return self._humor.humor_probability(masked_text, filled_text)

    def token_embeddings(self, sentence: str) -> np.ndarray:
        if self._embedder is None:
            raise CapabilityError("no embedding provider configured")
        return self._embedder.token_embeddings(sentence)


def sentence_embedding(token_vectors: Iterable[Sequence[float]] | np.ndarray) -> np.ndarray:
    """Component-wise mean of token vectors."""
    arr_list = [np.asarray(v, dtype=float) for v in token_vectors]
    if not arr_list:
        raise ScorerError("cannot average an empty embedding list")
    dims = {v.shape for v in arr_list}
    if len(dims) != 1:
        raise ScorerError(f"mixed embedding dimensions: {sorted(d[0] for d in dims)}")
    return np.stack(arr_list).mean(axis=0)


def cosine_similarity(a: Sequence[float] | np.ndarray, b: Sequence[float] | np.ndarray) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ScorerError(f"dimension mismatch: {a.shape} vs {b.shape}")
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        # A silent 0 would corrupt coherence means invisibly.
        raise ScorerError("cosine similarity of a zero vector is undefined")
    if np.array_equal(a, b):
        return 1.0  # exact, not subject to sqrt rounding
    return float(np.clip(float(np.dot(a, b)) / (na * nb), -1.0, 1.0))
