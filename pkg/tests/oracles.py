"""Independent brute-force oracles the test suite checks the engine against.

Everything here recomputes expected results from first principles
(exhaustive enumeration, pairwise sums, exact rational arithmetic) without
touching the beam, pruning, or aggregation code paths under test.
"""
from __future__ import annotations

import itertools
import math
from fractions import Fraction

from funlib import mask_all, mask_sentence, render_sentence
from funlib.scoring import cosine_similarity, sentence_embedding


def legal_words(sentence, lexicon, vocabulary):
    """Per-blank legal candidate sets, independent of mask_distribution."""
    return [
        sorted(w for w in vocabulary if lexicon.satisfies_hint(w, b.hint))
        for b in sentence.blanks()
    ]


def fill_logprob(sentence, lm, ordinal, prefix_fills, word):
    masked = mask_sentence(sentence, ordinal, prefix_fills, mask_future=True)
    return lm.word_log_prob(masked.text, masked.mask_index, word)


def enumerate_fills(sentence, lm, lexicon):
    """All complete fills with their per-fill log-probs, by exhaustive product."""
    ordinals = [b.index for b in sentence.blanks()]
    pools = legal_words(sentence, lexicon, lm.vocabulary)
    results = []
    for combo in itertools.product(*pools):
        fills = dict(zip(ordinals, combo))
        logprobs = {}
        for i, ordinal in enumerate(ordinals):
            prefix = {o: fills[o] for o in ordinals[:i]}
            logprobs[ordinal] = fill_logprob(sentence, lm, ordinal, prefix, fills[ordinal])
        results.append((fills, logprobs))
    return results


def brute_force_sentence(sentence, humor, lm, lexicon, n):
    """Expected fill_sentence_beam output for n >= number of combinations."""
    masked = mask_all(sentence)
    rows = []
    for fills, logprobs in enumerate_fills(sentence, lm, lexicon):
        p = humor.humor_probability(masked, render_sentence(sentence, fills))
        words = tuple(w for _, w in sorted(fills.items()))
        rows.append((fills, logprobs, p, sum(logprobs.values()), words))
    rows.sort(key=lambda r: (-r[2], -r[3], r[4]))
    return rows[:n]


def brute_force_mlm(sentence, lm, lexicon, n):
    rows = []
    for fills, logprobs in enumerate_fills(sentence, lm, lexicon):
        mean = sum(logprobs.values()) / len(logprobs)
        words = tuple(w for _, w in sorted(fills.items()))
        rows.append((fills, mean, words))
    rows.sort(key=lambda r: (-r[1], r[2]))
    return rows[:n]


def brute_force_stories(template, per_sentence, embedder, threshold_unused=None):
    """All complete stories with exact funniness and coherence, unranked."""
    choices = []
    for i, sentence in enumerate(template.sentences):
        if sentence.has_blanks:
            choices.append(list(per_sentence[i]))
        else:
            choices.append([None])
    stories = []
    for combo in itertools.product(*choices):
        p_values = [t.p_funny for t in combo if t is not None and t.fills]
        funniness = sum(p_values) / len(p_values)
        words = []
        for t in combo:
            if t is not None:
                words.extend(w for _, w in sorted(t.fills))
        if len(words) < 2:
            coherence, vacuous = 1.0, True
        else:
            vectors = [embedder.token_embeddings(w)[0] for w in words]
            pair_sims = [
                cosine_similarity(vectors[i], vectors[j])
                for i in range(len(vectors))
                for j in range(i + 1, len(vectors))
            ]
            coherence, vacuous = sum(pair_sims) / len(pair_sims), False
        stories.append((tuple(words), funniness, coherence, vacuous))
    return stories


def krippendorff_exact(rows, metric="interval"):
    """Coincidence-matrix alpha in exact rational arithmetic."""
    units = [[v for v in row if v is not None] for row in rows]
    units = [u for u in units if len(u) >= 2]
    if not units:
        raise ValueError("no pairable values")
    o: dict[tuple[int, int], Fraction] = {}
    for values in units:
        w = Fraction(1, len(values) - 1)
        for i, a in enumerate(values):
            for j, b in enumerate(values):
                if i != j:
                    o[(a, b)] = o.get((a, b), Fraction(0)) + w
    marginals: dict[int, Fraction] = {}
    for (a, _), c in o.items():
        marginals[a] = marginals.get(a, Fraction(0)) + c
    n = sum(marginals.values())
    present = sorted(marginals)

    def delta(a, b):
        if metric == "interval":
            return Fraction((a - b) ** 2)
        lo, hi = min(a, b), max(a, b)
        between = sum(marginals[g] for g in present if lo <= g <= hi)
        return (between - Fraction(marginals[a] + marginals[b], 2)) ** 2

    d_o = sum(c * delta(a, b) for (a, b), c in o.items()) / n
    d_e = sum(
        marginals[a] * marginals[b] * delta(a, b) for a in present for b in present
    ) / (n * (n - 1))
    if d_e == 0:
        return 1.0
    return float(1 - d_o / d_e)


def pearson_exact(x, y):
    """Correlation via direct covariance sums (no shared code path)."""
    n = len(x)
    mx = sum(x) / n
    my = sum(y) / n
    cov = sum((a - mx) * (b - my) for a, b in zip(x, y))
    vx = sum((a - mx) ** 2 for a in x)
    vy = sum((b - my) ** 2 for b in y)
    return cov / math.sqrt(vx * vy)
