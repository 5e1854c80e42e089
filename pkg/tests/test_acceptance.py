"""Acceptance suite: one test per criterion, each printing a PASS line.

Randomized instances are seeded and reproducible.  Every expected value is
either hand arithmetic documented inline or comes from the independent
oracles in oracles.py; no expected value was copied from the code under
test.
"""
import hashlib
import json
import random
import re
import time
from collections import Counter
from pathlib import Path

import pytest
from click.testing import CliRunner

from funlib import (
    CompositeScorer,
    ComposeParams,
    FeatureHumorScorer,
    FillParams,
    HashEmbedder,
    HumorWeights,
    Locale,
    ReliabilityMatrix,
    Source,
    TopSelection,
    Transformation,
    compose_story,
    fill_sentence_beam,
    krippendorff_alpha,
    load_lexicon,
    load_variants,
    mfg,
    mfg_cells,
    parse_template,
    pearson_r,
    qualify_judge,
    qualify_player,
    read_judgements,
    sentence_label,
    train_ngram_scorer,
    word_label,
)
from funlib.cli import main as cli_main
from funlib.metrics import MetricsError
from funlib.templates import StoryTemplate

from oracles import (
    brute_force_sentence,
    brute_force_stories,
    krippendorff_exact,
    legal_words,
    pearson_exact,
)

FIXTURES = Path(__file__).parent / "fixtures"
GOLDEN = Path(__file__).parent / "golden"
CONFIG = str(FIXTURES / "run.cfg")

LEXICON = load_lexicon(FIXTURES / "lexicon.tsv", FIXTURES / "blocklist.txt")
EMBEDDER = HashEmbedder(seed=11, dim=64)
WEIGHTS = HumorWeights(incongruity=0.35, frequency=-0.6, topic=0.4, bias=0.2, topic_threshold=0.05)

FILLERS = ["the", "a", "my", "went", "with", "saw"]
HINT_WORDS = {
    "adjective": ["naughty", "soggy", "grumpy", "shiny", "majestic", "wobbly"],
    "noun_plural": ["lawyers", "pirates", "robots", "bananas"],
    "liquid": ["tea", "gravy", "lemonade"],
    "place": ["kitchen", "museum", "swamp"],
    "bodypart": ["elbow", "knee", "nostril"],
    "verb_past": ["danced", "sneezed", "drank", "juggled", "kissed"],
    "food": ["banana", "pickle", "waffle"],
}


def report(name: str) -> None:
    print(f"ACCEPTANCE PASS: {name}")


def random_instance(rng: random.Random, max_blanks: int = 3):
    """A toy corpus plus a template sentence whose blanks each admit
    between 1 and 6 legal candidates from the corpus vocabulary."""
    while True:
        hints = rng.sample(sorted(HINT_WORDS), rng.randint(1, max_blanks))
        chosen = {
            h: rng.sample(HINT_WORDS[h], rng.randint(1, min(6, len(HINT_WORDS[h]))))
            for h in hints
        }
        corpus: list[str] = []
        for words in chosen.values():
            for w in words:
                corpus.extend([w] * rng.randint(1, 3))
        corpus.extend(rng.choices(FILLERS, k=rng.randint(5, 15)))
        rng.shuffle(corpus)
        parts = [rng.choice(FILLERS)]
        for h in hints:
            parts.append("{{" + h + "}}")
            parts.append(rng.choice(FILLERS))
        doc = "# T\n" + " ".join(parts) + " end."
        sentence = parse_template(doc).sentences[0]
        lm = train_ngram_scorer(corpus, order=rng.choice([2, 3]), smoothing=0.1)
        pools = legal_words(sentence, LEXICON, lm.vocabulary)
        if all(1 <= len(p) <= 6 for p in pools):
            humor = FeatureHumorScorer(WEIGHTS, lm, LEXICON, EMBEDDER)
            return sentence, lm, humor, pools


def test_beam_bruteforce_equivalence_sentence_level():
    rng = random.Random(90125)
    start = time.perf_counter()
    for _ in range(200):
        sentence, lm, humor, pools = random_instance(rng)
        count = 1
        for p in pools:
            count *= len(p)
        params = FillParams(k=max(len(lm.vocabulary), count), n=count)
        got = fill_sentence_beam(sentence, CompositeScorer(mlm=lm, humor=humor), LEXICON, params)
        expected = brute_force_sentence(sentence, humor, lm, LEXICON, count)
        assert len(got) == count
        for t, (fills, logprobs, p_funny, _, _) in zip(got, expected):
            assert t.fills_dict == fills
            assert t.p_funny == p_funny
            assert dict(t.fill_logprobs) == logprobs
    elapsed = time.perf_counter() - start
    assert elapsed < 5.0, f"took {elapsed:.2f}s"
    report(f"sentence-level beam equals brute force on 200 instances ({elapsed:.2f}s)")


def _random_story(rng: random.Random):
    n_sentences = rng.randint(2, 3)
    docs, per_sentence = [], []
    ordinal = 0
    blank_free = rng.randrange(n_sentences) if rng.random() < 0.3 else None
    for i in range(n_sentences):
        if i == blank_free:
            docs.append("nothing here.")
            per_sentence.append([])
            continue
        n_blanks = rng.randint(1, 2)
        hints = rng.sample(sorted(HINT_WORDS), n_blanks)
        docs.append(" ".join("{{" + h + "}}" for h in hints) + " happened.")
        ordinals = list(range(ordinal, ordinal + n_blanks))
        ordinal += n_blanks
        candidates = []
        possible = 1
        for h in hints:
            possible *= len(HINT_WORDS[h])
        n_cands = rng.randint(1, min(4, possible))
        combos = set()
        while len(combos) < n_cands:
            combos.add(tuple(rng.choice(HINT_WORDS[h]) for h in hints))
        for combo in sorted(combos):
            fills = tuple(zip(ordinals, combo))
            text = " ".join(combo) + " happened."
            masked = " ".join("[MASK]" for _ in combo) + " happened."
            candidates.append(
                Transformation(
                    masked_text=masked,
                    filled_text=text,
                    fills=fills,
                    p_funny=round(rng.random(), 3),
                    fill_logprobs=tuple((o, -rng.random()) for o, _ in fills),
                )
            )
        per_sentence.append(candidates)
    template = parse_template("# S\n" + "\n".join(docs))
    return template, per_sentence


def test_beam_bruteforce_equivalence_story_level():
    rng = random.Random(5150)
    start = time.perf_counter()
    for _ in range(100):
        template, per_sentence = _random_story(rng)
        count = 1
        for i, s in enumerate(template.sentences):
            if s.has_blanks:
                count *= len(per_sentence[i])
        threshold = rng.choice([0.0, 0.5])
        params = ComposeParams(beam_width=count, funny_threshold=threshold)
        got = compose_story(template, per_sentence, EMBEDDER, params)
        expected = brute_force_stories(template, per_sentence, EMBEDDER)
        expected.sort(key=lambda row: (-row[1], -row[2], row[0]))
        assert len(got) == count == len(expected)
        for s, (words, funniness, coherence, vacuous) in zip(got, expected):
            assert s.fill_words == words
            assert s.story_funniness == funniness
            assert s.avg_word_coherence == coherence
            assert s.coherence_vacuous == vacuous
    elapsed = time.perf_counter() - start
    assert elapsed < 5.0, f"took {elapsed:.2f}s"
    report(f"story-level beam equals brute force on 100 instances ({elapsed:.2f}s)")


def test_beam_monotonicity_in_width():
    rng = random.Random(2112)
    violations = []
    for i in range(50):
        sentence, lm, humor, pools = random_instance(rng, max_blanks=3)
        bundle = CompositeScorer(mlm=lm, humor=humor)
        best = None
        for n in (1, 2, 4, 8, 16):
            out = fill_sentence_beam(sentence, bundle, LEXICON, FillParams(k=10_000, n=n))
            top = out[0].p_funny
            if best is not None and top < best:
                violations.append((i, n))
            best = max(best, top) if best is not None else top
    assert not violations
    report("top-1 humor probability non-decreasing over beam widths {1,2,4,8,16}")


def _run_cli(*args, must_succeed=True):
    result = CliRunner().invoke(cli_main, [str(a) for a in args])
    if must_succeed:
        assert result.exit_code == 0, result.output + str(result.exception)
    return result


def test_constraint_soundness_end_to_end(tmp_path):
    hints = {}
    for name in ("cats", "picnic"):
        t = parse_template((FIXTURES / "stories" / f"{name}.funlib").read_text())
        hints[t.story_id] = {b.index: b.hint for b in t.blanks()}
    _run_cli("fill", "--config", CONFIG, "--out", tmp_path)
    _run_cli(
        "compose", "--config", CONFIG,
        "--transformations", tmp_path / "transformations.jsonl", "--out", tmp_path,
    )
    _run_cli("baseline-mlm", "--config", CONFIG, "--out", tmp_path)
    checked = 0
    violations = []
    for rec in (tmp_path / "transformations.jsonl").read_text().splitlines():
        row = json.loads(rec)
        for o, w in row["fills"].items():
            checked += 1
            if not LEXICON.satisfies_hint(w, hints[row["story_id"]][int(o)]):
                violations.append((row["story_id"], o, w))
    for name in ("filled.tsv", "mlm_filled.tsv"):
        for line in (tmp_path / name).read_text().splitlines():
            story_id, _, body = line.split("\t")
            for item in body.split(";"):
                o, w = item.split("=")
                checked += 1
                if not LEXICON.satisfies_hint(w, hints[story_id][int(o)]):
                    violations.append((story_id, o, w))
    assert checked > 100
    assert not violations
    report(f"constraint soundness: {checked} filled words, zero hint violations")


WORKED_MATRIX = [
    [0, 0, 1],
    [1, 1, 1],
    [2, 3, 2],
    [3, 3, None],
    [0, 1, 0],
    [2, 2, 2],
]


def test_krippendorff_oracle():
    judgements = read_judgements(FIXTURES / "judgements_agree.jsonl")
    from funlib import reliability_from_judgements

    perfect = reliability_from_judgements(judgements, Locale.IN)
    assert krippendorff_alpha(perfect) == 1.0  # exact

    worked = ReliabilityMatrix.from_rows(WORKED_MATRIX)
    assert krippendorff_alpha(worked) == pytest.approx(krippendorff_exact(WORKED_MATRIX), abs=1e-9)

    maximal = [[0, 3], [3, 0]]
    got = krippendorff_alpha(ReliabilityMatrix.from_rows(maximal))
    assert got == pytest.approx(krippendorff_exact(maximal), abs=1e-9)
    assert got < 0.0
    report("krippendorff alpha: perfect=1.0 exactly, worked and maximal match oracle at 1e-9")


def test_labeling_rules_boundaries():
    F, N = True, False
    assert word_label([F, F, F, N, N]) is True
    assert word_label([N, N, N, N, F]) is False
    assert word_label([F, F, N, N]) is False  # tie resolves to not funny
    assert sentence_label([F, N]) is True  # exactly 50% is funny
    assert sentence_label([N, N, F]) is False
    assert mfg([2, 2, 1, 1, 2]) == 1.6
    assert qualify_player([0.8, 1.0]) is True  # MFG = 1.0 qualifies
    assert qualify_player([0.9999, 0.5]) is False
    screening = [(0, True), (0, True), (0, True), (1, False), (2, False), (0, False), (3, False)]
    assert qualify_judge(screening, verification_passed=True, time_spent_sec=240) is True
    assert qualify_judge(screening, verification_passed=True, time_spent_sec=239.9) is False
    assert qualify_judge(screening, verification_passed=False, time_spent_sec=400) is False
    wiki_bad = [(0, True), (1, True), (0, True)] + screening[3:]
    assert qualify_judge(wiki_bad, verification_passed=True, time_spent_sec=400) is False
    report("labeling and qualification rules reproduce fixture outputs incl. boundaries")


def _independent_dataset_counts():
    """Recount the fixture dataset from raw files: regex template parsing,
    manual majority votes, the at-least-half rule."""
    blanks_per_sentence = {}
    titles = {"cats": "cats", "picnic": "the-picnic"}
    for name, story_id in titles.items():
        lines = (FIXTURES / "stories" / f"{name}.funlib").read_text().splitlines()
        per_sentence = []
        ordinal = 0
        for line in lines[1:]:
            if not line.strip():
                continue
            found = re.findall(r"\{\{[^}]+\}\}", line)
            per_sentence.append(list(range(ordinal, ordinal + len(found))))
            ordinal += len(found)
        blanks_per_sentence[story_id] = per_sentence
    groups = {}
    for line in (FIXTURES / "judgements.jsonl").read_text().splitlines():
        row = json.loads(line)
        key = (row["story_id"], row["variant_id"], row["judge_country"])
        groups.setdefault(key, []).append(row["word_labels"])
    split_of = {"cats": "train", "the-picnic": "validation"}
    counts = Counter()
    for (story_id, _, country), label_maps in groups.items():
        blank_votes = {}
        for labels in label_maps:
            for o, value in labels.items():
                blank_votes.setdefault(int(o), []).append(value == "funny")
        majority = {
            o: sum(votes) > len(votes) - sum(votes) for o, votes in blank_votes.items()
        }
        for ordinals in blanks_per_sentence[story_id]:
            if not ordinals:
                continue
            funny_count = sum(1 for o in ordinals if majority[o])
            label = "funny" if 2 * funny_count >= len(ordinals) else "not_funny"
            counts[(split_of[story_id], country, label)] += 1
    return counts


def test_dataset_stats_shape(tmp_path):
    # The upstream study's published dataset tables are not reproducible at
    # this scale (they need the crowdsourced corpus and trained classifiers);
    # the fixture totals below are recounted independently instead.
    _run_cli("dataset", "--config", CONFIG, "--out", tmp_path)
    expected = _independent_dataset_counts()
    lines = (tmp_path / "dataset_stats.csv").read_text().splitlines()
    header = lines[0].split(",")
    assert header == ["type", "funny_IN", "funny_US", "not_funny_IN", "not_funny_US"]
    got = {}
    for line in lines[1:]:
        cells = line.split(",")
        for col, value in zip(header[1:], cells[1:]):
            label, locale = col.rsplit("_", 1)
            got[(cells[0], locale, label)] = int(value)
    # augmentation pairs (3, config) are all not_funny/US/train in this run
    expected[("train", "US", "not_funny")] += 3
    for key, value in expected.items():
        assert got.get(key, 0) == value, key
    assert sum(got.values()) == sum(expected.values())
    report("dataset stats equal independently recounted fixture totals")


def test_report_ordering_reproduction():
    variants = (
        load_variants(FIXTURES / "variants_in.tsv", Locale.IN)
        + load_variants(FIXTURES / "variants_us.tsv", Locale.US)
        + load_variants(FIXTURES / "variants_neutral.tsv", Locale.NEUTRAL)
    )
    judgements = read_judgements(FIXTURES / "judgements.jsonl")
    top3 = mfg_cells(variants, judgements, TopSelection.TOP3)
    top10 = mfg_cells(variants, judgements, TopSelection.TOP10)
    # hand arithmetic from the grade tables in fixtures/generate.py
    for judge in (Locale.IN, Locale.US):
        assert top3[(Source.MLM, Locale.NEUTRAL, judge)] == (0 + 1 / 3) / 2
        assert top10[(Source.MLM, Locale.NEUTRAL, judge)] == (1 / 4 + 2 / 4) / 2
        assert top3[(Source.FREE_TEXT, Locale.IN, judge)] == (3 / 3 + 4 / 3) / 2
        assert top3[(Source.FREE_TEXT, Locale.US, judge)] == (6 / 3 + 7 / 3) / 2
        assert top3[(Source.YODALIB, Locale.IN, judge)] == (8 / 3 + 8 / 3) / 2
        assert top3[(Source.YODALIB, Locale.US, judge)] == (9 / 3 + 9 / 3) / 2
        assert top10[(Source.YODALIB, Locale.IN, judge)] == (10 / 4 + 10 / 4) / 2
        assert top10[(Source.YODALIB, Locale.US, judge)] == (11 / 4 + 11 / 4) / 2
        for cells in (top3, top10):
            yoda = min(
                cells[(Source.YODALIB, Locale.IN, judge)],
                cells[(Source.YODALIB, Locale.US, judge)],
            )
            mlm = cells[(Source.MLM, Locale.NEUTRAL, judge)]
            fts = [
                cells[(Source.FREE_TEXT, loc, judge)]
                for loc in (Locale.IN, Locale.US)
                if cells[(Source.FREE_TEXT, loc, judge)] is not None
            ]
            assert yoda > mlm
            for ft in fts:
                assert yoda > ft > mlm
    report("mean-MFG report reproduces hand-computed cells; YodaLib > FT > MLM per judge locale")


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def test_determinism_and_golden(tmp_path):
    outputs = []
    for run in range(3):
        out = tmp_path / f"run{run}"
        jobs = 8 if run == 2 else 1
        _run_cli("fill", "--config", CONFIG, "--jobs", jobs, "--out", out)
        _run_cli(
            "compose", "--config", CONFIG, "--jobs", jobs,
            "--transformations", out / "transformations.jsonl", "--out", out,
        )
        outputs.append(
            (
                (out / "transformations.jsonl").read_bytes(),
                (out / "stories.jsonl").read_bytes(),
            )
        )
    assert outputs[0] == outputs[1] == outputs[2]
    expected_t = (GOLDEN / "transformations.sha256").read_text().strip()
    expected_s = (GOLDEN / "stories.sha256").read_text().strip()
    assert _sha256(tmp_path / "run0" / "transformations.jsonl") == expected_t
    assert _sha256(tmp_path / "run0" / "stories.jsonl") == expected_s
    assert (tmp_path / "run0" / "stories.jsonl").read_bytes() == (GOLDEN / "stories.jsonl").read_bytes()
    report("byte-identical outputs across 3 runs and --jobs 1 vs 8; golden hashes match")


def test_pearson_oracle():
    x = [1.0, 2.0, 3.0, 4.0]
    assert pearson_r(x, [2 * v + 1 for v in x]) == (1.0, 0.0)
    assert pearson_r(x, [-v for v in x]) == (-1.0, 0.0)
    x8 = [1.0, 2.0, 3.0, 5.0, 8.0, 13.0, 21.0, 34.0]
    y8 = [2.1, 1.9, 3.3, 4.2, 9.1, 11.8, 22.4, 30.9]
    r, _ = pearson_r(x8, y8)
    assert r == pytest.approx(pearson_exact(x8, y8), abs=1e-9)
    with pytest.raises(MetricsError, match="zero variance"):
        pearson_r([1.0, 1.0, 1.0], [1.0, 2.0, 3.0])
    report("pearson r: exact on linear fixtures, 1e-9 vs oracle, zero-variance errors")
