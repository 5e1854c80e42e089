"""Run configuration: a ``key = value`` file plus flag overrides.

Documented keys (all optional unless a command needs them):

    locale              in | us | neutral        (default neutral)
    scorer              builtin | remote         (default builtin)
    endpoint            model service URL        (MADLIB_ENDPOINT fallback)
    seed                64-bit integer           (default 0; embedder hashing)
    jobs                worker count             (default 1)
    k                   candidate pool per mask  (default 10000)
    n                   sentence beam width      (default 100)
    story_beam          story beam width N       (default 100)
    funny_threshold     [0, 1]                   (default 0.5)
    final_rank          lexicographic | weighted (default lexicographic)
    rank_alpha          weighted-mode alpha      (default 0.5)
    ngram_order         2..5                     (default 3)
    ngram_smoothing     > 0                      (default 0.1)
    augmentation_pos    noun|verb|adjective|adverb (default noun)
    augmentation_count  pairs per locale         (default 0)
    embedding_dim       built-in embedder size   (default 768)
    templates           template file or directory of .funlib files
    lexicon             lexicon TSV path
    blocklist           blocklist path
    corpus              training corpus path
    humor_weights       feature-scorer weights path
    judgements          judgement JSONL path
    variants_in / variants_us / variants_neutral
                        filled-story record files per player locale
    wiki_corpus         augmentation corpus path (one sentence per line)
    splits              story split file (story_id = train|validation|test)
    out                 output directory
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path

from .annotation import Split
from .compose import ComposeParams, RankMode
from .errors import FunlibError
from .fill import FillParams
from .lexicon import PartOfSpeech
from .scoring import Locale

ENDPOINT_ENV_VAR = "MADLIB_ENDPOINT"

_PATH_KEYS = (
    "templates",
    "lexicon",
    "blocklist",
    "corpus",
    "humor_weights",
    "judgements",
    "variants_in",
    "variants_us",
    "variants_neutral",
    "wiki_corpus",
    "splits",
)


class ConfigError(FunlibError):
    """Bad configuration file or invalid setting combination."""


def read_kv_file(path: str | Path) -> dict[str, str]:
    """Parse ``key = value`` lines; '#' starts a comment."""
    out: dict[str, str] = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path} line {lineno}: expected 'key = value'")
        key, _, value = stripped.partition("=")
        out[key.strip()] = value.strip()
    return out


def parse_locale(text: str) -> Locale:
    lowered = text.strip().lower()
    for loc in Locale:
        if loc.value.lower() == lowered:
            return loc
    raise ConfigError(f"unknown locale {text!r} (expected in, us, or neutral)")


@dataclass
class RunConfig:
    locale: Locale = Locale.NEUTRAL
    scorer: str = "builtin"
    endpoint: str | None = None
    seed: int = 0
    jobs: int = 1
    k: int = 10_000
    n: int = 100
    story_beam: int = 100
    funny_threshold: float = 0.5
    final_rank: RankMode = RankMode.LEXICOGRAPHIC
    rank_alpha: float = 0.5
    ngram_order: int = 3
    ngram_smoothing: float = 0.1
    augmentation_pos: PartOfSpeech = PartOfSpeech.NOUN
    augmentation_count: int = 0
    embedding_dim: int = 768
    templates: Path | None = None
    lexicon: Path | None = None
    blocklist: Path | None = None
    corpus: Path | None = None
    humor_weights: Path | None = None
    judgements: Path | None = None
    variants_in: Path | None = None
    variants_us: Path | None = None
    variants_neutral: Path | None = None
    wiki_corpus: Path | None = None
    splits: Path | None = None
    out: Path = field(default_factory=lambda: Path("out"))

    def __post_init__(self) -> None:
        if self.scorer not in ("builtin", "remote"):
            raise ConfigError(f"scorer must be builtin or remote, got {self.scorer!r}")
        if self.k < self.n:
            raise ConfigError(f"k must be >= n, got k={self.k}, n={self.n}")
        if self.jobs < 1:
            raise ConfigError(f"jobs must be >= 1, got {self.jobs}")
        for name in _PATH_KEYS:
            value = getattr(self, name)
            if value is not None and not Path(value).exists():
                raise ConfigError(f"{name} path does not exist: {value}")

    @property
    def fill_params(self) -> FillParams:
        return FillParams(k=self.k, n=self.n)

    @property
    def compose_params(self) -> ComposeParams:
        return ComposeParams(
            beam_width=self.story_beam,
            funny_threshold=self.funny_threshold,
            rank_mode=self.final_rank,
            alpha=self.rank_alpha,
        )

    def resolve_endpoint(self) -> str:
        endpoint = self.endpoint or os.environ.get(ENDPOINT_ENV_VAR)
        if not endpoint:
            raise ConfigError(
                f"remote scorer needs --endpoint, the endpoint key, or ${ENDPOINT_ENV_VAR}"
            )
        return endpoint


_PARSERS = {
    "locale": parse_locale,
    "scorer": str,
    "endpoint": str,
    "seed": int,
    "jobs": int,
    "k": int,
    "n": int,
    "story_beam": int,
    "funny_threshold": float,
    "final_rank": RankMode,
    "rank_alpha": float,
    "ngram_order": int,
    "ngram_smoothing": float,
    "augmentation_pos": PartOfSpeech,
    "augmentation_count": int,
    "embedding_dim": int,
    "out": Path,
}
_PARSERS.update({key: Path for key in _PATH_KEYS})


def load_config(path: str | Path | None, overrides: dict | None = None) -> RunConfig:
    """Config file values, then overrides (flags win)."""
    raw: dict[str, object] = {}
    base = Path(path).parent if path else Path(".")
    if path is not None:
        for key, text in read_kv_file(path).items():
            if key not in _PARSERS:
                raise ConfigError(f"{path}: unknown config key {key!r}")
            if text == "":
                continue
            try:
                value = _PARSERS[key](text)
            except (ValueError, KeyError):
                raise ConfigError(f"{path}: bad value for {key}: {text!r}") from None
            if isinstance(value, Path) and not value.is_absolute():
                value = base / value
            raw[key] = value
    for key, value in (overrides or {}).items():
        if value is not None:
            raw[key] = value
    try:
        return RunConfig(**raw)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def load_split_map(path: str | Path) -> dict[str, Split]:
    out = {}
    for story_id, value in read_kv_file(path).items():
        try:
            out[story_id] = Split(value)
        except ValueError:
            raise ConfigError(f"{path}: bad split {value!r} for {story_id!r}") from None
    return out
