"""Service configuration: which checkpoints serve which locale."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

LAYER_CHOICES = ("second_to_last", "sum_last_4")


@dataclass(frozen=True)
class LocaleModels:
    mlm_dir: Path
    humor_dir: Path | None = None


@dataclass(frozen=True)
class ServiceConfig:
    locales: dict[str, LocaleModels] = field(default_factory=dict)
    layer: str = "second_to_last"
    max_words: int = 128

    def __post_init__(self) -> None:
        if not self.locales:
            raise ValueError("at least one locale must be configured")
        if self.layer not in LAYER_CHOICES:
            raise ValueError(f"layer must be one of {LAYER_CHOICES}, got {self.layer!r}")
        if self.max_words < 1:
            raise ValueError("max_words must be positive")

    @classmethod
    def from_json(cls, path: str | Path) -> "ServiceConfig":
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
        base = Path(path).parent
        locales = {}
        for name, entry in payload["locales"].items():
            mlm = base / entry["mlm"] if not Path(entry["mlm"]).is_absolute() else Path(entry["mlm"])
            humor = entry.get("humor")
            if humor is not None:
                humor = base / humor if not Path(humor).is_absolute() else Path(humor)
            locales[name] = LocaleModels(mlm_dir=mlm, humor_dir=humor)
        return cls(
            locales=locales,
            layer=payload.get("layer", "second_to_last"),
            max_words=payload.get("max_words", 128),
        )
