"""Access to the bundled specification corpus."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .parser import parse_spec
from .syntax import Spec
from .synth import CHAIN_PLACEHOLDER, instantiate_chain

CORPUS_DIR = Path(str(resources.files("tslforge") / "corpus"))


@dataclass(frozen=True)
class CorpusEntry:
    file: str
    source: str
    formulas: tuple
    status: str
    expected_bound: int | None = None
    reference_bound: int | None = None
    interpretation: str | None = None
    template: bool = False
    chain: int | None = None
    reconstructed: tuple = ()
    extra: dict = field(default_factory=dict, compare=False)

    @property
    def name(self) -> str:
        return Path(self.file).stem

    @property
    def path(self) -> Path:
        return CORPUS_DIR / self.file

    @property
    def interpretation_path(self) -> Path | None:
        return CORPUS_DIR / self.interpretation if self.interpretation else None

    def text(self, n: int | None = None) -> str:
        raw = self.path.read_text(encoding="utf-8")
        if self.template:
            return instantiate_chain(raw, self.chain if n is None else n)
        return raw

    def spec(self, n: int | None = None) -> Spec:
        return parse_spec(self.text(n))

    def missing_tags(self) -> list[str]:
        labels = self.spec().labels
        return [f for f in tuple(self.formulas) + tuple(self.reconstructed) if f not in labels]


_KNOWN = {
    "file", "source", "formulas", "status", "expected_bound", "reference_bound",
    "interpretation", "template", "chain", "reconstructed",
}


def build_corpus() -> list[CorpusEntry]:
    doc = json.loads((CORPUS_DIR / "manifest.json").read_text(encoding="utf-8"))
    entries = []
    for rec in doc["entries"]:
        entries.append(
            CorpusEntry(
                file=rec["file"],
                source=rec["source"],
                formulas=tuple(rec["formulas"]),
                status=rec["status"],
                expected_bound=rec.get("expected_bound"),
                reference_bound=rec.get("reference_bound"),
                interpretation=rec.get("interpretation"),
                template=rec.get("template", False),
                chain=rec.get("chain"),
                reconstructed=tuple(rec.get("reconstructed", ())),
                extra={k: v for k, v in rec.items() if k not in _KNOWN},
            )
        )
    return entries


def entry(name: str) -> CorpusEntry:
    for e in build_corpus():
        if name in (e.name, e.file):
            return e
    raise KeyError(name)


def is_template(text: str) -> bool:
    return CHAIN_PLACEHOLDER in text
