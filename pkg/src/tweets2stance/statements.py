"""Statement/topic catalog and ground-truth agreement labels."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

#: Valid agreement levels, least to most agreement.
LABELS = (1, 2, 3, 4, 5)

LABEL_NAMES = {
    1: "completely disagree",
    2: "disagree",
    3: "neither disagree, nor agree",
    4: "agree",
    5: "completely agree",
}


def check_label(value: int, context: str = "label") -> int:
    if value not in LABELS:
        raise ValueError(f"{context} must be an integer in 1..5, got {value!r}")
    return value


@dataclass(frozen=True)
class Statement:
    """One catalog entry: the sentence and its topic, per language tag."""

    nr: int
    sentence: Mapping[str, str]
    topic: Mapping[str, str]

    def sentence_in(self, lang: str) -> str:
        try:
            return self.sentence[lang]
        except KeyError:
            raise ValueError(f"statement {self.nr} has no sentence for language {lang!r}") from None

    def topic_in(self, lang: str) -> str:
        try:
            return self.topic[lang]
        except KeyError:
            raise ValueError(f"statement {self.nr} has no topic for language {lang!r}") from None

    @property
    def languages(self) -> tuple[str, ...]:
        return tuple(sorted(self.sentence))


@dataclass(frozen=True)
class GroundTruth:
    """A party's known agreement level for one statement."""

    party: str
    statement_nr: int
    label: int

    def __post_init__(self) -> None:
        check_label(self.label, f"ground truth for ({self.party!r}, {self.statement_nr})")


STATEMENT_COLUMNS = ("nr", "lang", "sentence", "topic")
GROUND_TRUTH_COLUMNS = ("party", "statement_nr", "label")


def load_statements(path: str | Path) -> list[Statement]:
    """Load the statement catalog CSV (columns nr,lang,sentence,topic).

    Every statement number must carry every language tag seen anywhere in
    the file; duplicates and gaps are fatal.
    """
    sentences: dict[int, dict[str, str]] = {}
    topics: dict[int, dict[str, str]] = {}
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            return []
        if tuple(reader.fieldnames) != STATEMENT_COLUMNS:
            raise ValueError(
                f"{path}: expected header {','.join(STATEMENT_COLUMNS)}, got {reader.fieldnames}"
            )
        for row_nr, row in enumerate(reader, start=2):
            try:
                nr = int(row["nr"])
            except (TypeError, ValueError):
                raise ValueError(f"{path}:{row_nr}: bad statement nr {row['nr']!r}") from None
            lang = (row["lang"] or "").strip()
            sentence = (row["sentence"] or "").strip()
            topic = (row["topic"] or "").strip()
            if nr < 1 or not lang or not sentence or not topic:
                raise ValueError(f"{path}:{row_nr}: nr/lang/sentence/topic must all be non-empty")
            if lang in sentences.setdefault(nr, {}):
                raise ValueError(f"{path}:{row_nr}: duplicate (nr={nr}, lang={lang!r})")
            sentences[nr][lang] = sentence
            topics.setdefault(nr, {})[lang] = topic

    all_langs = {lang for per_nr in sentences.values() for lang in per_nr}
    for nr, per_nr in sorted(sentences.items()):
        missing = all_langs - set(per_nr)
        if missing:
            raise ValueError(f"{path}: statement {nr} is missing language(s) {sorted(missing)}")
    return [
        Statement(nr=nr, sentence=dict(sentences[nr]), topic=dict(topics[nr]))
        for nr in sorted(sentences)
    ]


def save_statements(statements: list[Statement], path: str | Path) -> None:
    """Write the catalog back out in the load_statements format."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(STATEMENT_COLUMNS)
        for statement in sorted(statements, key=lambda s: s.nr):
            for lang in sorted(statement.sentence):
                writer.writerow(
                    [statement.nr, lang, statement.sentence[lang], statement.topic[lang]]
                )


def load_ground_truth(path: str | Path) -> list[GroundTruth]:
    """Load ground-truth labels (columns party,statement_nr,label)."""
    records: list[GroundTruth] = []
    seen: set[tuple[str, int]] = set()
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            return []
        if tuple(reader.fieldnames) != GROUND_TRUTH_COLUMNS:
            raise ValueError(
                f"{path}: expected header {','.join(GROUND_TRUTH_COLUMNS)}, got {reader.fieldnames}"
            )
        for row_nr, row in enumerate(reader, start=2):
            party = (row["party"] or "").strip()
            if not party:
                raise ValueError(f"{path}:{row_nr}: empty party")
            try:
                nr = int(row["statement_nr"])
                label = int(row["label"])
            except (TypeError, ValueError):
                raise ValueError(f"{path}:{row_nr}: statement_nr and label must be integers") from None
            if label not in LABELS:
                raise ValueError(f"{path}:{row_nr}: label {label} outside 1..5")
            key = (party, nr)
            if key in seen:
                raise ValueError(f"{path}:{row_nr}: duplicate ({party!r}, {nr})")
            seen.add(key)
            records.append(GroundTruth(party=party, statement_nr=nr, label=label))
    return records
