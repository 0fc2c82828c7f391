"""Dataset ingestion, prompt dedup, and the seeded train/test split.

Dataset files are JSON lines, one record per line:
{"id", "category", "prompt", "image_refs", "answer_type", "answer", "rel_tol"?}
with answer_type one of option|exact|approx|text. Image paths are carried
verbatim and never decoded.
"""

from __future__ import annotations

import json
import random
import re
import warnings
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

from .scoring import GroundTruth, round_pct

TRAIN = "train"
TEST = "test"
UNASSIGNED = "unassigned"


@dataclass(frozen=True)
class DatasetRecord:
    id: str
    category: str
    prompt: str
    image_refs: tuple[str, ...]
    truth: GroundTruth
    split: str = UNASSIGNED


@dataclass
class IngestReport:
    records: list[DatasetRecord] = field(default_factory=list)
    errors: list[tuple[int, str]] = field(default_factory=list)  # (1-based line, reason)


def parse_record(obj: dict) -> DatasetRecord:
    for key in ("id", "category", "prompt", "answer_type", "answer"):
        if key not in obj:
            raise ValueError(f"missing field {key!r}")
    if not obj["category"]:
        raise ValueError("category must be non-empty")
    truth = GroundTruth.parse(obj["answer_type"], str(obj["answer"]), obj.get("rel_tol"))
    refs = obj.get("image_refs", [])
    if not isinstance(refs, list):
        raise ValueError("image_refs must be a list")
    return DatasetRecord(
        id=str(obj["id"]),
        category=str(obj["category"]),
        prompt=str(obj["prompt"]),
        image_refs=tuple(str(r) for r in refs),
        truth=truth,
    )


def record_to_json(record: DatasetRecord) -> str:
    """Serialize back to the JSONL wire shape, including the split field."""
    truth = record.truth
    obj: dict = {
        "id": record.id,
        "category": record.category,
        "prompt": record.prompt,
        "image_refs": list(record.image_refs),
        "answer_type": truth.kind,
    }
    if truth.kind == "option":
        obj["answer"] = truth.option
    elif truth.kind == "exact":
        obj["answer"] = str(truth.number)
    elif truth.kind == "approx":
        obj["answer"] = repr(truth.approx)
        obj["rel_tol"] = truth.rel_tol
    else:
        obj["answer"] = truth.text
    if record.split != UNASSIGNED:
        obj["split"] = record.split
    return json.dumps(obj)


def ingest(path) -> IngestReport:
    """Parse a JSONL dataset file. Malformed lines are collected with
    their line numbers, never silently dropped. Duplicate ids are
    malformed."""
    report = IngestReport()
    seen_ids: set[str] = set()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                if not isinstance(obj, dict):
                    raise ValueError("record must be an object")
                record = parse_record(obj)
                if record.id in seen_ids:
                    raise ValueError(f"duplicate id {record.id!r}")
            except (json.JSONDecodeError, ValueError) as err:
                report.errors.append((lineno, str(err)))
                continue
            seen_ids.add(record.id)
            report.records.append(record)
    return report


_WS = re.compile(r"\s+")


def normalize_prompt(prompt: str) -> str:
    return _WS.sub(" ", prompt.strip()).casefold()


def dedup(records: Sequence[DatasetRecord]) -> tuple[list[DatasetRecord], float]:
    """Drop records whose normalized prompt was already seen, keeping the
    first occurrence. Returns (kept, removed percentage to 2 decimals)."""
    seen: set[str] = set()
    kept: list[DatasetRecord] = []
    for r in records:
        key = normalize_prompt(r.prompt)
        if key in seen:
            continue
        seen.add(key)
        kept.append(r)
    removed_pct = round_pct(100.0 * (len(records) - len(kept)) / len(records)) if records else 0.0
    return kept, removed_pct


def split(records: Sequence[DatasetRecord], ratio: tuple[int, int] = (500, 1),
          seed: int = 0) -> list[DatasetRecord]:
    """Assign train/test deterministically by seeded shuffle, stratified so
    test-set category proportions stay within one record of proportional.
    Too few records for the ratio downgrades to all-train with a warning."""
    train_part, test_part = ratio
    if train_part <= 0 or test_part <= 0:
        raise ValueError("ratio components must be positive integers")
    n = len(records)
    if n == 0:
        return []
    if n < train_part + test_part:
        warnings.warn(f"{n} records cannot honor a {train_part}:{test_part} split; all assigned to train")
        return [replace(r, split=TRAIN) for r in records]
    n_test = round(n / (train_part + test_part) * test_part)

    by_category: dict[str, list[int]] = {}
    for i, r in enumerate(records):
        by_category.setdefault(r.category, []).append(i)

    # Largest-remainder apportionment of the test quota across categories.
    quotas = {c: n_test * len(ix) / n for c, ix in by_category.items()}
    counts = {c: int(q) for c, q in quotas.items()}
    leftover = n_test - sum(counts.values())
    for c in sorted(quotas, key=lambda c: (-(quotas[c] - counts[c]), c))[:leftover]:
        counts[c] += 1

    rng = random.Random(seed)
    test_indices: set[int] = set()
    for c in sorted(by_category):
        picks = rng.sample(by_category[c], counts[c])
        test_indices.update(picks)
    return [replace(r, split=TEST if i in test_indices else TRAIN) for i, r in enumerate(records)]
