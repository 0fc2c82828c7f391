import json
from fractions import Fraction

import pytest

from neurosym.dataset import (
    DatasetRecord, TEST, TRAIN, dedup, ingest, normalize_prompt, parse_record,
    record_to_json, split,
)
from neurosym.scoring import GroundTruth


def make_record(i, category="algebra", prompt=None):
    return DatasetRecord(
        id=f"r{i}", category=category,
        prompt=prompt if prompt is not None else f"question number {i}",
        image_refs=(), truth=GroundTruth.from_exact(i))


def write_jsonl(path, objs):
    path.write_text("".join(json.dumps(o) + "\n" for o in objs), encoding="utf-8")


# ---- ingest ----

def test_ingest_valid_records(tmp_path):
    path = tmp_path / "d.jsonl"
    write_jsonl(path, [
        {"id": "a", "category": "geo", "prompt": "p1", "answer_type": "exact", "answer": "3/2"},
        {"id": "b", "category": "alg", "prompt": "p2", "answer_type": "option", "answer": "c",
         "image_refs": ["img/1.png"]},
    ])
    report = ingest(path)
    assert not report.errors
    assert report.records[0].truth.number == Fraction(3, 2)
    assert report.records[1].truth.option == "C"
    assert report.records[1].image_refs == ("img/1.png",)


def test_ingest_collects_malformed_lines_with_numbers(tmp_path):
    path = tmp_path / "d.jsonl"
    path.write_text(
        '{"id": "a", "category": "c", "prompt": "p", "answer_type": "exact", "answer": "1"}\n'
        "not json at all\n"
        '{"id": "b", "category": "c", "prompt": "p2", "answer_type": "bogus", "answer": "1"}\n'
        '{"id": "a", "category": "c", "prompt": "p3", "answer_type": "exact", "answer": "2"}\n',
        encoding="utf-8")
    report = ingest(path)
    assert len(report.records) == 1
    lines = [lineno for lineno, _ in report.errors]
    assert lines == [2, 3, 4]  # bad JSON, bad answer_type, duplicate id


def test_parse_record_requires_fields():
    with pytest.raises(ValueError):
        parse_record({"id": "x", "category": "c", "prompt": "p", "answer_type": "exact"})
    with pytest.raises(ValueError):
        parse_record({"id": "x", "category": "", "prompt": "p",
                      "answer_type": "exact", "answer": "1"})


def test_record_roundtrips_through_json():
    record = make_record(3)
    again = parse_record(json.loads(record_to_json(record)))
    assert again.id == record.id and again.truth == record.truth


# ---- dedup ----

def test_dedup_normalizes_whitespace_and_case():
    records = [
        make_record(0, prompt="What is  2+2?"),
        make_record(1, prompt="what is 2+2?  "),
        make_record(2, prompt="Different question"),
    ]
    kept, removed_pct = dedup(records)
    assert [r.id for r in kept] == ["r0", "r2"]
    assert removed_pct == 33.33


def test_normalize_prompt():
    assert normalize_prompt("  A  B\n\tC ") == "a b c"


def test_dedup_anchor_percentage():
    # 422 duplicated prompts out of 10000 records: exactly 4.22%.
    records = [make_record(i) for i in range(10000 - 422)]
    records += [make_record(20000 + i, prompt=f"question number {i}") for i in range(422)]
    kept, removed_pct = dedup(records)
    assert len(kept) == 10000 - 422
    assert removed_pct == 4.22


# ---- split ----

def test_split_anchor_5010_records():
    records = [make_record(i, category=f"c{i % 3}") for i in range(5010)]
    assigned = split(records, (500, 1), seed=0)
    assert sum(1 for r in assigned if r.split == TEST) == 10
    assert sum(1 for r in assigned if r.split == TRAIN) == 5000


def test_split_is_deterministic_per_seed():
    records = [make_record(i, category=f"c{i % 4}") for i in range(2004)]
    a = split(records, (500, 1), seed=7)
    b = split(records, (500, 1), seed=7)
    c = split(records, (500, 1), seed=8)
    assert [r.split for r in a] == [r.split for r in b]
    assert [r.split for r in a] != [r.split for r in c]


def test_split_is_stratified_within_one_record():
    records = [make_record(i, category=f"c{i % 5}") for i in range(5010)]
    assigned = split(records, (500, 1), seed=1)
    per_cat = {}
    for r in assigned:
        if r.split == TEST:
            per_cat[r.category] = per_cat.get(r.category, 0) + 1
    assert sum(per_cat.values()) == 10
    assert all(abs(n - 2) <= 1 for n in per_cat.values())


def test_split_preserves_record_order_and_content():
    records = [make_record(i) for i in range(1002)]
    assigned = split(records, (500, 1), seed=0)
    assert [r.id for r in assigned] == [r.id for r in records]


def test_too_small_dataset_warns_and_goes_to_train():
    records = [make_record(i) for i in range(5)]
    with pytest.warns(UserWarning):
        assigned = split(records, (500, 1), seed=0)
    assert all(r.split == TRAIN for r in assigned)


def test_bad_ratio_rejected():
    with pytest.raises(ValueError):
        split([make_record(0)], (0, 1), seed=0)
