"""Category-wise metric tables and the token-efficiency comparator."""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

from .dataset import DatasetRecord
from .engine import Limits
from .extraction import CompletionRecord, Outcome, classify_completion
from .scoring import GroundTruth, RewardConfig, is_correct, round_pct

# Default tokenizer: words and punctuation runs; count("") == 0.
_TOKEN = re.compile(r"\w+|[^\w\s]")

Tokenizer = Callable[[str], int]


def default_tokenizer(text: str) -> int:
    return len(_TOKEN.findall(text))


@dataclass(frozen=True)
class CategoryReport:
    category: str
    count: int
    code_pct: float
    noerr_pct: float
    accuracy_pct: float
    prompt_tok_mean: float
    prompt_tok_std: float
    output_tok_mean: float
    output_tok_std: float


@dataclass
class CorpusReport:
    categories: list[CategoryReport] = field(default_factory=list)
    overall: Optional[CategoryReport] = None
    missing_completions: list[str] = field(default_factory=list)  # record ids


def _population_stats(xs: Sequence[float]) -> tuple[float, float]:
    if not xs:
        return 0.0, 0.0
    mean = sum(xs) / len(xs)
    var = sum((x - mean) ** 2 for x in xs) / len(xs)
    return mean, math.sqrt(var)


def _make_row(category: str, outcomes: list[Outcome], truths: list[GroundTruth],
              prompt_toks: list[int], output_toks: list[int]) -> CategoryReport:
    n = len(outcomes)
    code = sum(1 for o in outcomes if o.has_code)
    noerr = sum(1 for o in outcomes if o.error_free)
    correct = sum(1 for o, t in zip(outcomes, truths) if is_correct(o, t))
    pmean, pstd = _population_stats(prompt_toks)
    omean, ostd = _population_stats(output_toks)
    return CategoryReport(
        category=category,
        count=n,
        code_pct=round_pct(100.0 * code / n) if n else 0.0,
        noerr_pct=round_pct(100.0 * noerr / n) if n else 0.0,
        accuracy_pct=round_pct(100.0 * correct / n) if n else 0.0,
        prompt_tok_mean=pmean, prompt_tok_std=pstd,
        output_tok_mean=omean, output_tok_std=ostd,
    )


def evaluate_corpus(records: Sequence[DatasetRecord],
                    completions: dict[str, CompletionRecord],
                    limits: Optional[Limits] = None,
                    reward_config: Optional[RewardConfig] = None) -> CorpusReport:
    """Classify one completion per record (keyed by record id) and build
    per-category rows plus an overall row recomputed from raw counts.
    Records without a completion are excluded from the statistics and
    listed in the report footer."""
    report = CorpusReport()
    per_cat: dict[str, tuple[list, list, list, list]] = {}
    all_rows = ([], [], [], [])
    for r in records:
        completion = completions.get(r.id)
        if completion is None:
            report.missing_completions.append(r.id)
            continue
        outcome = classify_completion(completion, limits)
        bucket = per_cat.setdefault(r.category, ([], [], [], []))
        for b in (bucket, all_rows):
            b[0].append(outcome)
            b[1].append(r.truth)
            b[2].append(completion.prompt_token_len)
            b[3].append(completion.output_token_len)
    for category in sorted(per_cat):
        report.categories.append(_make_row(category, *per_cat[category]))
    if all_rows[0]:
        report.overall = _make_row("Overall", *all_rows)
    else:
        report.overall = CategoryReport("Overall", 0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0)
    return report


_COLUMNS = ["Category", "Count", "Code(%)", "NoErr(%)", "Accuracy(%)", "PromptTokLen", "OutputTokLen"]


def _row_cells(row: CategoryReport) -> list[str]:
    return [
        row.category,
        str(row.count),
        f"{row.code_pct:.2f}",
        f"{row.noerr_pct:.2f}",
        f"{row.accuracy_pct:.2f}",
        f"{row.prompt_tok_mean:.2f}±{row.prompt_tok_std:.2f}",
        f"{row.output_tok_mean:.2f}±{row.output_tok_std:.2f}",
    ]


def render_table(report: CorpusReport) -> str:
    rows = [_COLUMNS] + [_row_cells(r) for r in report.categories]
    if report.overall is not None:
        rows.append(_row_cells(report.overall))
    widths = [max(len(r[i]) for r in rows) for i in range(len(_COLUMNS))]
    lines = ["  ".join(cell.ljust(w) for cell, w in zip(r, widths)).rstrip() for r in rows]
    lines.insert(1, "  ".join("-" * w for w in widths))
    if report.missing_completions:
        lines.append(f"missing completions: {len(report.missing_completions)} "
                     f"({', '.join(report.missing_completions)})")
    else:
        lines.append("missing completions: 0")
    return "\n".join(lines)


def report_to_json(report: CorpusReport) -> str:
    def row_obj(r: CategoryReport) -> dict:
        return {
            "Category": r.category,
            "Count": r.count,
            "Code(%)": r.code_pct,
            "NoErr(%)": r.noerr_pct,
            "Accuracy(%)": r.accuracy_pct,
            "PromptTokLen": {"mean": r.prompt_tok_mean, "std": r.prompt_tok_std},
            "OutputTokLen": {"mean": r.output_tok_mean, "std": r.output_tok_std},
        }
    return json.dumps({
        "categories": [row_obj(r) for r in report.categories],
        "overall": row_obj(report.overall) if report.overall else None,
        "missing_completions": report.missing_completions,
    }, indent=2)


def token_reduction(corpus_a: Sequence[str], corpus_b: Sequence[str],
                    tokenizer: Tokenizer = default_tokenizer) -> float:
    """Percentage reduction in total tokens of corpus_a relative to
    corpus_b; negative when a is longer."""
    if not corpus_a or not corpus_b:
        raise ValueError("corpora must be non-empty")
    total_a = sum(tokenizer(p) for p in corpus_a)
    total_b = sum(tokenizer(p) for p in corpus_b)
    if total_b == 0:
        raise ValueError("reference corpus has zero tokens")
    return round_pct(100.0 * (1.0 - total_a / total_b))
