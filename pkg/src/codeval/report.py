"""Verdict aggregation into per-(scenario, language, model) metrics and
report rendering.

Markdown tables round percentages half-up to whole percent, mirroring the
reference presentation; the JSON document keeps full precision and embeds
the harness version, prompt-template hash, and analyzer versions so runs
stay comparable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from typing import Any, Optional

from . import __version__
from .core import FailureClass, Language, Scenario, Verdict

REPORT_SCHEMA = "codeval-report/1"


@dataclass(frozen=True)
class CaseResult:
    scenario: Scenario
    language: Language
    model_id: str
    verdict: Verdict

    def to_dict(self) -> dict[str, Any]:
        d = self.verdict.to_dict()
        d["scenario"] = self.scenario.value
        d["language"] = self.language.value
        d["model_id"] = self.model_id
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "CaseResult":
        return cls(
            scenario=Scenario(d["scenario"]),
            language=Language(d["language"]),
            model_id=d["model_id"],
            verdict=Verdict.from_dict(d),
        )


@dataclass
class ScenarioMetrics:
    scenario: Scenario
    language: Language
    model_id: str
    n_cases: int
    syntax_correct_rate: float
    format_correct_rate: Optional[float] = None
    fix_rate: Optional[float] = None
    test_pass_rate: Optional[float] = None
    generated_test_pass_rate: Optional[float] = None
    mrr: Optional[float] = None
    keyword_rate: Optional[float] = None

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {
            "scenario": self.scenario.value,
            "language": self.language.value,
            "model_id": self.model_id,
            "n_cases": self.n_cases,
            "syntax_correct_rate": self.syntax_correct_rate,
        }
        for name in (
            "format_correct_rate", "fix_rate", "test_pass_rate",
            "generated_test_pass_rate", "mrr", "keyword_rate",
        ):
            value = getattr(self, name)
            if value is not None:
                d[name] = value
        return d


def _pct(numerator: float, denominator: float) -> float:
    return 100.0 * numerator / denominator if denominator else 0.0


def aggregate(results: list[CaseResult]) -> list[ScenarioMetrics]:
    groups: dict[tuple[Scenario, Language, str], list[CaseResult]] = {}
    for r in results:
        groups.setdefault((r.scenario, r.language, r.model_id), []).append(r)

    out: list[ScenarioMetrics] = []
    for (scenario, language, model_id), rows in sorted(
        groups.items(), key=lambda kv: (kv[0][0].value, kv[0][1].value, kv[0][2])
    ):
        verdicts = [r.verdict for r in rows]
        n = len(verdicts)
        metrics = ScenarioMetrics(
            scenario=scenario,
            language=language,
            model_id=model_id,
            n_cases=n,
            syntax_correct_rate=_pct(sum(v.syntax_ok for v in verdicts), n),
        )
        if scenario is Scenario.DOC:
            metrics.format_correct_rate = _pct(
                sum(v.passed for v in verdicts), n
            )
        elif scenario is Scenario.FIX:
            metrics.fix_rate = _pct(sum(v.passed for v in verdicts), n)
        elif scenario is Scenario.GENERATE:
            ratios = [
                v.evidence.get("covering_pass_ratio")
                for v in verdicts
                if v.evidence.get("covering_pass_ratio") is not None
            ]
            if ratios:
                metrics.test_pass_rate = 100.0 * sum(ratios) / len(ratios)
            else:
                metrics.test_pass_rate = _pct(sum(v.passed for v in verdicts), n)
        elif scenario is Scenario.TEST:
            eligible = [
                v
                for v in verdicts
                if v.failure_class is not FailureClass.UNRELIABLE_FILE
            ]
            metrics.generated_test_pass_rate = _pct(
                sum(v.passed for v in eligible), len(eligible)
            )
        elif scenario is Scenario.WORKSPACE:
            rrs = [
                float(v.evidence.get("reciprocal_rank", 0.0)) for v in verdicts
            ]
            metrics.mrr = sum(rrs) / len(rrs) if rrs else 0.0
            metrics.keyword_rate = _pct(sum(v.passed for v in verdicts), n)
        out.append(metrics)
    return out


def round_half_up(value: float) -> int:
    return int(Decimal(str(value)).quantize(Decimal("1"), rounding=ROUND_HALF_UP))


_TABLE_COLUMNS: dict[Scenario, list[tuple[str, str]]] = {
    Scenario.DOC: [
        ("syntax_correct_rate", "Syntax Correctness"),
        ("format_correct_rate", "Format Correctness"),
    ],
    Scenario.FIX: [
        ("syntax_correct_rate", "Syntax Correctness"),
        ("fix_rate", "Bugs Fixed"),
    ],
    Scenario.GENERATE: [
        ("syntax_correct_rate", "Syntax Correctness"),
        ("test_pass_rate", "Test Pass Rate"),
    ],
    Scenario.TEST: [
        ("syntax_correct_rate", "Syntax Correctness"),
        ("generated_test_pass_rate", "Generated Test Pass Rate"),
    ],
    Scenario.WORKSPACE: [
        ("mrr", "MRR"),
        ("keyword_rate", "Keyword Detection"),
    ],
}


def render(
    metrics: list[ScenarioMetrics],
    fmt: str,
    analyzer_versions: Optional[dict[str, str]] = None,
    prompt_template_hash: str = "",
) -> str:
    if fmt == "json":
        doc = {
            "schema": REPORT_SCHEMA,
            "harness_version": __version__,
            "prompt_template_hash": prompt_template_hash,
            "analyzer_versions": analyzer_versions or {},
            "metrics": [m.to_dict() for m in metrics],
        }
        return json.dumps(doc, indent=1, sort_keys=True) + "\n"
    if fmt == "markdown":
        return _render_markdown(metrics, analyzer_versions, prompt_template_hash)
    raise ValueError(f"unknown report format {fmt!r}")


def _render_markdown(
    metrics: list[ScenarioMetrics],
    analyzer_versions: Optional[dict[str, str]],
    prompt_template_hash: str,
) -> str:
    lines: list[str] = ["# Evaluation report", ""]
    if prompt_template_hash:
        lines.append(f"Prompt template hash: `{prompt_template_hash}`")
    if analyzer_versions:
        pins = ", ".join(f"{k} {v}" for k, v in sorted(analyzer_versions.items()))
        lines.append(f"Analyzers: {pins}")
    if len(lines) > 2:
        lines.append("")

    by_scenario: dict[Scenario, list[ScenarioMetrics]] = {}
    for m in metrics:
        by_scenario.setdefault(m.scenario, []).append(m)

    for scenario in Scenario:
        rows = by_scenario.get(scenario)
        if not rows:
            continue
        columns = _TABLE_COLUMNS[scenario]
        lines.append(f"## {scenario.value.capitalize()}")
        lines.append("")
        header = "| Language | Model | Cases | " + " | ".join(
            label for _, label in columns
        ) + " |"
        sep = "|" + " --- |" * (3 + len(columns))
        lines.extend([header, sep])
        for m in sorted(rows, key=lambda m: (m.language.value, m.model_id)):
            cells = [m.language.value, m.model_id, str(m.n_cases)]
            for attr, _ in columns:
                value = getattr(m, attr)
                if value is None:
                    cells.append("-")
                elif attr == "mrr":
                    cells.append(f"{value:.3f}")
                else:
                    cells.append(f"{round_half_up(value)}%")
            lines.append("| " + " | ".join(cells) + " |")
        lines.append("")
    return "\n".join(lines).rstrip("\n") + "\n"


def write_results_jsonl(results: list[CaseResult], path) -> None:
    rows = sorted(
        (json.dumps(r.to_dict(), sort_keys=True, separators=(",", ":"))
         for r in results),
    )
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(row + "\n")


def read_results_jsonl(path) -> list[CaseResult]:
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                out.append(CaseResult.from_dict(json.loads(line)))
            except (json.JSONDecodeError, KeyError, ValueError) as exc:
                raise ValueError(f"malformed verdict line {lineno}: {exc}")
    return out
