"""Corpus-level statistics: turn split, step counts, tool/domain cardinality."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Iterable

from .schema import MULTI_TURN, UnifiedTrajectory, classify_turns
from .validation import Finding


@dataclass
class CorpusStats:
    total: int = 0
    single_turn: int = 0
    multi_turn: int = 0
    multi_turn_steps: int = 0  # summed steps over multi-turn records
    unparseable: int = 0
    tool_names: set[str] = field(default_factory=set)
    domains: dict[str, int] = field(default_factory=dict)
    finding_histogram: dict[str, int] = field(default_factory=dict)

    @property
    def mean_steps_multi_turn(self) -> float:
        return self.multi_turn_steps / self.multi_turn if self.multi_turn else 0.0

    @property
    def distinct_tool_names(self) -> int:
        return len(self.tool_names)

    def merge(self, other: "CorpusStats") -> "CorpusStats":
        merged = CorpusStats(
            total=self.total + other.total,
            single_turn=self.single_turn + other.single_turn,
            multi_turn=self.multi_turn + other.multi_turn,
            multi_turn_steps=self.multi_turn_steps + other.multi_turn_steps,
            unparseable=self.unparseable + other.unparseable,
            tool_names=self.tool_names | other.tool_names,
        )
        for src in (self.domains, other.domains):
            for key, count in src.items():
                merged.domains[key] = merged.domains.get(key, 0) + count
        for src in (self.finding_histogram, other.finding_histogram):
            for key, count in src.items():
                merged.finding_histogram[key] = merged.finding_histogram.get(key, 0) + count
        return merged

    def to_obj(self) -> dict[str, Any]:
        return {
            "total": self.total,
            "single_turn": self.single_turn,
            "multi_turn": self.multi_turn,
            "mean_steps_multi_turn": self.mean_steps_multi_turn,
            "distinct_tool_names": self.distinct_tool_names,
            "tool_names": sorted(self.tool_names),
            "unparseable": self.unparseable,
            "domains": dict(sorted(self.domains.items())),
            "finding_histogram": dict(sorted(self.finding_histogram.items())),
        }

    @classmethod
    def from_obj(cls, obj: dict[str, Any]) -> "CorpusStats":
        stats = cls(
            total=obj["total"],
            single_turn=obj["single_turn"],
            multi_turn=obj["multi_turn"],
            unparseable=obj.get("unparseable", 0),
            tool_names=set(obj.get("tool_names", [])),
            domains=dict(obj.get("domains", {})),
            finding_histogram=dict(obj.get("finding_histogram", {})),
        )
        stats.multi_turn_steps = round(obj.get("mean_steps_multi_turn", 0.0) * stats.multi_turn)
        return stats


def observe(stats: CorpusStats, t: UnifiedTrajectory, findings: Iterable[Finding] = ()) -> None:
    """Fold one record into the running stats (single pass, bounded memory)."""
    stats.total += 1
    turns = classify_turns(t)
    if turns.kind == MULTI_TURN:
        stats.multi_turn += 1
        stats.multi_turn_steps += turns.steps
    else:
        stats.single_turn += 1
    for tool in t.tools:
        stats.tool_names.add(tool.name)
    domain = t.extensions.get("domain")
    if isinstance(domain, str) and domain:
        stats.domains[domain] = stats.domains.get(domain, 0) + 1
    for f in findings:
        stats.finding_histogram[f.code] = stats.finding_histogram.get(f.code, 0) + 1


def compute_stats(trajectories: Iterable[UnifiedTrajectory], findings_per_record: Iterable[list[Finding]] | None = None) -> CorpusStats:
    stats = CorpusStats()
    if findings_per_record is None:
        for t in trajectories:
            observe(stats, t)
    else:
        for t, findings in zip(trajectories, findings_per_record):
            observe(stats, t, findings)
    return stats


def _pct(part: int, total: int) -> str:
    if not total:
        return "n/a"
    return f"{part / total * 100:.1f}%"


def render_report(stats: CorpusStats, format: str = "json") -> str:
    if format == "json":
        return json.dumps(stats.to_obj(), indent=2, sort_keys=True) + "\n"
    if format != "markdown":
        raise ValueError(f"unknown report format {format!r}")
    lines = [
        "# Corpus report",
        "",
        f"total: {stats.total}",
        f"single-turn: {stats.single_turn} ({_pct(stats.single_turn, stats.total)})",
        f"multi-turn: {stats.multi_turn} ({_pct(stats.multi_turn, stats.total)})",
        f"mean steps (multi-turn): {stats.mean_steps_multi_turn:.1f}" if stats.multi_turn else "mean steps (multi-turn): n/a",
        f"distinct tools: {stats.distinct_tool_names}",
        f"unparseable records: {stats.unparseable}",
    ]
    if stats.domains:
        lines += ["", "## Domains", "", "| domain | count |", "| --- | --- |"]
        lines += [f"| {d} | {c} |" for d, c in sorted(stats.domains.items())]
    lines += ["", "## Findings", "", "| finding | count |", "| --- | --- |"]
    if stats.finding_histogram:
        lines += [f"| {code} | {count} |" for code, count in sorted(stats.finding_histogram.items())]
    else:
        lines += ["| (none) | 0 |"]
    return "\n".join(lines) + "\n"
