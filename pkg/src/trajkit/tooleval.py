"""Tool-call extraction from raw model output and API-level P/R/F1 metrics."""

from __future__ import annotations

import ast
import json
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Any, Iterable

from .errors import InputError, ToolCallParseError
from .schema import ToolCall, canon_value, dumps_compact, iter_jsonl

_THINK_RE = re.compile(r"<think>.*?</think>", re.DOTALL)
_TOOL_CALL_RE = re.compile(r"<tool_call>(.*?)</tool_call>", re.DOTALL)
_FENCE_RE = re.compile(r"```[ \t]*[A-Za-z0-9_+-]*[ \t]*\n(.*?)\n?[ \t]*```", re.DOTALL)


def _trim_to_structured_region(text: str) -> str:
    """Cut leading/trailing prose around the outermost bracketed region."""
    start = None
    for i, ch in enumerate(text):
        if ch in "{[":
            start = i
            break
    if start is None:
        return text.strip()
    depth = 0
    in_string = False
    escape = False
    last_balanced = None
    for i in range(start, len(text)):
        ch = text[i]
        if in_string:
            if escape:
                escape = False
            elif ch == "\\":
                escape = True
            elif ch == '"':
                in_string = False
            continue
        if ch == '"':
            in_string = True
        elif ch in "{[":
            depth += 1
        elif ch in "}]":
            depth -= 1
            if depth == 0:
                last_balanced = i
    if last_balanced is None:
        return text.strip()
    return text[start : last_balanced + 1]


def sanitize_output(raw: str) -> str:
    """Normalize raw model output down to its structured tool-call region.

    Applied in order: drop <think> blocks, unwrap <tool_call> wrappers
    (joining multiple with newlines), strip code fences, then trim prose
    around the outermost bracketed region.  Idempotent; worst case returns
    the trimmed input.
    """
    text = _THINK_RE.sub("", raw)
    wrapped = _TOOL_CALL_RE.findall(text)
    if wrapped:
        text = "\n".join(part.strip() for part in wrapped)
    fenced = _FENCE_RE.findall(text)
    if fenced:
        text = "\n".join(part.strip() for part in fenced)
    return _trim_to_structured_region(text)


def _loads_tolerant(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        pass
    try:
        value = ast.literal_eval(text)
    except (ValueError, SyntaxError):
        value = _loads_linewise(text)
        if value is None:
            raise ToolCallParseError("no structured object recoverable from output")
    if isinstance(value, (dict, list)):
        return value
    raise ToolCallParseError("structured region is not an object or list")


def _loads_linewise(text: str) -> list[Any] | None:
    """Parse one JSON object per line, as produced by stacked wrappers."""
    lines = [line for line in text.splitlines() if line.strip()]
    if len(lines) < 2:
        return None
    out = []
    for line in lines:
        try:
            out.append(json.loads(line))
        except json.JSONDecodeError:
            return None
    return out


def _normalize_call(entry: Any, warnings: list[str] | None) -> ToolCall:
    if isinstance(entry, dict) and isinstance(entry.get("function"), dict):
        outer_id = entry.get("id")
        inner = dict(entry["function"])
        if "id" not in inner and isinstance(outer_id, str):
            inner["id"] = outer_id
        entry = inner
    if not isinstance(entry, dict):
        raise ToolCallParseError(f"tool call entry is not an object: {entry!r}")
    name = entry.get("name")
    if not isinstance(name, str) or not name:
        raise ToolCallParseError("tool call entry lacks a name")
    arguments = entry.get("arguments")
    if arguments is None:
        if warnings is not None:
            warnings.append(f"call {name!r} missing arguments; defaulted to {{}}")
        arguments = {}
    elif isinstance(arguments, str):
        try:
            arguments = json.loads(arguments)
        except json.JSONDecodeError:
            raise ToolCallParseError(f"call {name!r} has unparseable string arguments")
    if not isinstance(arguments, dict):
        raise ToolCallParseError(f"call {name!r} arguments are not a map")
    call_id = entry.get("id")
    if call_id is not None and not isinstance(call_id, str):
        call_id = str(call_id)
    return ToolCall(name=name, arguments=arguments, id=call_id)


def parse_tool_calls(raw: str, warnings: list[str] | None = None) -> list[ToolCall]:
    """Sanitize then parse raw output into structured tool calls.

    Accepts a single call object, a list of calls, and the common
    {"thought": ..., "tool_calls": [...]} envelope.  Raises
    ToolCallParseError when nothing structured is recoverable.
    """
    value = _loads_tolerant(sanitize_output(raw))
    if isinstance(value, dict) and isinstance(value.get("tool_calls"), list):
        value = value["tool_calls"]
    if isinstance(value, dict):
        value = [value]
    return [_normalize_call(entry, warnings) for entry in value]


# ---------------------------------------------------------------------------
# metrics


@dataclass
class MatchCounts:
    matched: int = 0
    predicted: int = 0
    gold: int = 0

    def __post_init__(self) -> None:
        if min(self.matched, self.predicted, self.gold) < 0:
            raise ValueError("counts must be non-negative")
        if self.matched > min(self.predicted, self.gold):
            raise ValueError("matched cannot exceed predicted or gold")

    def add(self, other: "MatchCounts") -> "MatchCounts":
        return MatchCounts(
            matched=self.matched + other.matched,
            predicted=self.predicted + other.predicted,
            gold=self.gold + other.gold,
        )


def match_calls(pred: list[ToolCall], gold: list[ToolCall]) -> MatchCounts:
    """Multiset matching on tool names only (API-level scoring)."""
    pred_names = Counter(c.name for c in pred)
    gold_names = Counter(c.name for c in gold)
    matched = sum(min(n, gold_names[name]) for name, n in pred_names.items())
    return MatchCounts(matched=matched, predicted=len(pred), gold=len(gold))


def match_calls_exact(pred: list[ToolCall], gold: list[ToolCall]) -> MatchCounts:
    """Stricter non-standard variant: name plus deep-equal arguments."""
    def key(c: ToolCall) -> str:
        return dumps_compact({"name": c.name, "arguments": canon_value(c.arguments)})

    pred_keys = Counter(key(c) for c in pred)
    gold_keys = Counter(key(c) for c in gold)
    matched = sum(min(n, gold_keys[k]) for k, n in pred_keys.items())
    return MatchCounts(matched=matched, predicted=len(pred), gold=len(gold))


def _ratios(pooled: MatchCounts) -> tuple[float, float, float]:
    if pooled.predicted == 0 and pooled.gold == 0:
        return 1.0, 1.0, 1.0
    p = pooled.matched / pooled.predicted if pooled.predicted else 0.0
    r = pooled.matched / pooled.gold if pooled.gold else 0.0
    f1 = 2 * p * r / (p + r) if p + r > 0 else 0.0
    return p, r, f1


@dataclass
class ExampleCounts:
    example_id: str
    counts: MatchCounts
    parse_error: str | None = None
    unknown_tools: list[str] = field(default_factory=list)


@dataclass
class EvalReport:
    pooled: MatchCounts
    p_api: float
    r_api: float
    f1_api: float
    per_example: list[ExampleCounts] = field(default_factory=list)
    exact_pooled: MatchCounts | None = None

    def to_obj(self) -> dict[str, Any]:
        obj: dict[str, Any] = {
            "pooled": {"matched": self.pooled.matched, "predicted": self.pooled.predicted, "gold": self.pooled.gold},
            "p_api": self.p_api,
            "r_api": self.r_api,
            "f1_api": self.f1_api,
            "per_example": [
                {
                    "example_id": e.example_id,
                    "matched": e.counts.matched,
                    "predicted": e.counts.predicted,
                    "gold": e.counts.gold,
                    **({"parse_error": e.parse_error} if e.parse_error else {}),
                    **({"unknown_tools": e.unknown_tools} if e.unknown_tools else {}),
                }
                for e in self.per_example
            ],
        }
        if self.exact_pooled is not None:
            ep, er, ef1 = _ratios(self.exact_pooled)
            obj["exact_full_call"] = {"p": ep, "r": er, "f1": ef1, "note": "name+arguments deep equality; non-standard extra column"}
        return obj

    def to_markdown(self) -> str:
        lines = [
            "# Tool-call evaluation report",
            "",
            f"- examples: {len(self.per_example)}",
            f"- pooled counts: matched={self.pooled.matched} predicted={self.pooled.predicted} gold={self.pooled.gold}",
            f"- P_api: {self.p_api:.3f}",
            f"- R_api: {self.r_api:.3f}",
            f"- F1_api: {self.f1_api:.3f}",
        ]
        failures = [e for e in self.per_example if e.parse_error]
        if failures:
            lines += ["", "## Parse failures", ""]
            lines += [f"- {e.example_id}: {e.parse_error}" for e in failures]
        unknown = [e for e in self.per_example if e.unknown_tools]
        if unknown:
            lines += ["", "## Undeclared tool names", ""]
            lines += [f"- {e.example_id}: {', '.join(e.unknown_tools)}" for e in unknown]
        return "\n".join(lines) + "\n"


def compute_metrics(examples: Iterable[MatchCounts | ExampleCounts]) -> EvalReport:
    """Micro-averaged pooling: sum counts across examples, then divide."""
    per_example: list[ExampleCounts] = []
    pooled = MatchCounts()
    for i, item in enumerate(examples):
        if isinstance(item, MatchCounts):
            item = ExampleCounts(example_id=str(i), counts=item)
        per_example.append(item)
        pooled = pooled.add(item.counts)
    p, r, f1 = _ratios(pooled)
    return EvalReport(pooled=pooled, p_api=p, r_api=r, f1_api=f1, per_example=per_example)


def _load_keyed_jsonl(path: str, value_key: str | None = None) -> dict[str, Any]:
    out: dict[str, Any] = {}
    for line in iter_jsonl(path):
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: invalid JSONL line: {exc}") from exc
        eid = obj.get("example_id")
        if not isinstance(eid, str) or not eid:
            raise InputError(f"{path}: record without example_id")
        if eid in out:
            raise InputError(f"{path}: duplicate example_id {eid!r}")
        out[eid] = obj if value_key is None else obj.get(value_key)
    return out


def evaluate_corpus(pred_path: str, gold_path: str, tools_path: str | None = None) -> EvalReport:
    """Join prediction and gold files on example_id, parse, match, and pool.

    Unparseable predictions contribute zero predicted calls rather than
    aborting the run.
    """
    gold = _load_keyed_jsonl(gold_path)
    preds = _load_keyed_jsonl(pred_path)
    missing = sorted(set(gold) - set(preds))
    extra = sorted(set(preds) - set(gold))
    if missing or extra:
        raise InputError(f"example_id mismatch: missing={missing[:5]} extra={extra[:5]}")

    declared: set[str] | None = None
    if tools_path:
        declared = set()
        for line in iter_jsonl(tools_path):
            obj = json.loads(line)
            name = obj.get("name")
            if isinstance(name, str):
                declared.add(name)

    per_example: list[ExampleCounts] = []
    exact_pooled = MatchCounts()
    for eid in sorted(gold):
        gold_calls = [
            ToolCall(name=c.get("name", ""), arguments=c.get("arguments") or {})
            for c in gold[eid].get("tool_calls", [])
        ]
        raw = preds[eid].get("raw_output", "")
        parse_error = None
        try:
            pred_calls = parse_tool_calls(raw if isinstance(raw, str) else dumps_compact(raw))
        except ToolCallParseError as exc:
            pred_calls = []
            parse_error = str(exc)
        counts = match_calls(pred_calls, gold_calls)
        exact_pooled = exact_pooled.add(match_calls_exact(pred_calls, gold_calls))
        unknown = sorted({c.name for c in pred_calls if declared is not None and c.name not in declared})
        per_example.append(ExampleCounts(example_id=eid, counts=counts, parse_error=parse_error, unknown_tools=unknown))

    report = compute_metrics(per_example)
    report.exact_pooled = exact_pooled
    return report
