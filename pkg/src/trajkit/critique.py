"""Exemplar-augmented critique scoring with a pluggable evaluator.

The evaluator is an abstract chat-completion endpoint.  A deterministic
stub is provided so corpus runs work offline; the HTTP client speaks the
de-facto chat-completions wire shape.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
import time
from dataclasses import dataclass, field
from typing import Any, Iterable

from .errors import CritiqueParseError, EvaluatorUnavailableError, PromptTooLongError
from .render import SIMPLE, render_chat
from .schema import UnifiedTrajectory, dumps_compact
from .tooleval import sanitize_output
from .validation import ERROR, Finding, severity_at_least

DIMENSIONS = ("correctness", "hallucination_freedom", "tool_use", "overall")
DEFAULT_THRESHOLDS = {dim: 4 for dim in DIMENSIONS}
TRUNCATION_MARKER = "...[truncated]"

_RUBRIC_TEXT = """You are reviewing one agent trajectory for training-data quality.
Score each dimension on a 1-5 scale where 5 is best:
- correctness: the assistant's reasoning and answers are right for the task.
- hallucination_freedom: no invented tools, facts, or results.
- tool_use: tool calls are appropriate, well-formed, and well-argued.
- overall: overall response quality of the trajectory.
"""

_OUTPUT_INSTRUCTION = (
    "Respond with a single JSON object: "
    '{"correctness": 1-5, "hallucination_freedom": 1-5, "tool_use": 1-5, '
    '"overall": 1-5, "rationale": "...", "verdict": "keep" or "remove"}.'
)


@dataclass
class RubricScores:
    correctness: int
    hallucination_freedom: int
    tool_use: int
    overall: int

    def __post_init__(self) -> None:
        for dim in DIMENSIONS:
            value = getattr(self, dim)
            if not 1 <= value <= 5:
                raise ValueError(f"{dim} must be in [1,5], got {value}")

    def as_dict(self) -> dict[str, int]:
        return {dim: getattr(self, dim) for dim in DIMENSIONS}


@dataclass
class CritiqueResult:
    scores: RubricScores
    rationale: str
    verdict: str  # keep | remove
    evaluator_id: str
    cached: bool = False
    warnings: list[str] = field(default_factory=list)

    def to_obj(self) -> dict[str, Any]:
        return {
            "scores": self.scores.as_dict(),
            "rationale": self.rationale,
            "verdict": self.verdict,
            "evaluator_id": self.evaluator_id,
            "cached": self.cached,
            "warnings": list(self.warnings),
        }


@dataclass
class Exemplar:
    trajectory_excerpt: str
    scores: RubricScores
    critique_text: str


@dataclass
class EvaluatorConfig:
    endpoint: str = ""
    model: str = ""
    auth_env: str = "TRAJKIT_EVAL_TOKEN"
    temperature: float = 0.0
    timeout: float = 30.0
    max_retries: int = 3
    backoff_base: float = 0.5
    concurrency: int = 4
    cache_dir: str | None = None

    def __post_init__(self) -> None:
        if self.concurrency < 1:
            raise ValueError("concurrency must be >= 1")

    @classmethod
    def from_file(cls, path: str) -> "EvaluatorConfig":
        with open(path, "r", encoding="utf-8") as fh:
            return cls(**json.load(fh))


def scores_to_verdict(scores: RubricScores, thresholds: dict[str, int] | None = None) -> str:
    thresholds = thresholds or DEFAULT_THRESHOLDS
    ok = all(getattr(scores, dim) >= thresholds.get(dim, 4) for dim in DIMENSIONS)
    return "keep" if ok else "remove"


def build_critique_prompt(
    t: UnifiedTrajectory,
    exemplars: Iterable[Exemplar] = (),
    rubric_version: str = "v1",
    char_budget: int | None = None,
) -> str:
    """Deterministic prompt: rubric + exemplars + rendered candidate + format ask.

    When a character budget is set, the candidate excerpt is tail-truncated
    with an explicit marker; if even the fixed parts overflow the budget,
    PromptTooLongError is raised.
    """
    parts = [f"## Trajectory quality rubric ({rubric_version})", "", _RUBRIC_TEXT]
    for i, ex in enumerate(exemplars, start=1):
        parts += [
            f"### Exemplar {i}",
            ex.trajectory_excerpt,
            f"Scores: {dumps_compact(ex.scores.as_dict())}",
            f"Critique: {ex.critique_text}",
            "",
        ]
    excerpt = render_chat(t, SIMPLE).text
    head = "\n".join(parts) + "\n### Candidate trajectory\n"
    tail = "\n" + _OUTPUT_INSTRUCTION
    if char_budget is not None:
        fixed = len(head) + len(tail)
        room = char_budget - fixed
        if len(excerpt) > room:
            if room <= len(TRUNCATION_MARKER):
                raise PromptTooLongError(
                    f"prompt fixed parts ({fixed} chars) leave no room inside budget {char_budget}"
                )
            excerpt = excerpt[: room - len(TRUNCATION_MARKER)] + TRUNCATION_MARKER
    return head + excerpt + tail


def parse_critique_response(text: str, thresholds: dict[str, int] | None = None) -> CritiqueResult:
    """Extract the structured critique object, tolerating fences and tags."""
    cleaned = sanitize_output(text)
    try:
        obj = json.loads(cleaned)
    except json.JSONDecodeError as exc:
        raise CritiqueParseError(f"no structured critique object recoverable: {exc}") from exc
    if not isinstance(obj, dict):
        raise CritiqueParseError("critique output is not an object")

    warnings: list[str] = []
    values: dict[str, int] = {}
    for dim in DIMENSIONS:
        raw = obj.get(dim)
        if raw is None and dim == "hallucination_freedom":
            raw = obj.get("hallucination")
        if not isinstance(raw, (int, float)) or isinstance(raw, bool):
            raise CritiqueParseError(f"missing or non-numeric score for {dim}")
        value = int(raw)
        if value < 1 or value > 5:
            warnings.append(f"{dim} score {value} clamped to [1,5]")
            value = min(5, max(1, value))
        values[dim] = value
    scores = RubricScores(**values)

    verdict = obj.get("verdict")
    recomputed = scores_to_verdict(scores, thresholds)
    if verdict not in ("keep", "remove"):
        verdict = recomputed
    elif verdict != recomputed:
        warnings.append(f"evaluator verdict {verdict!r} inconsistent with scores; recomputed to {recomputed!r}")
        verdict = recomputed

    rationale = obj.get("rationale", "")
    if not isinstance(rationale, str):
        rationale = str(rationale)
    return CritiqueResult(scores=scores, rationale=rationale, verdict=verdict, evaluator_id="", warnings=warnings)


# ---------------------------------------------------------------------------
# evaluators


class StubEvaluator:
    """Offline deterministic evaluator keyed off the record's rule findings.

    Clean records score 5 everywhere; an ERROR finding drops the dimension
    matching its class (and overall) to 2.
    """

    evaluator_id = "stub"

    _HALLUCINATION_CODES = {"UNKNOWN_TOOL_NAME"}
    _TOOL_USE_CODES = {"MISSING_REQUIRED_ARG", "UNKNOWN_ARG_NAME", "ARG_TYPE_MISMATCH", "MISSING_FUNCTION_CALL"}

    def complete(self, prompt: str, context: dict[str, Any] | None = None) -> str:
        findings: list[Finding] = (context or {}).get("findings") or []
        errors = [f for f in findings if f.severity == ERROR]
        scores = {dim: 5 for dim in DIMENSIONS}
        notes = []
        for f in errors:
            if f.code in self._HALLUCINATION_CODES:
                scores["hallucination_freedom"] = 2
            elif f.code in self._TOOL_USE_CODES:
                scores["tool_use"] = 2
            else:
                scores["correctness"] = 2
            notes.append(f.code)
        if errors:
            scores["overall"] = 2
        payload = dict(scores)
        payload["rationale"] = "clean record" if not errors else "rule findings: " + ", ".join(sorted(set(notes)))
        payload["verdict"] = "keep" if not errors else "remove"
        return dumps_compact(payload)


class HttpEvaluator:
    """Chat-completions client: POST {model, temperature, messages} -> choices."""

    def __init__(self, cfg: EvaluatorConfig):
        self.cfg = cfg
        self.evaluator_id = cfg.model or cfg.endpoint

    def complete(self, prompt: str, context: dict[str, Any] | None = None) -> str:
        import requests

        headers = {"Content-Type": "application/json"}
        token = os.environ.get(self.cfg.auth_env, "")
        if token:
            headers["Authorization"] = f"Bearer {token}"
        body = {
            "model": self.cfg.model,
            "temperature": self.cfg.temperature,
            "messages": [{"role": "user", "content": prompt}],
        }
        last_error: Exception | None = None
        for attempt in range(self.cfg.max_retries + 1):
            try:
                resp = requests.post(self.cfg.endpoint, json=body, headers=headers, timeout=self.cfg.timeout)
                resp.raise_for_status()
                return resp.json()["choices"][0]["message"]["content"]
            except Exception as exc:  # transport and shape errors both retry
                last_error = exc
                if attempt < self.cfg.max_retries:
                    time.sleep(self.cfg.backoff_base * (2**attempt))
        raise EvaluatorUnavailableError(f"evaluator unreachable after {self.cfg.max_retries + 1} attempts: {last_error}")


def _cache_path(cache_dir: str, key: str) -> str:
    return os.path.join(cache_dir, f"{key}.json")


def _cache_read(cache_dir: str | None, key: str) -> str | None:
    if not cache_dir:
        return None
    path = _cache_path(cache_dir, key)
    if not os.path.exists(path):
        return None
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)["response"]


def _cache_write(cache_dir: str | None, key: str, response: str) -> None:
    if not cache_dir:
        return
    os.makedirs(cache_dir, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=cache_dir, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            json.dump({"response": response}, fh)
        os.replace(tmp, _cache_path(cache_dir, key))
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)


def unscoreable_result(evaluator_id: str, reason: str) -> CritiqueResult:
    return CritiqueResult(
        scores=RubricScores(1, 1, 1, 1),
        rationale=f"UNSCOREABLE: {reason}",
        verdict="remove",
        evaluator_id=evaluator_id,
        warnings=["UNSCOREABLE"],
    )


def critique(
    t: UnifiedTrajectory,
    exemplars: Iterable[Exemplar],
    cfg: EvaluatorConfig,
    evaluator: Any,
    findings: list[Finding] | None = None,
    thresholds: dict[str, int] | None = None,
    rubric_version: str = "v1",
    char_budget: int | None = None,
) -> CritiqueResult:
    """Score one trajectory, with prompt-hash caching and one parse retry."""
    prompt = build_critique_prompt(t, exemplars, rubric_version, char_budget=char_budget)
    key = hashlib.sha256(prompt.encode("utf-8")).hexdigest()
    context = {"findings": findings or []}

    cached = _cache_read(cfg.cache_dir, key)
    if cached is not None:
        result = parse_critique_response(cached, thresholds)
        result.evaluator_id = getattr(evaluator, "evaluator_id", "")
        result.cached = True
        return result

    for attempt in range(2):
        try:
            response = evaluator.complete(prompt, context=context)
        except EvaluatorUnavailableError as exc:
            return unscoreable_result(getattr(evaluator, "evaluator_id", ""), str(exc))
        try:
            result = parse_critique_response(response, thresholds)
        except CritiqueParseError as exc:
            if attempt == 0:
                continue
            return unscoreable_result(getattr(evaluator, "evaluator_id", ""), str(exc))
        result.evaluator_id = getattr(evaluator, "evaluator_id", "")
        _cache_write(cfg.cache_dir, key, response)
        return result
    raise AssertionError("unreachable")


# ---------------------------------------------------------------------------
# combined decision and human-audit arithmetic


@dataclass
class Decision:
    verdict: str
    reasons: list[str]


def decide(
    critique_result: CritiqueResult | None,
    findings: list[Finding],
    fail_on: str = ERROR,
    thresholds: dict[str, int] | None = None,
) -> Decision:
    """keep iff the rule gate passes and every rubric score clears its threshold."""
    thresholds = thresholds or DEFAULT_THRESHOLDS
    reasons: list[str] = []
    if severity_at_least(findings, fail_on):
        codes = sorted({f.code for f in findings if severity_at_least([f], fail_on)})
        reasons.append("rule-gate: " + ", ".join(codes))
    if critique_result is not None:
        for dim in DIMENSIONS:
            threshold = thresholds.get(dim, 4)
            if getattr(critique_result.scores, dim) < threshold:
                reasons.append(f"{dim}<{threshold}")
    return Decision(verdict="keep" if not reasons else "remove", reasons=reasons)


@dataclass
class Agreement:
    matches: int
    total: int

    @property
    def rate(self) -> float:
        return self.matches / self.total if self.total else 0.0

    def percent(self) -> str:
        if not self.total:
            return "n/a"
        return f"{self.rate * 100:.1f}%"


def compute_agreement(pipeline_verdicts: dict[str, str], audit_entries: Iterable[dict[str, Any]]) -> Agreement:
    """Exact agreement rate between pipeline verdicts and human audit labels."""
    matches = 0
    total = 0
    for entry in audit_entries:
        tid = entry.get("trajectory_id")
        human = entry.get("human_verdict")
        if tid not in pipeline_verdicts:
            continue
        total += 1
        if pipeline_verdicts[tid] == human:
            matches += 1
    return Agreement(matches=matches, total=total)
