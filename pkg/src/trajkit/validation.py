"""Rule-based structural checks and the streaming rule filter.

Checks operate on raw record objects (parsed JSON) so they can report
violations that a strict parse would reject outright.  Typed trajectories
are accepted too and converted back to their raw form first.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Iterable, Iterator

from .render import SIMPLE, TemplateSpec
from .schema import PARAM_TYPES, ROLES, UnifiedTrajectory, _unwrap_function_envelope

ERROR = "ERROR"
WARN = "WARN"
INFO = "INFO"

_SEVERITY_RANK = {INFO: 0, WARN: 1, ERROR: 2}

CODES = (
    "MISSING_FIELD",
    "WRONG_TYPE",
    "UNKNOWN_ROLE",
    "EMPTY_CONVERSATION",
    "BAD_FIRST_ROLE",
    "DANGLING_TOOL_RESULT",
    "ORPHAN_TOOL_CALL",
    "DUPLICATE_CALL_ID",
    "UNKNOWN_TOOL_NAME",
    "MISSING_REQUIRED_ARG",
    "UNKNOWN_ARG_NAME",
    "ARG_TYPE_MISMATCH",
    "EMPTY_ASSISTANT",
    "MISSING_FUNCTION_CALL",
    "NON_ASSISTANT_FINAL",
    "ILLEGAL_ROLE_SEQUENCE",
    "OBSERVATION_REPLICATED",
    "MISSING_ID",
    "SYNTAX_ERROR",  # synthetic, emitted when a stream record fails to parse
)

DEFAULT_SEVERITY = {code: ERROR for code in CODES}
DEFAULT_SEVERITY.update(
    {
        "NON_ASSISTANT_FINAL": WARN,
        "OBSERVATION_REPLICATED": WARN,
        "MISSING_ID": WARN,
    }
)


@dataclass
class Finding:
    code: str
    severity: str
    path: str
    message: str

    def to_obj(self) -> dict[str, str]:
        return {"code": self.code, "severity": self.severity, "path": self.path, "message": self.message}


def finding(code: str, path: str, message: str) -> Finding:
    return Finding(code=code, severity=DEFAULT_SEVERITY[code], path=path, message=message)


@dataclass
class ValidationPolicy:
    enabled: dict[str, bool] = field(default_factory=dict)
    severity_overrides: dict[str, str] = field(default_factory=dict)
    fail_on: str = ERROR
    function_calling_required: bool = False

    def __post_init__(self) -> None:
        if self.fail_on not in (ERROR, WARN):
            raise ValueError(f"fail_on must be ERROR or WARN, got {self.fail_on!r}")
        for code, sev in self.severity_overrides.items():
            # only downgrades are allowed: a policy may relax, never tighten
            if _SEVERITY_RANK.get(sev, 99) > _SEVERITY_RANK[DEFAULT_SEVERITY.get(code, ERROR)]:
                raise ValueError(f"severity override for {code} may only lower severity")

    def is_enabled(self, code: str) -> bool:
        return self.enabled.get(code, True)

    def effective_severity(self, code: str) -> str:
        return self.severity_overrides.get(code, DEFAULT_SEVERITY.get(code, ERROR))

    @classmethod
    def from_obj(cls, obj: dict[str, Any]) -> "ValidationPolicy":
        return cls(
            enabled=dict(obj.get("enabled", {})),
            severity_overrides=dict(obj.get("severity_overrides", {})),
            fail_on=obj.get("fail_on", ERROR),
            function_calling_required=bool(obj.get("function_calling_required", False)),
        )

    @classmethod
    def from_file(cls, path: str) -> "ValidationPolicy":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_obj(json.load(fh))


def _as_raw(record: Any) -> Any:
    if isinstance(record, UnifiedTrajectory):
        return record.to_obj()
    return record


def _is_empty(content: Any) -> bool:
    return content is None or content == ""


def _message_calls(msg: dict[str, Any]) -> list[Any]:
    calls = msg.get("tool_calls")
    return calls if isinstance(calls, list) else []


def _call_fields(entry: Any) -> tuple[Any, Any, Any]:
    """(name, arguments, id) of a possibly-enveloped raw tool call."""
    payload, outer_id = _unwrap_function_envelope(entry)
    if not isinstance(payload, dict):
        return None, None, None
    args = payload.get("arguments")
    if isinstance(args, str):
        try:
            args = json.loads(args)
        except json.JSONDecodeError:
            pass
    return payload.get("name"), args, payload.get("id", outer_id)


def check_format(record: Any) -> list[Finding]:
    """Structural checks: fields, types, roles, and call/result linkage."""
    obj = _as_raw(record)
    if not isinstance(obj, dict):
        return [finding("WRONG_TYPE", "$", "record must be an object")]
    out: list[Finding] = []

    tid = obj.get("unique_trajectory_id")
    if not isinstance(tid, str) or not tid:
        out.append(finding("MISSING_ID", "$.unique_trajectory_id", "missing unique_trajectory_id"))

    tools = obj.get("tools", [])
    if not isinstance(tools, list):
        out.append(finding("WRONG_TYPE", "$.tools", "tools must be a list"))
        tools = []
    seen_tools: set[str] = set()
    for i, entry in enumerate(tools):
        path = f"$.tools[{i}]"
        payload, _ = _unwrap_function_envelope(entry)
        if not isinstance(payload, dict):
            out.append(finding("WRONG_TYPE", path, "tool spec must be an object"))
            continue
        name = payload.get("name")
        if not isinstance(name, str) or not name:
            out.append(finding("MISSING_FIELD", f"{path}.name", "tool name missing or empty"))
        elif name in seen_tools:
            out.append(finding("DUPLICATE_CALL_ID", f"{path}.name", f"duplicate tool name {name!r}"))
        else:
            seen_tools.add(name)
        params = payload.get("parameters", {})
        if not isinstance(params, dict):
            out.append(finding("WRONG_TYPE", f"{path}.parameters", "parameters must be an object"))
            continue
        props = params.get("properties")
        if props is None:
            continue
        if not isinstance(props, dict):
            out.append(finding("WRONG_TYPE", f"{path}.parameters.properties", "properties must be an object"))
            continue
        for pname, pspec in props.items():
            ptype = pspec.get("type") if isinstance(pspec, dict) else None
            if ptype is not None and ptype not in PARAM_TYPES:
                out.append(
                    finding(
                        "WRONG_TYPE",
                        f"{path}.parameters.properties.{pname}.type",
                        f"unknown parameter type {ptype!r}",
                    )
                )
        required = params.get("required", [])
        if isinstance(required, list):
            for j, req in enumerate(required):
                if req not in props:
                    out.append(
                        finding(
                            "MISSING_FIELD",
                            f"{path}.parameters.required[{j}]",
                            f"required parameter {req!r} is not declared",
                        )
                    )

    conv = obj.get("conversation")
    if conv is None:
        out.append(finding("MISSING_FIELD", "$.conversation", "missing conversation"))
        return out
    if not isinstance(conv, list):
        out.append(finding("WRONG_TYPE", "$.conversation", "conversation must be a list"))
        return out
    if not conv:
        out.append(finding("EMPTY_CONVERSATION", "$.conversation", "conversation is empty"))
        return out

    emitted: set[str] = set()
    consumed: set[str] = set()
    for i, msg in enumerate(conv):
        path = f"$.conversation[{i}]"
        if not isinstance(msg, dict):
            out.append(finding("WRONG_TYPE", path, "message must be an object"))
            continue
        role = msg.get("role")
        if not isinstance(role, str):
            out.append(finding("MISSING_FIELD", f"{path}.role", "missing role"))
            continue
        if role not in ROLES:
            out.append(finding("UNKNOWN_ROLE", f"{path}.role", f"unknown role {role!r}"))
            continue
        if i == 0 and role not in ("system", "user"):
            out.append(finding("BAD_FIRST_ROLE", f"{path}.role", f"first message role must be system or user, got {role!r}"))

        calls = _message_calls(msg)
        if calls and role != "assistant":
            out.append(finding("ORPHAN_TOOL_CALL", f"{path}.tool_calls", f"tool_calls on {role!r} message"))

        if _is_empty(msg.get("content")) and not (role == "assistant" and calls):
            out.append(finding("MISSING_FIELD", f"{path}.content", "content missing or empty"))

        if role == "assistant":
            for j, entry in enumerate(calls):
                cpath = f"{path}.tool_calls[{j}]"
                cname, cargs, cid = _call_fields(entry)
                if not isinstance(cname, str) or not cname:
                    out.append(finding("MISSING_FIELD", f"{cpath}.name", "tool call name missing"))
                if cargs is not None and not isinstance(cargs, dict):
                    out.append(finding("WRONG_TYPE", f"{cpath}.arguments", "arguments must be a map"))
                if isinstance(cid, str) and cid:
                    if cid in emitted:
                        out.append(finding("DUPLICATE_CALL_ID", f"{cpath}.id", f"duplicate tool call id {cid!r}"))
                    else:
                        emitted.add(cid)
        elif role == "tool":
            if not isinstance(msg.get("name"), str) or not msg.get("name"):
                out.append(finding("MISSING_FIELD", f"{path}.name", "tool message missing tool name"))
            cid = msg.get("tool_call_id")
            if not isinstance(cid, str) or not cid:
                out.append(finding("MISSING_FIELD", f"{path}.tool_call_id", "tool message missing tool_call_id"))
            elif cid not in emitted or cid in consumed:
                out.append(
                    finding(
                        "DANGLING_TOOL_RESULT",
                        f"{path}.tool_call_id",
                        f"tool_call_id {cid!r} has no unanswered matching call",
                    )
                )
            else:
                consumed.add(cid)
    return out


def check_template_fit(record: Any, tpl: TemplateSpec = SIMPLE) -> list[Finding]:
    """Verify the role sequence is renderable under the template."""
    obj = _as_raw(record)
    if not isinstance(obj, dict):
        return []
    conv = obj.get("conversation")
    if not isinstance(conv, list) or not conv:
        return []
    out: list[Finding] = []
    prev_ok_for_tool = False  # previous message was assistant-with-calls or a sibling tool result
    for i, msg in enumerate(conv):
        if not isinstance(msg, dict):
            continue
        role = msg.get("role")
        path = f"$.conversation[{i}]"
        if role == "system" and i != 0:
            out.append(finding("ILLEGAL_ROLE_SEQUENCE", path, "system message allowed only at position 0"))
        if role == "tool" and not prev_ok_for_tool:
            out.append(
                finding(
                    "ILLEGAL_ROLE_SEQUENCE",
                    path,
                    "tool message must follow an assistant message with tool calls",
                )
            )
        if role == "assistant":
            prev_ok_for_tool = bool(_message_calls(msg))
        elif role == "tool":
            prev_ok_for_tool = prev_ok_for_tool or False
        else:
            prev_ok_for_tool = False

    last = conv[-1]
    if not isinstance(last, dict) or last.get("role") != "assistant":
        out.append(finding("NON_ASSISTANT_FINAL", f"$.conversation[{len(conv) - 1}]", "conversation does not end on an assistant message"))

    tools = obj.get("tools")
    has_tools = isinstance(tools, list) and len(tools) > 0
    if has_tools and tpl.tool_placement == "system_suffix":
        first = conv[0] if isinstance(conv[0], dict) else {}
        if first.get("role") != "system" and not obj.get("task_instruction"):
            out.append(
                finding(
                    "MISSING_FIELD",
                    "$.task_instruction",
                    "no system message and empty task_instruction: nowhere to inject tools",
                )
            )
    return out


def _type_matches(type_name: str, value: Any) -> bool:
    if type_name == "string":
        return isinstance(value, str)
    if type_name == "integer":
        return isinstance(value, int) and not isinstance(value, bool)
    if type_name == "number":
        return isinstance(value, (int, float)) and not isinstance(value, bool)
    if type_name == "boolean":
        return isinstance(value, bool)
    if type_name == "object":
        return isinstance(value, dict)
    if type_name == "array":
        return isinstance(value, list)
    if type_name == "null":
        return value is None
    return True  # unknown declared type: reported by check_format, not here


def check_tool_consistency(record: Any, function_calling_required: bool = False) -> list[Finding]:
    """Per-call checks against the declared tool specs.

    Argument type checking is shape-based and non-coercing: the string "1"
    does not satisfy an integer parameter.
    """
    obj = _as_raw(record)
    if not isinstance(obj, dict):
        return []
    conv = obj.get("conversation")
    if not isinstance(conv, list):
        return []

    specs: dict[str, tuple[dict[str, Any], list[str]]] = {}
    tools = obj.get("tools", [])
    if isinstance(tools, list):
        for entry in tools:
            payload, _ = _unwrap_function_envelope(entry)
            if not isinstance(payload, dict):
                continue
            name = payload.get("name")
            if not isinstance(name, str):
                continue
            params = payload.get("parameters", {})
            props = params.get("properties", {}) if isinstance(params, dict) else {}
            required = params.get("required", []) if isinstance(params, dict) else []
            if not isinstance(props, dict):
                props = {}
            if not isinstance(required, list):
                required = []
            specs[name] = (props, required)

    out: list[Finding] = []
    any_call = False
    for i, msg in enumerate(conv):
        if not isinstance(msg, dict) or msg.get("role") != "assistant":
            continue
        path = f"$.conversation[{i}]"
        calls = _message_calls(msg)
        if not calls and _is_empty(msg.get("content")):
            out.append(finding("EMPTY_ASSISTANT", path, "assistant message with no content and no tool calls"))
        for j, entry in enumerate(calls):
            any_call = True
            cpath = f"{path}.tool_calls[{j}]"
            cname, cargs, _ = _call_fields(entry)
            if not isinstance(cname, str) or not cname:
                continue  # reported by check_format
            if cname not in specs:
                out.append(finding("UNKNOWN_TOOL_NAME", f"{cpath}.name", f"call to undeclared tool {cname!r}"))
                continue
            props, required = specs[cname]
            args = cargs if isinstance(cargs, dict) else {}
            for req in required:
                if req not in args:
                    out.append(
                        finding("MISSING_REQUIRED_ARG", f"{cpath}.arguments", f"missing required argument {req!r}")
                    )
            for aname, avalue in args.items():
                if aname not in props:
                    out.append(finding("UNKNOWN_ARG_NAME", f"{cpath}.arguments.{aname}", f"argument {aname!r} not declared"))
                    continue
                pspec = props[aname]
                ptype = pspec.get("type") if isinstance(pspec, dict) else None
                if isinstance(ptype, str) and ptype in PARAM_TYPES and not _type_matches(ptype, avalue):
                    out.append(
                        finding(
                            "ARG_TYPE_MISMATCH",
                            f"{cpath}.arguments.{aname}",
                            f"value {avalue!r} does not match declared type {ptype!r}",
                        )
                    )

    if function_calling_required and not any_call:
        out.append(finding("MISSING_FUNCTION_CALL", "$.conversation", "no tool call in a function-calling-required record"))
    return out


def run_checks(record: Any, tpl: TemplateSpec = SIMPLE, policy: ValidationPolicy | None = None) -> list[Finding]:
    """All rule checks, with policy enablement and severity overrides applied."""
    fcr = policy.function_calling_required if policy else False
    obj = _as_raw(record)
    if isinstance(obj, dict) and obj.get("function_calling_required"):
        fcr = True
    findings = check_format(obj) + check_template_fit(obj, tpl) + check_tool_consistency(obj, fcr)
    if policy is None:
        return findings
    out = []
    for f in findings:
        if not policy.is_enabled(f.code):
            continue
        sev = policy.effective_severity(f.code)
        out.append(Finding(code=f.code, severity=sev, path=f.path, message=f.message))
    return out


@dataclass
class FilterResult:
    record: Any  # raw object, or the original line when unparseable
    raw_line: str | None
    findings: list[Finding]
    verdict: str  # keep | remove
    trajectory_id: str


def severity_at_least(findings: Iterable[Finding], threshold: str) -> bool:
    rank = _SEVERITY_RANK[threshold]
    return any(_SEVERITY_RANK[f.severity] >= rank for f in findings)


def apply_rule_filter(
    records: Iterable[str | dict],
    policy: ValidationPolicy | None = None,
    tpl: TemplateSpec = SIMPLE,
) -> Iterator[FilterResult]:
    """Stream records through the rule checks; memory stays bounded by one record."""
    policy = policy or ValidationPolicy()
    for item in records:
        raw_line = item if isinstance(item, str) else None
        if isinstance(item, str):
            try:
                obj = json.loads(item)
            except json.JSONDecodeError as exc:
                f = finding("SYNTAX_ERROR", "$", f"record is not valid JSON: {exc}")
                yield FilterResult(record=item, raw_line=item, findings=[f], verdict="remove", trajectory_id="")
                continue
        else:
            obj = item
        findings = run_checks(obj, tpl, policy)
        verdict = "remove" if severity_at_least(findings, policy.fail_on) else "keep"
        tid = obj.get("unique_trajectory_id", "") if isinstance(obj, dict) else ""
        yield FilterResult(record=obj, raw_line=raw_line, findings=findings, verdict=verdict, trajectory_id=tid if isinstance(tid, str) else "")
