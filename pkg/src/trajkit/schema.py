"""Trajectory schemas: parsing, canonical serialization, and turn accounting.

Two record shapes are supported: the current message-list format (a
``conversation`` of role-tagged messages with explicit tool calls and tool
results) and the older step-list format (``query`` + ``steps``).  Parsing is
tolerant of the common envelope variants seen in the wild, e.g. tools and
tool calls wrapped in ``{"type": "function", "function": {...}}``.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Any, Iterator

from .errors import RecordSyntaxError, SchemaError

ROLES = ("system", "user", "assistant", "tool")
PARAM_TYPES = {"string", "number", "integer", "boolean", "object", "array", "null"}

SINGLE_TURN = "single_turn"
MULTI_TURN = "multi_turn"


def canon_value(value: Any) -> Any:
    """Recursively sort mapping keys so equal values serialize identically."""
    if isinstance(value, dict):
        return {k: canon_value(value[k]) for k in sorted(value)}
    if isinstance(value, list):
        return [canon_value(v) for v in value]
    return value


def dumps_compact(obj: Any) -> str:
    return json.dumps(obj, separators=(",", ":"), ensure_ascii=False)


# ---------------------------------------------------------------------------
# domain types


@dataclass
class ToolSpec:
    name: str
    description: str = ""
    properties: dict[str, dict[str, Any]] = field(default_factory=dict)
    required: list[str] = field(default_factory=list)

    def to_obj(self) -> dict[str, Any]:
        props: dict[str, Any] = {}
        for pname in sorted(self.properties):
            spec = self.properties[pname]
            entry: dict[str, Any] = {}
            if "type" in spec:
                entry["type"] = spec["type"]
            if "description" in spec:
                entry["description"] = spec["description"]
            for key in sorted(spec):
                if key not in ("type", "description"):
                    entry[key] = canon_value(spec[key])
            props[pname] = entry
        return {
            "name": self.name,
            "description": self.description,
            "parameters": {
                "type": "object",
                "properties": props,
                "required": list(self.required),
            },
        }


@dataclass
class ToolCall:
    name: str
    arguments: dict[str, Any] = field(default_factory=dict)
    id: str | None = None

    def to_obj(self) -> dict[str, Any]:
        obj: dict[str, Any] = {"name": self.name, "arguments": canon_value(self.arguments)}
        if self.id is not None:
            obj["id"] = self.id
        return obj


@dataclass
class Message:
    role: str
    content: Any = ""
    tool_calls: list[ToolCall] = field(default_factory=list)
    name: str | None = None
    tool_call_id: str | None = None
    extra: dict[str, Any] = field(default_factory=dict)

    def to_obj(self) -> dict[str, Any]:
        obj: dict[str, Any] = {"role": self.role, "content": canon_value(self.content)}
        if self.tool_calls:
            obj["tool_calls"] = [c.to_obj() for c in self.tool_calls]
        if self.name is not None:
            obj["name"] = self.name
        if self.tool_call_id is not None:
            obj["tool_call_id"] = self.tool_call_id
        for key in sorted(self.extra):
            obj[key] = canon_value(self.extra[key])
        return obj


@dataclass
class UnifiedTrajectory:
    unique_trajectory_id: str
    task_instruction: str = ""
    tools: list[ToolSpec] = field(default_factory=list)
    conversation: list[Message] = field(default_factory=list)
    extensions: dict[str, Any] = field(default_factory=dict)

    def to_obj(self) -> dict[str, Any]:
        obj: dict[str, Any] = {
            "unique_trajectory_id": self.unique_trajectory_id,
            "task_instruction": self.task_instruction,
            "tools": [t.to_obj() for t in self.tools],
            "conversation": [m.to_obj() for m in self.conversation],
        }
        for key in sorted(self.extensions):
            obj[key] = canon_value(self.extensions[key])
        return obj


@dataclass
class Step:
    thought: str = ""
    tool_calls: list[ToolCall] = field(default_factory=list)
    step_id: int = 1
    next_observation: Any = ""
    user_input: str = ""


@dataclass
class LegacyToolSpec:
    name: str
    description: str = ""
    # flat map: parameter name -> {type, description, required?, ...}
    parameters: dict[str, dict[str, Any]] = field(default_factory=dict)


@dataclass
class LegacyTrajectory:
    unique_trajectory_id: str
    task_instruction: str = ""
    few_shot_examples: list[Any] = field(default_factory=list)
    query: str = ""
    tools: list[LegacyToolSpec] = field(default_factory=list)
    steps: list[Step] = field(default_factory=list)
    extensions: dict[str, Any] = field(default_factory=dict)


@dataclass
class TurnCounts:
    kind: str
    steps: int


# ---------------------------------------------------------------------------
# parsing helpers

KNOWN_TRAJECTORY_KEYS = {"unique_trajectory_id", "task_instruction", "tools", "conversation"}
KNOWN_MESSAGE_KEYS = {"role", "content", "tool_calls", "name", "tool_call_id"}
KNOWN_LEGACY_KEYS = {
    "unique_trajectory_id",
    "task_instruction",
    "few_shot_examples",
    "query",
    "tools",
    "steps",
}


def _load_document(text: str) -> Any:
    if text is None or not text.strip():
        raise RecordSyntaxError("empty record")
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise RecordSyntaxError(f"malformed document: {exc}") from exc


def _unwrap_function_envelope(entry: Any) -> tuple[Any, str | None]:
    """Return (payload, outer id) for a possibly-enveloped tool or call."""
    if isinstance(entry, dict) and isinstance(entry.get("function"), dict):
        outer_id = entry.get("id")
        return entry["function"], outer_id if isinstance(outer_id, str) else None
    return entry, None


def _parse_arguments(value: Any, path: str, strict: bool) -> dict[str, Any]:
    if isinstance(value, str):
        # some corpora carry arguments as a JSON-encoded string
        try:
            value = json.loads(value)
        except json.JSONDecodeError:
            pass
    if isinstance(value, dict):
        return value
    if strict:
        raise SchemaError(path, "arguments must be a map")
    return {}


def _parse_tool_call(entry: Any, path: str, strict: bool) -> ToolCall:
    payload, outer_id = _unwrap_function_envelope(entry)
    if not isinstance(payload, dict):
        if strict:
            raise SchemaError(path, "tool call must be an object")
        return ToolCall(name="", arguments={})
    name = payload.get("name")
    if not isinstance(name, str) or not name:
        if strict:
            raise SchemaError(f"{path}.name", "tool call name must be a non-empty string")
        name = str(name) if name is not None else ""
    if "arguments" not in payload:
        if strict:
            raise SchemaError(f"{path}.arguments", "missing arguments")
        arguments: dict[str, Any] = {}
    else:
        arguments = _parse_arguments(payload["arguments"], f"{path}.arguments", strict)
    call_id = payload.get("id", outer_id)
    if call_id is not None and not isinstance(call_id, str):
        call_id = str(call_id)
    return ToolCall(name=name, arguments=arguments, id=call_id)


def _parse_tool_spec(entry: Any, path: str, strict: bool) -> ToolSpec:
    payload, _ = _unwrap_function_envelope(entry)
    if not isinstance(payload, dict):
        if strict:
            raise SchemaError(path, "tool spec must be an object")
        return ToolSpec(name="")
    name = payload.get("name")
    if not isinstance(name, str) or not name:
        if strict:
            raise SchemaError(f"{path}.name", "tool name must be a non-empty string")
        name = str(name) if name is not None else ""
    description = payload.get("description", "")
    if not isinstance(description, str):
        description = str(description)
    params = payload.get("parameters", {})
    properties: dict[str, dict[str, Any]] = {}
    required: list[str] = []
    if isinstance(params, dict):
        raw_props = params.get("properties")
        if isinstance(raw_props, dict):
            raw_required = params.get("required", [])
            if isinstance(raw_required, list):
                required = [r for r in raw_required if isinstance(r, str)]
            for pname, pspec in raw_props.items():
                properties[pname] = dict(pspec) if isinstance(pspec, dict) else {}
        else:
            # flat parameter map (legacy-style spec embedded in a 2.0 record)
            for pname, pspec in params.items():
                if pname in ("type", "required"):
                    continue
                pspec = dict(pspec) if isinstance(pspec, dict) else {}
                if pspec.pop("required", False):
                    required.append(pname)
                properties[pname] = pspec
    if strict:
        for pname, pspec in properties.items():
            ptype = pspec.get("type")
            if ptype is not None and ptype not in PARAM_TYPES:
                raise SchemaError(
                    f"{path}.parameters.properties.{pname}.type",
                    f"unknown parameter type {ptype!r}",
                )
        for req in required:
            if req not in properties:
                raise SchemaError(
                    f"{path}.parameters.required",
                    f"required parameter {req!r} is not declared",
                )
    return ToolSpec(name=name, description=description, properties=properties, required=sorted(set(required)))


def _is_empty_content(content: Any) -> bool:
    return content is None or content == ""


def _parse_message(entry: Any, path: str, strict: bool) -> Message:
    if not isinstance(entry, dict):
        raise SchemaError(path, "message must be an object")
    role = entry.get("role")
    if not isinstance(role, str):
        if strict:
            raise SchemaError(f"{path}.role", "missing or ill-typed role")
        role = str(role) if role is not None else ""
    if strict and role not in ROLES:
        raise SchemaError(f"{path}.role", f"unknown role {role!r}")

    calls: list[ToolCall] = []
    raw_calls = entry.get("tool_calls")
    if raw_calls is not None:
        if not isinstance(raw_calls, list):
            if strict:
                raise SchemaError(f"{path}.tool_calls", "tool_calls must be a list")
            raw_calls = []
        if strict and raw_calls and role != "assistant":
            raise SchemaError(f"{path}.tool_calls", "tool_calls allowed only on assistant messages")
        calls = [_parse_tool_call(c, f"{path}.tool_calls[{i}]", strict) for i, c in enumerate(raw_calls)]

    content = entry.get("content", "")
    if strict and _is_empty_content(content) and not (role == "assistant" and calls):
        raise SchemaError(f"{path}.content", "content may be empty only for assistant messages with tool calls")
    if content is None:
        content = ""

    name = entry.get("name")
    tool_call_id = entry.get("tool_call_id")
    if strict and role == "tool":
        if not isinstance(name, str) or not name:
            raise SchemaError(f"{path}.name", "tool messages must carry the tool name")
        if not isinstance(tool_call_id, str) or not tool_call_id:
            raise SchemaError(f"{path}.tool_call_id", "tool messages must carry tool_call_id")
    if name is not None and not isinstance(name, str):
        name = str(name)
    if tool_call_id is not None and not isinstance(tool_call_id, str):
        tool_call_id = str(tool_call_id)

    extra = {k: v for k, v in entry.items() if k not in KNOWN_MESSAGE_KEYS}
    return Message(role=role, content=content, tool_calls=calls, name=name, tool_call_id=tool_call_id, extra=extra)


def _content_hash_id(obj: dict[str, Any]) -> str:
    digest = hashlib.sha256(dumps_compact(canon_value(obj)).encode("utf-8")).hexdigest()
    return digest[:16]


def trajectory_from_obj(obj: Any, strict: bool = True) -> UnifiedTrajectory:
    if not isinstance(obj, dict):
        raise SchemaError("$", "record must be an object")

    raw_tools = obj.get("tools", [])
    if not isinstance(raw_tools, list):
        if strict:
            raise SchemaError("$.tools", "tools must be a list")
        raw_tools = []
    tools = [_parse_tool_spec(t, f"$.tools[{i}]", strict) for i, t in enumerate(raw_tools)]
    if strict:
        seen_names: set[str] = set()
        for i, tool in enumerate(tools):
            if tool.name in seen_names:
                raise SchemaError(f"$.tools[{i}].name", f"duplicate tool name {tool.name!r}")
            seen_names.add(tool.name)

    raw_conv = obj.get("conversation")
    if raw_conv is None:
        raise SchemaError("$.conversation", "missing conversation")
    if not isinstance(raw_conv, list):
        raise SchemaError("$.conversation", "conversation must be a list")
    if strict and not raw_conv:
        raise SchemaError("$.conversation", "conversation must be non-empty")
    conversation = [_parse_message(m, f"$.conversation[{i}]", strict) for i, m in enumerate(raw_conv)]

    if strict:
        if conversation and conversation[0].role not in ("system", "user"):
            raise SchemaError("$.conversation[0].role", "first message must be system or user")
        emitted: set[str] = set()
        consumed: set[str] = set()
        for i, msg in enumerate(conversation):
            if msg.role == "assistant":
                for j, call in enumerate(msg.tool_calls):
                    if call.id is not None:
                        if call.id in emitted:
                            raise SchemaError(
                                f"$.conversation[{i}].tool_calls[{j}].id",
                                f"duplicate tool call id {call.id!r}",
                            )
                        emitted.add(call.id)
            elif msg.role == "tool":
                cid = msg.tool_call_id or ""
                if cid not in emitted:
                    raise SchemaError(
                        f"$.conversation[{i}].tool_call_id",
                        f"tool_call_id {cid!r} does not match any earlier tool call",
                    )
                if cid in consumed:
                    raise SchemaError(
                        f"$.conversation[{i}].tool_call_id",
                        f"tool call id {cid!r} already answered",
                    )
                consumed.add(cid)

    task_instruction = obj.get("task_instruction", "")
    if not isinstance(task_instruction, str):
        if strict:
            raise SchemaError("$.task_instruction", "task_instruction must be a string")
        task_instruction = str(task_instruction)

    extensions = {k: v for k, v in obj.items() if k not in KNOWN_TRAJECTORY_KEYS}

    tid = obj.get("unique_trajectory_id")
    if not isinstance(tid, str) or not tid:
        # auto-fill with a content hash; the validator flags MISSING_ID downstream
        tid = _content_hash_id({k: v for k, v in obj.items() if k != "unique_trajectory_id"})

    return UnifiedTrajectory(
        unique_trajectory_id=tid,
        task_instruction=task_instruction,
        tools=tools,
        conversation=conversation,
        extensions=extensions,
    )


def parse_trajectory(text: str, strict: bool = True) -> UnifiedTrajectory:
    """Parse one serialized record into a typed trajectory.

    Raises RecordSyntaxError when the document is malformed and SchemaError
    (with a location path) when it parses but violates the schema.  With
    strict=False, invariant violations are tolerated so that the validator
    can report them as findings instead.
    """
    return trajectory_from_obj(_load_document(text), strict=strict)


def serialize_trajectory(t: UnifiedTrajectory) -> str:
    """Canonical one-line serialization: schema key order, sorted maps, compact."""
    return dumps_compact(t.to_obj())


def classify_turns(t: UnifiedTrajectory) -> TurnCounts:
    steps = sum(1 for m in t.conversation if m.role == "assistant")
    return TurnCounts(kind=MULTI_TURN if steps >= 2 else SINGLE_TURN, steps=steps)


# ---------------------------------------------------------------------------
# legacy (step-list) format


def _parse_step(entry: Any, path: str, strict: bool) -> Step:
    if not isinstance(entry, dict):
        raise SchemaError(path, "step must be an object")
    thought = entry.get("thought", "")
    if not isinstance(thought, str):
        thought = str(thought)
    raw_calls = entry.get("tool_calls", [])
    if not isinstance(raw_calls, list):
        if strict:
            raise SchemaError(f"{path}.tool_calls", "tool_calls must be a list")
        raw_calls = []
    calls = [_parse_tool_call(c, f"{path}.tool_calls[{i}]", strict) for i, c in enumerate(raw_calls)]
    step_id = entry.get("step_id")
    if not isinstance(step_id, int) or isinstance(step_id, bool):
        raise SchemaError(f"{path}.step_id", "step_id must be an integer")
    if strict and not thought and not calls:
        raise SchemaError(path, "step must carry a thought or at least one tool call")
    user_input = entry.get("user_input", "")
    if not isinstance(user_input, str):
        user_input = str(user_input)
    return Step(
        thought=thought,
        tool_calls=calls,
        step_id=step_id,
        next_observation=entry.get("next_observation", ""),
        user_input=user_input,
    )


def _parse_legacy_tool(entry: Any, path: str, strict: bool) -> LegacyToolSpec:
    payload, _ = _unwrap_function_envelope(entry)
    if not isinstance(payload, dict):
        raise SchemaError(path, "tool spec must be an object")
    name = payload.get("name")
    if not isinstance(name, str) or not name:
        if strict:
            raise SchemaError(f"{path}.name", "tool name must be a non-empty string")
        name = str(name) if name is not None else ""
    description = payload.get("description", "")
    if not isinstance(description, str):
        description = str(description)
    params = payload.get("parameters", {})
    parameters: dict[str, dict[str, Any]] = {}
    if isinstance(params, dict):
        for pname, pspec in params.items():
            parameters[pname] = dict(pspec) if isinstance(pspec, dict) else {}
    return LegacyToolSpec(name=name, description=description, parameters=parameters)


def legacy_from_obj(obj: Any, strict: bool = True) -> LegacyTrajectory:
    if not isinstance(obj, dict):
        raise SchemaError("$", "record must be an object")
    if "query" not in obj:
        raise SchemaError("$.query", "missing query")
    query = obj["query"]
    if not isinstance(query, str):
        raise SchemaError("$.query", "query must be a string")

    raw_tools = obj.get("tools", [])
    if not isinstance(raw_tools, list):
        raise SchemaError("$.tools", "tools must be a list")
    tools = [_parse_legacy_tool(t, f"$.tools[{i}]", strict) for i, t in enumerate(raw_tools)]

    raw_steps = obj.get("steps", [])
    if not isinstance(raw_steps, list):
        raise SchemaError("$.steps", "steps must be a list")
    steps = [_parse_step(s, f"$.steps[{i}]", strict) for i, s in enumerate(raw_steps)]
    if strict:
        for i, step in enumerate(steps):
            if step.step_id != i + 1:
                raise SchemaError(
                    f"$.steps[{i}].step_id",
                    f"step_id must increase from 1, got {step.step_id}",
                )

    few_shot = obj.get("few_shot_examples", [])
    if not isinstance(few_shot, list):
        few_shot = [few_shot]

    task_instruction = obj.get("task_instruction", "")
    if not isinstance(task_instruction, str):
        task_instruction = str(task_instruction)

    extensions = {k: v for k, v in obj.items() if k not in KNOWN_LEGACY_KEYS}

    tid = obj.get("unique_trajectory_id")
    if not isinstance(tid, str) or not tid:
        tid = _content_hash_id({k: v for k, v in obj.items() if k != "unique_trajectory_id"})

    return LegacyTrajectory(
        unique_trajectory_id=tid,
        task_instruction=task_instruction,
        few_shot_examples=few_shot,
        query=query,
        tools=tools,
        steps=steps,
        extensions=extensions,
    )


def parse_legacy_trajectory(text: str, strict: bool = True) -> LegacyTrajectory:
    return legacy_from_obj(_load_document(text), strict=strict)


def iter_jsonl(path: str) -> Iterator[str]:
    """Yield non-blank lines of a JSONL file without loading it whole."""
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line.strip():
                yield line
