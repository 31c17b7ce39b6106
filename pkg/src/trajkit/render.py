"""Declarative chat templates and training-sample rendering.

A template describes per-role message frames, where the tool block is
injected, and how tool calls are wrapped.  Rendering produces the full chat
text together with character-offset spans marking which parts are trainable
(assistant outputs) versus masked (everything else).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any

from .errors import TemplateError
from .schema import Message, ToolCall, UnifiedTrajectory, canon_value, dumps_compact

PLACEMENT_SYSTEM_SUFFIX = "system_suffix"
PLACEMENT_FIRST_USER_PREFIX = "first_user_prefix"

SHAREGPT_ROLE_MAP = {"system": "system", "user": "human", "assistant": "gpt", "tool": "observation"}


@dataclass
class RoleFrame:
    prefix: str
    suffix: str


@dataclass
class TemplateSpec:
    name: str
    begin_token: str = ""
    frames: dict[str, RoleFrame] = field(default_factory=dict)
    tool_placement: str = PLACEMENT_SYSTEM_SUFFIX
    tool_header: str = ""
    tool_footer: str = ""
    tool_serialization: str = "compact"
    call_open: str = ""
    call_close: str = ""
    generation_prompt: str = ""

    def validate(self) -> None:
        for role in ("system", "user", "assistant", "tool"):
            if role not in self.frames:
                raise TemplateError(f"template {self.name!r} lacks a frame for role {role!r}")
        if self.call_open and self.call_close and self.call_open == self.call_close:
            raise TemplateError("tool call wrapper open and close must differ")
        if self.tool_placement not in (PLACEMENT_SYSTEM_SUFFIX, PLACEMENT_FIRST_USER_PREFIX):
            raise TemplateError(f"unknown tool block placement {self.tool_placement!r}")

    @classmethod
    def from_obj(cls, obj: dict[str, Any]) -> "TemplateSpec":
        frames = {
            role: RoleFrame(prefix=f.get("prefix", ""), suffix=f.get("suffix", ""))
            for role, f in obj.get("frames", {}).items()
        }
        block = obj.get("tool_block", {})
        wrapper = obj.get("tool_call_wrapper", {})
        tpl = cls(
            name=obj.get("name", "custom"),
            begin_token=obj.get("begin_token", ""),
            frames=frames,
            tool_placement=block.get("placement", PLACEMENT_SYSTEM_SUFFIX),
            tool_header=block.get("header", ""),
            tool_footer=block.get("footer", ""),
            tool_serialization=block.get("tool_serialization", "compact"),
            call_open=wrapper.get("open", ""),
            call_close=wrapper.get("close", ""),
            generation_prompt=obj.get("generation_prompt", ""),
        )
        tpl.validate()
        return tpl

    @classmethod
    def from_file(cls, path: str) -> "TemplateSpec":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_obj(json.load(fh))


def simple_template() -> TemplateSpec:
    """The built-in SIMPLE template (bit-exact contract)."""
    return TemplateSpec(
        name="simple",
        begin_token="",
        frames={role: RoleFrame(prefix=f"<|{role}|>\n", suffix="<|end|>\n") for role in ("system", "user", "assistant", "tool")},
        tool_placement=PLACEMENT_SYSTEM_SUFFIX,
        tool_header="\n\nAvailable tools:\n",
        tool_footer="",
        tool_serialization="compact",
        call_open="<tool_call>",
        call_close="</tool_call>",
        generation_prompt="<|assistant|>\n",
    )


SIMPLE = simple_template()


@dataclass
class Span:
    start: int
    end: int
    trainable: bool


@dataclass
class RenderedSample:
    text: str
    spans: list[Span]
    trajectory_id: str

    def trainable_text(self) -> str:
        return "".join(self.text[s.start : s.end] for s in self.spans if s.trainable)

    def to_obj(self) -> dict[str, Any]:
        return {
            "trajectory_id": self.trajectory_id,
            "text": self.text,
            "spans": [{"start": s.start, "end": s.end, "trainable": s.trainable} for s in self.spans],
        }


def stringify_content(content: Any) -> str:
    if isinstance(content, str):
        return content
    return dumps_compact(canon_value(content))


def render_tool_call(call: ToolCall, tpl: TemplateSpec) -> str:
    payload = {"name": call.name, "arguments": canon_value(call.arguments)}
    return tpl.call_open + dumps_compact(payload) + tpl.call_close


def _tool_block(t: UnifiedTrajectory, tpl: TemplateSpec) -> str:
    objs = [tool.to_obj() for tool in t.tools]
    if tpl.tool_serialization == "pretty":
        body = json.dumps(objs, indent=2, ensure_ascii=False)
    else:
        body = dumps_compact(objs)
    return tpl.tool_header + body + tpl.tool_footer


def _effective_messages(t: UnifiedTrajectory, tpl: TemplateSpec) -> list[Message]:
    """Conversation with the tool block injected per template placement."""
    messages = list(t.conversation)
    if not t.tools:
        return messages
    block = _tool_block(t, tpl)
    if tpl.tool_placement == PLACEMENT_SYSTEM_SUFFIX:
        if messages and messages[0].role == "system":
            head = messages[0]
            messages[0] = Message(role="system", content=stringify_content(head.content) + block, extra=head.extra)
        elif t.task_instruction:
            messages.insert(0, Message(role="system", content=t.task_instruction + block))
        else:
            raise TemplateError("no system message and empty task instruction: nowhere to inject tools")
    else:  # first_user_prefix
        for i, msg in enumerate(messages):
            if msg.role == "user":
                messages[i] = Message(
                    role="user",
                    content=block + stringify_content(msg.content),
                    extra=msg.extra,
                )
                break
        else:
            raise TemplateError("no user message: nowhere to inject tools")
    return messages


def _message_body(msg: Message, tpl: TemplateSpec) -> str:
    body = stringify_content(msg.content)
    if msg.role == "assistant":
        body += "".join(render_tool_call(c, tpl) for c in msg.tool_calls)
    return body


def _frame_for(msg: Message, tpl: TemplateSpec) -> RoleFrame:
    frame = tpl.frames.get(msg.role)
    if frame is None:
        raise TemplateError(f"template {tpl.name!r} has no frame for role {msg.role!r}")
    return frame


def render_chat(t: UnifiedTrajectory, tpl: TemplateSpec = SIMPLE) -> RenderedSample:
    """Render the whole conversation into one text plus loss-mask spans.

    Assistant bodies and suffixes are trainable; prefixes and every other
    role's text are masked.
    """
    segments: list[tuple[str, bool]] = []
    if tpl.begin_token:
        segments.append((tpl.begin_token, False))
    for msg in _effective_messages(t, tpl):
        frame = _frame_for(msg, tpl)
        trainable = msg.role == "assistant"
        segments.append((frame.prefix, False))
        segments.append((_message_body(msg, tpl), trainable))
        segments.append((frame.suffix, trainable))

    text_parts: list[str] = []
    spans: list[Span] = []
    offset = 0
    for piece, trainable in segments:
        if not piece:
            continue
        end = offset + len(piece)
        if spans and spans[-1].trainable == trainable:
            spans[-1].end = end
        else:
            spans.append(Span(start=offset, end=end, trainable=trainable))
        text_parts.append(piece)
        offset = end
    return RenderedSample(text="".join(text_parts), spans=spans, trajectory_id=t.unique_trajectory_id)


def render_alpaca(t: UnifiedTrajectory, tpl: TemplateSpec = SIMPLE) -> list[dict[str, str]]:
    """One (input, output) pair per assistant message."""
    messages = _effective_messages(t, tpl)
    pairs: list[dict[str, str]] = []
    prefix_parts: list[str] = [tpl.begin_token] if tpl.begin_token else []
    for msg in messages:
        frame = _frame_for(msg, tpl)
        body = _message_body(msg, tpl)
        if msg.role == "assistant":
            pairs.append({"input": "".join(prefix_parts) + tpl.generation_prompt, "output": body})
        prefix_parts.append(frame.prefix + body + frame.suffix)
    return pairs


def render_sharegpt(t: UnifiedTrajectory, tpl: TemplateSpec = SIMPLE) -> dict[str, Any]:
    """Map the conversation onto ShareGPT-style {from, value} entries."""
    conversations = []
    for msg in t.conversation:
        value = stringify_content(msg.content)
        if msg.role == "assistant":
            value += "".join(render_tool_call(c, tpl) for c in msg.tool_calls)
        conversations.append({"from": SHAREGPT_ROLE_MAP.get(msg.role, msg.role), "value": value})
    return {"conversations": conversations}
