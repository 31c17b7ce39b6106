"""Mechanical upgrade of step-list (legacy) records to the message-list format."""

from __future__ import annotations

import hashlib

from .errors import ConversionError
from .schema import (
    LegacyTrajectory,
    Message,
    ToolCall,
    ToolSpec,
    UnifiedTrajectory,
)
from .validation import Finding, finding


def deterministic_call_id(trajectory_id: str, step_id: int, call_index: int) -> str:
    """Stable per-call id so repeated conversions are diffable."""
    seed = f"{trajectory_id}:{step_id}:{call_index}".encode("utf-8")
    return hashlib.sha256(seed).hexdigest()[:16]


def _upgrade_tool(legacy_tool) -> ToolSpec:
    properties: dict[str, dict] = {}
    required: list[str] = []
    for pname, pspec in legacy_tool.parameters.items():
        pspec = dict(pspec)
        if pspec.pop("required", False):
            required.append(pname)
        properties[pname] = pspec
    return ToolSpec(
        name=legacy_tool.name,
        description=legacy_tool.description,
        properties=properties,
        required=sorted(required),
    )


def upgrade_legacy(legacy: LegacyTrajectory) -> tuple[UnifiedTrajectory, list[Finding]]:
    """Rewrite a legacy record as a conversation.

    Mapping: optional system(task_instruction), user(query), then per step an
    assistant message (thought + upgraded tool calls), one tool message per
    call carrying the step observation, and a trailing user message when the
    step recorded follow-up input.  A multi-call step shares its single
    observation across all calls and is flagged OBSERVATION_REPLICATED.
    """
    warnings: list[Finding] = []
    conversation: list[Message] = []
    if legacy.task_instruction:
        conversation.append(Message(role="system", content=legacy.task_instruction))
    conversation.append(Message(role="user", content=legacy.query))

    for step_index, step in enumerate(legacy.steps):
        observation = step.next_observation
        has_observation = not (observation is None or observation == "")
        if has_observation and not step.tool_calls:
            raise ConversionError(
                f"step {step.step_id} has an observation but no tool call to attach it to"
            )
        calls = [
            ToolCall(
                name=c.name,
                arguments=c.arguments,
                id=deterministic_call_id(legacy.unique_trajectory_id, step.step_id, i),
            )
            for i, c in enumerate(step.tool_calls)
        ]
        conversation.append(Message(role="assistant", content=step.thought, tool_calls=calls))
        if calls and has_observation:
            if len(calls) > 1:
                warnings.append(
                    finding(
                        "OBSERVATION_REPLICATED",
                        f"$.steps[{step_index}].next_observation",
                        f"one observation replicated across {len(calls)} tool calls",
                    )
                )
            for call in calls:
                conversation.append(
                    Message(role="tool", content=observation, name=call.name, tool_call_id=call.id)
                )
        if step.user_input:
            conversation.append(Message(role="user", content=step.user_input))

    extensions = dict(legacy.extensions)
    if legacy.few_shot_examples:
        extensions["few_shot_examples"] = legacy.few_shot_examples

    upgraded = UnifiedTrajectory(
        unique_trajectory_id=legacy.unique_trajectory_id,
        task_instruction=legacy.task_instruction,
        tools=[_upgrade_tool(t) for t in legacy.tools],
        conversation=conversation,
        extensions=extensions,
    )
    return upgraded, warnings
