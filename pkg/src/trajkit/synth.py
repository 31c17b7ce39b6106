"""Deterministic synthetic corpora for tests and harnesses.

Generated records are clean by construction: ids present, every tool call
answered, conversations end on an assistant message, and all call arguments
match their declared parameter types.
"""

from __future__ import annotations

import random
from typing import Iterator

from .schema import Message, ToolCall, ToolSpec, UnifiedTrajectory, serialize_trajectory

_PARAM_TYPES = ("string", "integer", "number", "boolean")


def _sample_value(rng: random.Random, type_name: str):
    if type_name == "string":
        return rng.choice(("alpha", "beta", "gamma", "delta"))
    if type_name == "integer":
        return rng.randint(0, 99)
    if type_name == "number":
        return round(rng.uniform(0, 10), 2)
    return rng.random() < 0.5


def random_trajectory(rng: random.Random, index: int) -> UnifiedTrajectory:
    """One clean record; always includes a tool call with a required argument
    so corruption harnesses have something to mutate."""
    tools = []
    for j in range(rng.randint(1, 3)):
        params = {}
        required = []
        for k in range(rng.randint(1, 3)):
            pname = f"arg{k}"
            params[pname] = {"type": rng.choice(_PARAM_TYPES), "description": f"parameter {k}"}
            if k == 0 or rng.random() < 0.6:
                required.append(pname)
        tools.append(
            ToolSpec(
                name=f"tool_{index}_{j}",
                description=f"synthetic tool {j}",
                properties=params,
                required=sorted(required),
            )
        )

    conversation: list[Message] = []
    if rng.random() < 0.5:
        conversation.append(Message(role="system", content="You are a synthetic assistant."))
    conversation.append(Message(role="user", content=f"request {index}"))

    call_serial = 0
    for step in range(rng.randint(1, 3)):
        if step == 0 or rng.random() < 0.6:
            tool = rng.choice(tools)
            args = {p: _sample_value(rng, spec["type"]) for p, spec in tool.properties.items() if p in tool.required or rng.random() < 0.5}
            for req in tool.required:
                args.setdefault(req, _sample_value(rng, tool.properties[req]["type"]))
            call = ToolCall(name=tool.name, arguments=args, id=f"t{index}-c{call_serial}")
            call_serial += 1
            conversation.append(Message(role="assistant", content=f"calling {tool.name}", tool_calls=[call]))
            conversation.append(Message(role="tool", content={"result": f"ok {step}"}, name=tool.name, tool_call_id=call.id))
            if rng.random() < 0.3:
                conversation.append(Message(role="user", content=f"follow-up {step}"))
        else:
            conversation.append(Message(role="assistant", content=f"answer {step} for request {index}"))
    if conversation[-1].role != "assistant":
        conversation.append(Message(role="assistant", content="done."))

    extensions = {}
    if rng.random() < 0.4:
        extensions["domain"] = rng.choice(("weather", "finance", "travel"))

    return UnifiedTrajectory(
        unique_trajectory_id=f"synth-{index:05d}",
        task_instruction="Answer using the available tools when appropriate.",
        tools=tools,
        conversation=conversation,
        extensions=extensions,
    )


def random_corpus(n: int, seed: int = 0) -> Iterator[UnifiedTrajectory]:
    rng = random.Random(seed)
    for i in range(n):
        yield random_trajectory(rng, i)


def write_corpus(path: str, n: int, seed: int = 0) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for t in random_corpus(n, seed):
            fh.write(serialize_trajectory(t) + "\n")
