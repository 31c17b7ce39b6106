"""Corruption operators for the mutation-detection harness.

Each operator takes a clean raw record (dict), mutates a deep copy, and is
paired with the finding code the validator must emit for it.
"""

import copy


def _first_tool_message_index(obj):
    for i, msg in enumerate(obj["conversation"]):
        if msg.get("role") == "tool":
            return i
    raise AssertionError("fixture record lacks a tool message")


def _first_call_site(obj):
    for i, msg in enumerate(obj["conversation"]):
        if msg.get("role") == "assistant" and msg.get("tool_calls"):
            return i, msg["tool_calls"][0]
    raise AssertionError("fixture record lacks a tool call")


def _tool_spec(obj, name):
    for tool in obj["tools"]:
        if tool["name"] == name:
            return tool
    raise AssertionError(f"tool {name!r} not declared")


def drop_required_field(obj):
    del obj["conversation"][0]["content"]
    return obj


def unknown_role(obj):
    obj["conversation"][0]["role"] = "narrator"
    return obj


def dangling_tool_result(obj):
    i = _first_tool_message_index(obj)
    obj["conversation"][i]["tool_call_id"] = "no-such-call-id"
    return obj


def duplicate_call_id(obj):
    i, call = _first_call_site(obj)
    obj["conversation"][i]["tool_calls"].append(copy.deepcopy(call))
    return obj


def unknown_tool_name(obj):
    _, call = _first_call_site(obj)
    call["name"] = "tool_that_does_not_exist"
    return obj


def missing_required_arg(obj):
    _, call = _first_call_site(obj)
    spec = _tool_spec(obj, call["name"])
    required = spec["parameters"]["required"]
    assert required, "fixture tool has no required parameter"
    call["arguments"].pop(required[0], None)
    return obj


def wrong_arg_type(obj):
    _, call = _first_call_site(obj)
    spec = _tool_spec(obj, call["name"])
    required = spec["parameters"]["required"][0]
    declared = spec["parameters"]["properties"][required]["type"]
    call["arguments"][required] = 12345 if declared == "string" else "not-a-number"
    return obj


def illegal_role_sequence(obj):
    obj["conversation"].insert(
        1, {"role": "tool", "name": "x", "content": "stray", "tool_call_id": "zzz"}
    )
    return obj


OPERATORS = [
    (drop_required_field, "MISSING_FIELD"),
    (unknown_role, "UNKNOWN_ROLE"),
    (dangling_tool_result, "DANGLING_TOOL_RESULT"),
    (duplicate_call_id, "DUPLICATE_CALL_ID"),
    (unknown_tool_name, "UNKNOWN_TOOL_NAME"),
    (missing_required_arg, "MISSING_REQUIRED_ARG"),
    (wrong_arg_type, "ARG_TYPE_MISMATCH"),
    (illegal_role_sequence, "ILLEGAL_ROLE_SEQUENCE"),
]


def mutate(obj, operator):
    return operator(copy.deepcopy(obj))
