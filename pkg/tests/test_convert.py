import json

import pytest

from trajkit.convert import deterministic_call_id, upgrade_legacy
from trajkit.errors import ConversionError
from trajkit.schema import parse_legacy_trajectory, serialize_trajectory
from trajkit.validation import ERROR, run_checks


def test_upgrade_appendix_record(fire_info_text):
    legacy = parse_legacy_trajectory(fire_info_text)
    upgraded, warnings = upgrade_legacy(legacy)
    roles = [(m.role, m.content) for m in upgraded.conversation]
    assert roles == [
        ("system", legacy.task_instruction),
        ("user", "Can you give me the latest information on the wildfires occurring in California?"),
        ("assistant", "Sure, what is the radius (in miles) around the location of the wildfire?"),
        ("user", "User: Let me think... 50 miles."),
    ]
    assert warnings == []
    # flat parameter map becomes properties + required list
    tool = upgraded.tools[0]
    assert tool.required == ["location"]
    assert set(tool.properties) == {"location", "radius"}
    assert "required" not in tool.properties["location"]


def test_upgraded_record_passes_all_error_checks(fire_info_text):
    upgraded, _ = upgrade_legacy(parse_legacy_trajectory(fire_info_text))
    findings = run_checks(json.loads(serialize_trajectory(upgraded)))
    assert [f for f in findings if f.severity == ERROR] == []


def _legacy_with_steps(fire_info_text, steps):
    obj = json.loads(fire_info_text)
    obj["steps"] = steps
    return parse_legacy_trajectory(json.dumps(obj))


def test_zero_steps_yields_system_and_user_only(fire_info_text):
    legacy = _legacy_with_steps(fire_info_text, [])
    upgraded, warnings = upgrade_legacy(legacy)
    assert [m.role for m in upgraded.conversation] == ["system", "user"]
    assert warnings == []


def test_two_calls_share_one_observation(fire_info_text):
    legacy = _legacy_with_steps(
        fire_info_text,
        [
            {
                "thought": "checking two regions",
                "tool_calls": [
                    {"name": "get_fire_info", "arguments": {"location": "California"}},
                    {"name": "get_fire_info", "arguments": {"location": "Oregon"}},
                ],
                "step_id": 1,
                "next_observation": "both regions burning",
                "user_input": "",
            }
        ],
    )
    upgraded, warnings = upgrade_legacy(legacy)
    tool_msgs = [m for m in upgraded.conversation if m.role == "tool"]
    assert len(tool_msgs) == 2
    assert all(m.content == "both regions burning" for m in tool_msgs)
    assert [w.code for w in warnings] == ["OBSERVATION_REPLICATED"]

    assistant = next(m for m in upgraded.conversation if m.role == "assistant")
    ids = [c.id for c in assistant.tool_calls]
    assert ids[0] != ids[1]
    assert [m.tool_call_id for m in tool_msgs] == ids
    # upgraded linkage is valid
    assert [f for f in run_checks(json.loads(serialize_trajectory(upgraded))) if f.severity == ERROR] == []


def test_observation_without_call_is_conversion_error(fire_info_text):
    legacy = _legacy_with_steps(
        fire_info_text,
        [
            {
                "thought": "hm",
                "tool_calls": [],
                "step_id": 1,
                "next_observation": "orphan observation",
                "user_input": "",
            }
        ],
    )
    with pytest.raises(ConversionError):
        upgrade_legacy(legacy)


def test_call_ids_are_deterministic(fire_info_text):
    a, _ = upgrade_legacy(parse_legacy_trajectory(fire_info_text))
    b, _ = upgrade_legacy(parse_legacy_trajectory(fire_info_text))
    assert serialize_trajectory(a) == serialize_trajectory(b)
    assert len(deterministic_call_id("t", 1, 0)) == 16
    assert deterministic_call_id("t", 1, 0) != deterministic_call_id("t", 1, 1)


def test_few_shot_examples_carried_into_extensions(fire_info_text):
    obj = json.loads(fire_info_text)
    obj["few_shot_examples"] = [{"example": 1}]
    upgraded, _ = upgrade_legacy(parse_legacy_trajectory(json.dumps(obj)))
    assert upgraded.extensions["few_shot_examples"] == [{"example": 1}]
