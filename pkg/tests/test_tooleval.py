import itertools
import json
from collections import Counter

import pytest

from trajkit.errors import InputError, ToolCallParseError
from trajkit.schema import ToolCall
from trajkit.tooleval import (
    MatchCounts,
    compute_metrics,
    evaluate_corpus,
    match_calls,
    match_calls_exact,
    parse_tool_calls,
    sanitize_output,
)

# Raw model outputs in the shapes seen in the wild, each paired with the
# expected parsed call list.
PARSE_FIXTURES = [
    ('{"name": "get_weather", "arguments": {"city": "Oslo"}}',
     [("get_weather", {"city": "Oslo"})]),
    ('[{"name": "a", "arguments": {}}, {"name": "b", "arguments": {"x": 1}}]',
     [("a", {}), ("b", {"x": 1})]),
    ('<tool_call>{"name": "f", "arguments": {"q": "hi"}}</tool_call>',
     [("f", {"q": "hi"})]),
    ('<tool_call>{"name": "f", "arguments": {}}</tool_call>\n<tool_call>{"name": "g", "arguments": {}}</tool_call>',
     [("f", {}), ("g", {})]),
    ('<think>I should call f here.</think>{"name": "f", "arguments": {"k": 2}}',
     [("f", {"k": 2})]),
    ('```json\n{"name": "f", "arguments": {"k": 2}}\n```',
     [("f", {"k": 2})]),
    ('Sure, here is the call:\n[{"name": "f", "arguments": {"note": "a [bracket] inside"}}]\nHope that helps.',
     [("f", {"note": "a [bracket] inside"})]),
    ("{'name': 'f', 'arguments': {'k': True}}",
     [("f", {"k": True})]),
    ('{"function": {"name": "f", "arguments": {"k": 1}}}',
     [("f", {"k": 1})]),
    ('{"name": "f", "arguments": "{\\"k\\": 3}"}',
     [("f", {"k": 3})]),
    ('{"thought": "use f", "tool_calls": [{"name": "f", "arguments": {"k": 1}}]}',
     [("f", {"k": 1})]),
    ('{"name": "f"}',
     [("f", {})]),
    ('```\n[{"name": "f", "arguments": {}}]\n```',
     [("f", {})]),
    ('<think>\nmultiline\nreasoning\n</think>\n<tool_call>\n{"name": "f", "arguments": {"a": [1, 2]}}\n</tool_call>',
     [("f", {"a": [1, 2]})]),
]


@pytest.mark.parametrize("raw,expected", PARSE_FIXTURES, ids=range(len(PARSE_FIXTURES)))
def test_parse_fixture(raw, expected):
    calls = parse_tool_calls(raw)
    assert [(c.name, c.arguments) for c in calls] == expected


@pytest.mark.parametrize("raw", ["", "no structure at all", "<think>only thoughts</think>", "[1, 2, 3"])
def test_parse_failures_raise(raw):
    with pytest.raises(ToolCallParseError):
        parse_tool_calls(raw)


def test_missing_arguments_warns():
    warnings: list[str] = []
    calls = parse_tool_calls('{"name": "f"}', warnings)
    assert calls[0].arguments == {}
    assert warnings


def test_sanitize_is_idempotent():
    for raw, _ in PARSE_FIXTURES:
        once = sanitize_output(raw)
        assert sanitize_output(once) == once


# matching


def brute_force_matched(pred_names, gold_names):
    """Maximum bipartite matching by name, computed by exhaustive search."""
    best = 0
    gold = list(gold_names)
    for perm in itertools.permutations(range(len(gold))):
        used = set()
        count = 0
        for name in pred_names:
            for j in perm:
                if j not in used and gold[j] == name:
                    used.add(j)
                    count += 1
                    break
        best = max(best, count)
    return best


def test_match_calls_agrees_with_brute_force():
    names = ["a", "b", "c"]
    pools = []
    for n in range(5):
        pools.extend(itertools.combinations_with_replacement(names, n))
    for pred_names in pools:
        for gold_names in pools:
            pred = [ToolCall(name=n, arguments={}) for n in pred_names]
            gold = [ToolCall(name=n, arguments={}) for n in gold_names]
            counts = match_calls(pred, gold)
            assert counts.matched == brute_force_matched(pred_names, gold_names)
            assert counts.predicted == len(pred_names)
            assert counts.gold == len(gold_names)


def test_match_calls_exact_requires_equal_arguments():
    pred = [ToolCall(name="f", arguments={"a": 1, "b": 2})]
    gold = [ToolCall(name="f", arguments={"b": 2, "a": 1})]
    assert match_calls_exact(pred, gold).matched == 1
    gold = [ToolCall(name="f", arguments={"a": 1, "b": 3})]
    assert match_calls_exact(pred, gold).matched == 0
    assert match_calls(pred, gold).matched == 1


def test_match_counts_invariant():
    with pytest.raises(ValueError):
        MatchCounts(matched=2, predicted=1, gold=3)
    with pytest.raises(ValueError):
        MatchCounts(matched=-1, predicted=0, gold=0)


# pooling and edge rules


def test_zero_denominator_rules():
    both_empty = compute_metrics([MatchCounts(0, 0, 0)])
    assert (both_empty.p_api, both_empty.r_api, both_empty.f1_api) == (1.0, 1.0, 1.0)

    no_pred = compute_metrics([MatchCounts(0, 0, 2)])
    assert no_pred.p_api == 0.0 and no_pred.r_api == 0.0 and no_pred.f1_api == 0.0

    no_gold = compute_metrics([MatchCounts(0, 2, 0)])
    assert no_gold.p_api == 0.0 and no_gold.r_api == 0.0 and no_gold.f1_api == 0.0


def test_micro_average_pools_counts():
    report = compute_metrics([MatchCounts(1, 2, 1), MatchCounts(3, 3, 5)])
    assert report.pooled == MatchCounts(4, 5, 6)
    assert report.p_api == pytest.approx(4 / 5)
    assert report.r_api == pytest.approx(4 / 6)
    f1 = 2 * (4 / 5) * (4 / 6) / (4 / 5 + 4 / 6)
    assert report.f1_api == pytest.approx(f1)


def test_report_serialization():
    report = compute_metrics([MatchCounts(1, 1, 1)])
    obj = report.to_obj()
    assert obj["pooled"] == {"matched": 1, "predicted": 1, "gold": 1}
    md = report.to_markdown()
    assert "F1_api: 1.000" in md


# file-level evaluation


def write_jsonl(path, rows):
    path.write_text("".join(json.dumps(r) + "\n" for r in rows))


def test_evaluate_corpus(tmp_path):
    gold = tmp_path / "gold.jsonl"
    pred = tmp_path / "pred.jsonl"
    write_jsonl(gold, [
        {"example_id": "e1", "tool_calls": [{"name": "f", "arguments": {"k": 1}}]},
        {"example_id": "e2", "tool_calls": [{"name": "g", "arguments": {}}]},
        {"example_id": "e3", "tool_calls": [{"name": "h", "arguments": {}}]},
    ])
    write_jsonl(pred, [
        {"example_id": "e1", "raw_output": '<tool_call>{"name": "f", "arguments": {"k": 1}}</tool_call>'},
        {"example_id": "e2", "raw_output": "total garbage"},
        {"example_id": "e3", "raw_output": '{"name": "wrong_tool", "arguments": {}}'},
    ])
    report = evaluate_corpus(str(pred), str(gold))
    assert report.pooled == MatchCounts(matched=1, predicted=2, gold=3)
    by_id = {e.example_id: e for e in report.per_example}
    assert by_id["e2"].parse_error is not None
    assert by_id["e2"].counts.predicted == 0


def test_evaluate_corpus_unknown_tools(tmp_path):
    gold = tmp_path / "gold.jsonl"
    pred = tmp_path / "pred.jsonl"
    tools = tmp_path / "tools.jsonl"
    write_jsonl(gold, [{"example_id": "e1", "tool_calls": [{"name": "f", "arguments": {}}]}])
    write_jsonl(pred, [{"example_id": "e1", "raw_output": '{"name": "mystery", "arguments": {}}'}])
    write_jsonl(tools, [{"name": "f"}])
    report = evaluate_corpus(str(pred), str(gold), str(tools))
    assert report.per_example[0].unknown_tools == ["mystery"]


def test_evaluate_corpus_id_mismatch(tmp_path):
    gold = tmp_path / "gold.jsonl"
    pred = tmp_path / "pred.jsonl"
    write_jsonl(gold, [{"example_id": "e1", "tool_calls": []}])
    write_jsonl(pred, [{"example_id": "e2", "raw_output": "{}"}])
    with pytest.raises(InputError):
        evaluate_corpus(str(pred), str(gold))
