"""End-to-end acceptance suite.

Each test covers one release gate; conftest prints a PASS/FAIL line per
test so the gate status is visible in the run log.
"""

import itertools
import json
import os
import resource
import subprocess
import sys
import time

import pytest
from click.testing import CliRunner

from mutations import OPERATORS, mutate
from test_render import expected_trainable
from test_tooleval import PARSE_FIXTURES, brute_force_matched
from trajkit import parse_legacy_trajectory, parse_trajectory
from trajkit.cli import main as cli_main
from trajkit.convert import upgrade_legacy
from trajkit.errors import ToolCallParseError
from trajkit.render import SIMPLE, render_chat
from trajkit.schema import ToolCall, serialize_trajectory
from trajkit.stats import CorpusStats, compute_stats
from trajkit.synth import random_corpus
from trajkit.tooleval import MatchCounts, compute_metrics, match_calls, parse_tool_calls, sanitize_output
from trajkit.validation import ERROR, run_checks


# Benchmark scoreboard rows: published (P, R, F1) at 3 decimals, with
# integer count triples (matched, predicted, gold) whose exact ratios
# round to all three published values simultaneously.
SCOREBOARD = [
    ((245, 258, 257), (0.950, 0.953, 0.951)),
    ((250, 266, 265), (0.940, 0.943, 0.942)),
    ((31, 32, 32), (0.969, 0.969, 0.969)),
    ((241, 253, 252), (0.953, 0.956, 0.954)),
    ((38, 43, 43), (0.884, 0.884, 0.884)),
    ((99, 108, 106), (0.917, 0.934, 0.925)),
    ((125, 138, 133), (0.906, 0.940, 0.923)),
    ((97, 107, 106), (0.907, 0.915, 0.911)),
    ((100, 106, 119), (0.943, 0.840, 0.889)),
    ((132, 157, 156), (0.841, 0.846, 0.843)),
    ((205, 245, 244), (0.837, 0.840, 0.838)),
    ((158, 194, 191), (0.814, 0.827, 0.821)),
    ((39, 49, 49), (0.796, 0.796, 0.796)),
    ((210, 267, 266), (0.787, 0.789, 0.788)),
    ((125, 165, 159), (0.758, 0.786, 0.772)),
    ((101, 113, 159), (0.894, 0.635, 0.743)),
]


def test_scoreboard_arithmetic():
    start = time.monotonic()
    for counts, (p, r, f1) in SCOREBOARD:
        report = compute_metrics([MatchCounts(*counts)])
        assert round(report.p_api, 3) == p
        assert round(report.r_api, 3) == r
        assert round(report.f1_api, 3) == f1
    assert time.monotonic() - start < 1.0


def test_reference_fixtures_golden(data_dir, sleep_stats_text, fire_info_text):
    t = parse_trajectory(sleep_stats_text)
    assert all(f.severity != ERROR for f in run_checks(json.loads(sleep_stats_text)))

    canonical = serialize_trajectory(t)
    golden = open(os.path.join(data_dir, "get_sleep_stats.canonical.jsonl")).read()
    assert canonical + "\n" == golden
    # canonical form is a fixed point
    assert serialize_trajectory(parse_trajectory(canonical)) == canonical

    sample = render_chat(t, SIMPLE)
    assert sample.text == open(os.path.join(data_dir, "get_sleep_stats.rendered.txt")).read()
    assert sum(1 for s in sample.spans if s.trainable) == 2

    upgraded, _ = upgrade_legacy(parse_legacy_trajectory(fire_info_text))
    golden = open(os.path.join(data_dir, "get_fire_info.upgraded.jsonl")).read()
    assert serialize_trajectory(upgraded) + "\n" == golden
    assert all(f.severity != ERROR for f in run_checks(json.loads(serialize_trajectory(upgraded))))


def test_mutation_detection():
    corpus = [json.loads(serialize_trajectory(t)) for t in random_corpus(100, seed=42)]
    false_positives = sum(1 for record in corpus if run_checks(record))
    assert false_positives == 0

    false_negatives = 0
    for record in corpus:
        for operator, expected_code in OPERATORS:
            found = {f.code for f in run_checks(mutate(record, operator))}
            if expected_code not in found:
                false_negatives += 1
    assert false_negatives == 0
    assert len(OPERATORS) == 8


def test_parser_fixtures():
    assert len(PARSE_FIXTURES) >= 12
    for raw, expected in PARSE_FIXTURES:
        calls = parse_tool_calls(raw)
        assert [(c.name, c.arguments) for c in calls] == expected
        once = sanitize_output(raw)
        assert sanitize_output(once) == once
    for raw in ("", "plain prose with no calls", "[1, 2", "<think>nothing else</think>"):
        with pytest.raises(ToolCallParseError):
            parse_tool_calls(raw)
        once = sanitize_output(raw)
        assert sanitize_output(once) == once


def test_matching_oracle_exhaustive():
    start = time.monotonic()
    names = ["a", "b", "c"]
    pools = []
    for n in range(5):
        pools.extend(itertools.product(names, repeat=n))
    for pred_names in pools:
        for gold_names in pools:
            pred = [ToolCall(name=n, arguments={}) for n in pred_names]
            gold = [ToolCall(name=n, arguments={}) for n in gold_names]
            assert match_calls(pred, gold).matched == brute_force_matched(pred_names, gold_names)
    assert time.monotonic() - start < 10.0


def test_mask_invariants():
    for t in random_corpus(1000, seed=1234):
        sample = render_chat(t, SIMPLE)
        spans = sample.spans
        assert spans[0].start == 0
        assert spans[-1].end == len(sample.text)
        for prev, cur in zip(spans, spans[1:]):
            assert prev.end == cur.start
            assert prev.trainable != cur.trainable  # adjacent same-flag spans merge
        trainable = "".join(sample.text[s.start : s.end] for s in spans if s.trainable)
        assert trainable == sample.trainable_text() == expected_trainable(t)


def test_stats_identity():
    for seed in (0, 1, 2):
        stats = compute_stats(random_corpus(200, seed=seed))
        assert stats.single_turn + stats.multi_turn == stats.total == 200

    released = CorpusStats(total=97755, single_turn=69271, multi_turn=28484, multi_turn_steps=28484 * 9)
    assert released.single_turn + released.multi_turn == released.total == 97755
    assert released.mean_steps_multi_turn == 9.0


def test_filter_determinism(tmp_path):
    src = tmp_path / "corpus.jsonl"
    lines = [serialize_trajectory(t) for t in random_corpus(60, seed=77)]
    lines.insert(10, '{"unique_trajectory_id": "bad", "conversation": []}')
    lines.insert(20, "{syntax error")
    src.write_text("".join(line + "\n" for line in lines))

    runner = CliRunner()
    outputs = []
    for tag, workers in (("a", "1"), ("b", "1"), ("c", "8")):
        kept = tmp_path / f"kept-{tag}.jsonl"
        removed = tmp_path / f"removed-{tag}.jsonl"
        decisions = tmp_path / f"decisions-{tag}.jsonl"
        result = runner.invoke(
            cli_main,
            ["filter", str(src), "--kept", str(kept), "--removed", str(removed),
             "--decisions", str(decisions), "--critique", "stub", "--workers", workers],
        )
        assert result.exit_code == 0
        outputs.append((kept.read_bytes(), removed.read_bytes(), decisions.read_bytes()))
    assert outputs[0] == outputs[1] == outputs[2]


def _peak_rss_validating(corpus_path: str) -> int:
    """Run the validate command in a child process; return its peak RSS in KiB."""
    code = (
        "import resource, sys\n"
        "from click.testing import CliRunner\n"
        "from trajkit.cli import main\n"
        f"result = CliRunner().invoke(main, ['validate', {corpus_path!r}])\n"
        "assert result.exit_code == 0, result.output\n"
        "print(resource.getrusage(resource.RUSAGE_SELF).ru_maxrss)\n"
    )
    out = subprocess.run([sys.executable, "-c", code], capture_output=True, text=True, check=True)
    return int(out.stdout.strip())


def test_validate_streams_bounded_memory(tmp_path):
    line = serialize_trajectory(next(iter(random_corpus(1, seed=5)))) + "\n"

    small = tmp_path / "small.jsonl"
    small.write_text(line)

    large = tmp_path / "large.jsonl"
    with open(large, "w", encoding="utf-8") as fh:
        chunk = line * 10_000
        for _ in range(100):
            fh.write(chunk)
    assert large.stat().st_size > 100 * 1024 * 1024  # genuinely larger than any RSS budget

    small_peak = _peak_rss_validating(str(small))
    large_peak = _peak_rss_validating(str(large))
    assert large_peak < 10 * small_peak


def test_agreement_reporting(tmp_path):
    decisions = tmp_path / "decisions.jsonl"
    audit = tmp_path / "audit.jsonl"
    decisions.write_text(
        "".join(json.dumps({"trajectory_id": f"t{i}", "verdict": "keep"}) + "\n" for i in range(150))
    )
    audit.write_text(
        "".join(
            json.dumps({"trajectory_id": f"t{i}", "human_verdict": "keep" if i < 128 else "remove"}) + "\n"
            for i in range(150)
        )
    )
    result = CliRunner().invoke(cli_main, ["audit", str(decisions), str(audit)])
    assert result.exit_code == 0
    assert "agreement: 85.3% (128/150)" in result.output
