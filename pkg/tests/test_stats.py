import json

from trajkit import parse_trajectory
from trajkit.stats import CorpusStats, compute_stats, observe, render_report
from trajkit.synth import random_corpus
from trajkit.validation import finding


def test_single_record_stats(sleep_stats_text):
    t = parse_trajectory(sleep_stats_text)
    stats = compute_stats([t])
    assert stats.total == 1
    assert stats.multi_turn == 1
    assert stats.single_turn == 0
    assert stats.mean_steps_multi_turn == 2.0
    assert stats.tool_names == {"get_sleep_stats"}


def test_observe_findings_and_domains(sleep_stats_text):
    t = parse_trajectory(sleep_stats_text)
    t.extensions["domain"] = "health"
    stats = CorpusStats()
    observe(stats, t, [finding("MISSING_ID", "$", "x"), finding("MISSING_ID", "$", "y")])
    assert stats.domains == {"health": 1}
    assert stats.finding_histogram == {"MISSING_ID": 2}


def test_merge_is_associative_with_identity():
    corpus = list(random_corpus(30, seed=9))
    a = compute_stats(corpus[:10])
    b = compute_stats(corpus[10:20])
    c = compute_stats(corpus[20:])
    whole = compute_stats(corpus)
    left = a.merge(b).merge(c)
    right = a.merge(b.merge(c))
    assert left.to_obj() == right.to_obj() == whole.to_obj()
    assert CorpusStats().merge(whole).to_obj() == whole.to_obj()


def test_counts_partition_total():
    corpus = random_corpus(100, seed=3)
    stats = compute_stats(corpus)
    assert stats.single_turn + stats.multi_turn == stats.total == 100


def test_to_from_obj_round_trip():
    stats = compute_stats(random_corpus(25, seed=5))
    restored = CorpusStats.from_obj(stats.to_obj())
    assert restored.to_obj() == stats.to_obj()


def test_json_report_is_valid_json():
    stats = compute_stats(random_corpus(10, seed=7))
    obj = json.loads(render_report(stats, "json"))
    assert obj["total"] == 10


def test_markdown_report_exact_lines():
    stats = CorpusStats(total=10, single_turn=6, multi_turn=4, multi_turn_steps=10)
    report = render_report(stats, "markdown")
    assert "single-turn: 6 (60.0%)" in report
    assert "multi-turn: 4 (40.0%)" in report
    assert "mean steps (multi-turn): 2.5" in report


def test_markdown_report_empty_corpus():
    report = render_report(CorpusStats(), "markdown")
    assert "single-turn: 0 (n/a)" in report
    assert "mean steps (multi-turn): n/a" in report
    assert "| (none) | 0 |" in report
