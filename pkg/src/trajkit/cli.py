"""Command-line entry point wiring the modules into streaming pipelines.

Exit codes: 0 success, 1 record-level failures (or a failing verdict), 2
I/O or configuration errors.
"""

from __future__ import annotations

import json
import sys
from concurrent.futures import ThreadPoolExecutor
from typing import Any

import click

from . import convert as convert_mod
from . import stats as stats_mod
from .critique import (
    EvaluatorConfig,
    HttpEvaluator,
    StubEvaluator,
    compute_agreement,
    critique,
    decide,
    unscoreable_result,
)
from .errors import InputError, RecordSyntaxError, SchemaError, TrajkitError
from .render import SIMPLE, TemplateSpec, render_alpaca, render_chat, render_sharegpt
from .schema import (
    dumps_compact,
    iter_jsonl,
    parse_legacy_trajectory,
    parse_trajectory,
    serialize_trajectory,
    trajectory_from_obj,
)
from .tooleval import evaluate_corpus
from .validation import ERROR, ValidationPolicy, run_checks, severity_at_least


def _load_template(name_or_path: str) -> TemplateSpec:
    if name_or_path == "simple":
        return SIMPLE
    try:
        return TemplateSpec.from_file(name_or_path)
    except FileNotFoundError:
        raise click.exceptions.Exit(2)


def _load_policy(path: str | None) -> ValidationPolicy:
    if not path:
        return ValidationPolicy()
    try:
        return ValidationPolicy.from_file(path)
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        click.echo(f"error: bad policy file: {exc}", err=True)
        raise click.exceptions.Exit(2)


@click.group()
def main() -> None:
    """Agent trajectory data toolchain."""


@main.command("convert")
@click.argument("input_path", type=click.Path(exists=True, dir_okay=False))
@click.argument("output_path", type=click.Path(dir_okay=False))
@click.option("--from", "source_format", type=click.Choice(["uf1", "uf2"]), default="uf1", show_default=True)
@click.option("--errors", "errors_path", type=click.Path(dir_okay=False), default=None, help="Sidecar JSONL for per-record failures.")
def cmd_convert(input_path: str, output_path: str, source_format: str, errors_path: str | None) -> None:
    """Convert a corpus to canonical message-list lines."""
    failures = 0
    errors_fh = open(errors_path, "w", encoding="utf-8") if errors_path else None
    try:
        with open(output_path, "w", encoding="utf-8") as out:
            for lineno, line in enumerate(iter_jsonl(input_path), start=1):
                try:
                    if source_format == "uf1":
                        upgraded, _ = convert_mod.upgrade_legacy(parse_legacy_trajectory(line))
                    else:
                        upgraded = parse_trajectory(line)
                    out.write(serialize_trajectory(upgraded) + "\n")
                except (RecordSyntaxError, SchemaError, TrajkitError) as exc:
                    failures += 1
                    if errors_fh:
                        errors_fh.write(dumps_compact({"line": lineno, "error": str(exc)}) + "\n")
    finally:
        if errors_fh:
            errors_fh.close()
    sys.exit(1 if failures else 0)


@main.command("validate")
@click.argument("input_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--policy", "policy_path", type=click.Path(dir_okay=False), default=None)
@click.option("--report", "report_path", type=click.Path(dir_okay=False), default=None)
@click.option("--template", "template_name", default="simple", show_default=True)
def cmd_validate(input_path: str, policy_path: str | None, report_path: str | None, template_name: str) -> None:
    """Run rule checks over a corpus; exit 1 if any record fails the policy gate."""
    policy = _load_policy(policy_path)
    tpl = _load_template(template_name)
    failed = 0
    report_fh = open(report_path, "w", encoding="utf-8") if report_path else None
    try:
        for line in iter_jsonl(input_path):
            try:
                obj = json.loads(line)
            except json.JSONDecodeError:
                obj = None
            if obj is None:
                findings = [{"code": "SYNTAX_ERROR", "severity": ERROR, "path": "$", "message": "record is not valid JSON"}]
                verdict = "remove"
                tid = ""
            else:
                found = run_checks(obj, tpl, policy)
                verdict = "remove" if severity_at_least(found, policy.fail_on) else "keep"
                findings = [f.to_obj() for f in found]
                tid = obj.get("unique_trajectory_id", "") if isinstance(obj, dict) else ""
            if verdict == "remove":
                failed += 1
            if report_fh:
                report_fh.write(dumps_compact({"trajectory_id": tid, "verdict": verdict, "findings": findings}) + "\n")
    finally:
        if report_fh:
            report_fh.close()
    sys.exit(1 if failed else 0)


def _load_overrides(path: str | None) -> dict[str, str]:
    """Latest human verdict per trajectory id from a decision log."""
    overrides: dict[str, str] = {}
    if not path:
        return overrides
    for line in iter_jsonl(path):
        obj = json.loads(line)
        tid = obj.get("trajectory_id")
        verdict = obj.get("human_verdict")
        if isinstance(tid, str) and verdict in ("keep", "remove"):
            overrides[tid] = verdict
    return overrides


@main.command("filter")
@click.argument("input_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--kept", "kept_path", type=click.Path(dir_okay=False), required=True)
@click.option("--removed", "removed_path", type=click.Path(dir_okay=False), required=True)
@click.option("--decisions", "decisions_path", type=click.Path(dir_okay=False), default=None)
@click.option("--policy", "policy_path", type=click.Path(dir_okay=False), default=None)
@click.option("--critique", "critique_mode", type=click.Choice(["off", "stub", "endpoint"]), default="off", show_default=True)
@click.option("--evaluator-config", "evaluator_config_path", type=click.Path(dir_okay=False), default=None)
@click.option("--overrides", "overrides_path", type=click.Path(dir_okay=False), default=None, help="Review decision log applied at export.")
@click.option("--workers", type=int, default=1, show_default=True)
def cmd_filter(
    input_path: str,
    kept_path: str,
    removed_path: str,
    decisions_path: str | None,
    policy_path: str | None,
    critique_mode: str,
    evaluator_config_path: str | None,
    overrides_path: str | None,
    workers: int,
) -> None:
    """Partition a corpus into kept/removed with rule and critique gates."""
    policy = _load_policy(policy_path)
    overrides = _load_overrides(overrides_path)

    cfg = EvaluatorConfig()
    evaluator: Any = None
    if critique_mode == "stub":
        evaluator = StubEvaluator()
    elif critique_mode == "endpoint":
        if not evaluator_config_path:
            click.echo("error: --critique endpoint requires --evaluator-config", err=True)
            sys.exit(2)
        cfg = EvaluatorConfig.from_file(evaluator_config_path)
        evaluator = HttpEvaluator(cfg)

    def process(line: str) -> dict[str, Any]:
        try:
            obj = json.loads(line)
        except json.JSONDecodeError:
            return {
                "trajectory_id": "",
                "verdict": "remove",
                "reasons": ["SYNTAX_ERROR"],
                "line": line,
                "findings": [{"code": "SYNTAX_ERROR", "severity": ERROR, "path": "$", "message": "record is not valid JSON"}],
            }
        findings = run_checks(obj, SIMPLE, policy)
        result: dict[str, Any] = {"findings": [f.to_obj() for f in findings]}
        crit = None
        if evaluator is not None:
            try:
                t = trajectory_from_obj(obj, strict=False)
                crit = critique(t, (), cfg, evaluator, findings=findings)
                result["scores"] = crit.scores.as_dict()
                result["rationale"] = crit.rationale
            except (SchemaError, TrajkitError) as exc:
                crit = unscoreable_result(getattr(evaluator, "evaluator_id", ""), str(exc))
                result["scores"] = crit.scores.as_dict()
        decision = decide(crit, findings, fail_on=policy.fail_on)
        tid = obj.get("unique_trajectory_id", "") if isinstance(obj, dict) else ""
        canonical = None
        try:
            canonical = serialize_trajectory(trajectory_from_obj(obj, strict=False))
        except (SchemaError, TrajkitError):
            pass
        result.update(
            {
                "trajectory_id": tid if isinstance(tid, str) else "",
                "verdict": decision.verdict,
                "reasons": decision.reasons,
                "line": canonical if canonical is not None else line,
            }
        )
        return result

    lines = iter_jsonl(input_path)
    if workers > 1:
        executor = ThreadPoolExecutor(max_workers=workers)
        results = executor.map(process, lines, chunksize=64)
    else:
        executor = None
        results = map(process, lines)

    decisions_fh = open(decisions_path, "w", encoding="utf-8") if decisions_path else None
    try:
        with open(kept_path, "w", encoding="utf-8") as kept, open(removed_path, "w", encoding="utf-8") as removed:
            for res in results:
                verdict = res["verdict"]
                overridden = False
                if res["trajectory_id"] in overrides:
                    verdict = overrides[res["trajectory_id"]]
                    overridden = verdict != res["verdict"]
                (kept if verdict == "keep" else removed).write(res["line"] + "\n")
                if decisions_fh:
                    record = {
                        "trajectory_id": res["trajectory_id"],
                        "verdict": verdict,
                        "pipeline_verdict": res["verdict"],
                        "reasons": res["reasons"] + (["human_override"] if overridden else []),
                        "findings": res["findings"],
                    }
                    if "scores" in res:
                        record["scores"] = res["scores"]
                    decisions_fh.write(dumps_compact(record) + "\n")
    finally:
        if decisions_fh:
            decisions_fh.close()
        if executor:
            executor.shutdown()
    sys.exit(0)


@main.command("render")
@click.argument("input_path", type=click.Path(exists=True, dir_okay=False))
@click.argument("output_path", type=click.Path(dir_okay=False))
@click.option("--template", "template_name", default="simple", show_default=True)
@click.option("--format", "render_format", type=click.Choice(["chat", "alpaca", "sharegpt"]), default="chat", show_default=True)
def cmd_render(input_path: str, output_path: str, template_name: str, render_format: str) -> None:
    """Render a corpus to training-ready samples."""
    tpl = _load_template(template_name)
    failures = 0
    with open(output_path, "w", encoding="utf-8") as out:
        for line in iter_jsonl(input_path):
            try:
                t = parse_trajectory(line)
                if render_format == "chat":
                    out.write(dumps_compact(render_chat(t, tpl).to_obj()) + "\n")
                elif render_format == "alpaca":
                    for pair in render_alpaca(t, tpl):
                        out.write(dumps_compact(pair) + "\n")
                else:
                    out.write(dumps_compact(render_sharegpt(t, tpl)) + "\n")
            except (RecordSyntaxError, SchemaError, TrajkitError):
                failures += 1
    sys.exit(1 if failures else 0)


@main.command("eval")
@click.argument("pred_path", type=click.Path(exists=True, dir_okay=False))
@click.argument("gold_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--report", "report_path", type=click.Path(dir_okay=False), default=None)
@click.option("--markdown", "markdown_path", type=click.Path(dir_okay=False), default=None)
@click.option("--tools", "tools_path", type=click.Path(exists=True, dir_okay=False), default=None)
def cmd_eval(pred_path: str, gold_path: str, report_path: str | None, markdown_path: str | None, tools_path: str | None) -> None:
    """Score predicted tool calls against gold annotations (API level)."""
    try:
        report = evaluate_corpus(pred_path, gold_path, tools_path)
    except InputError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    if report_path:
        with open(report_path, "w", encoding="utf-8") as fh:
            json.dump(report.to_obj(), fh, indent=2)
            fh.write("\n")
    if markdown_path:
        with open(markdown_path, "w", encoding="utf-8") as fh:
            fh.write(report.to_markdown())
    click.echo(f"P_api {report.p_api:.3f} / R_api {report.r_api:.3f} / F1_api {report.f1_api:.3f}")
    sys.exit(0)


@main.command("stats")
@click.argument("input_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--report", "report_path", type=click.Path(dir_okay=False), default=None)
@click.option("--format", "report_format", type=click.Choice(["json", "markdown"]), default="json", show_default=True)
def cmd_stats(input_path: str, report_path: str | None, report_format: str) -> None:
    """Compute corpus statistics in one streaming pass."""
    stats = stats_mod.CorpusStats()
    for line in iter_jsonl(input_path):
        try:
            obj = json.loads(line)
            t = trajectory_from_obj(obj, strict=False)
        except (json.JSONDecodeError, SchemaError):
            stats.unparseable += 1
            continue
        stats_mod.observe(stats, t, run_checks(obj))
    text = stats_mod.render_report(stats, report_format)
    if report_path:
        with open(report_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        click.echo(text, nl=False)
    sys.exit(0)


@main.command("inspect")
@click.argument("input_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--id", "trajectory_id", required=True)
@click.option("--template", "template_name", default="simple", show_default=True)
def cmd_inspect(input_path: str, trajectory_id: str, template_name: str) -> None:
    """Print staged views of one record: raw, canonical, findings, rendered."""
    tpl = _load_template(template_name)
    for line in iter_jsonl(input_path):
        try:
            obj = json.loads(line)
        except json.JSONDecodeError:
            continue
        if not isinstance(obj, dict) or obj.get("unique_trajectory_id") != trajectory_id:
            continue
        t = trajectory_from_obj(obj, strict=False)
        findings = run_checks(obj, tpl)
        click.echo("== raw ==")
        click.echo(line)
        click.echo("== unified (canonical) ==")
        click.echo(serialize_trajectory(t))
        click.echo("== findings ==")
        if findings:
            for f in findings:
                click.echo(f"{f.severity} {f.code} {f.path}: {f.message}")
        else:
            click.echo("(none)")
        click.echo("== rendered (>>>trainable<<<) ==")
        sample = render_chat(t, tpl)
        marked = []
        for span in sample.spans:
            piece = sample.text[span.start : span.end]
            marked.append(f">>>{piece}<<<" if span.trainable else piece)
        click.echo("".join(marked))
        sys.exit(0)
    click.echo(f"error: trajectory {trajectory_id!r} not found", err=True)
    sys.exit(1)


@main.command("audit")
@click.argument("decisions_path", type=click.Path(exists=True, dir_okay=False))
@click.argument("audit_path", type=click.Path(exists=True, dir_okay=False))
def cmd_audit(decisions_path: str, audit_path: str) -> None:
    """Agreement rate between pipeline verdicts and human audit labels."""
    verdicts: dict[str, str] = {}
    for line in iter_jsonl(decisions_path):
        obj = json.loads(line)
        tid = obj.get("trajectory_id")
        if isinstance(tid, str):
            verdicts[tid] = obj.get("verdict", "")
    entries = [json.loads(line) for line in iter_jsonl(audit_path)]
    agreement = compute_agreement(verdicts, entries)
    click.echo(f"agreement: {agreement.percent()} ({agreement.matches}/{agreement.total})")
    sys.exit(0)


@main.command("review-serve")
@click.argument("corpus_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--decisions-log", "decisions_log", type=click.Path(dir_okay=False), required=True)
@click.option("--addr", default="127.0.0.1:8731", show_default=True)
@click.option("--ui-dir", "ui_dir", type=click.Path(file_okay=False), default=None)
def cmd_review_serve(corpus_path: str, decisions_log: str, addr: str, ui_dir: str | None) -> None:
    """Serve the review API (and the static UI bundle when present)."""
    import uvicorn

    from .server import create_app

    try:
        app = create_app(corpus_path, decisions_log, ui_dir=ui_dir)
    except OSError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    host, _, port = addr.partition(":")
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8731))


if __name__ == "__main__":
    main()
