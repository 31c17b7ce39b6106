"""Review API backing the human-curation UI.

One process serves both the JSON API and, when present, the built static UI
bundle.  Decisions are an append-only JSONL log replayed at startup;
exports elsewhere apply last-write-wins per trajectory id.
"""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Any

from fastapi import FastAPI, HTTPException
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .render import SIMPLE, render_chat
from .schema import iter_jsonl, serialize_trajectory, trajectory_from_obj
from .stats import CorpusStats, observe
from .validation import ValidationPolicy, run_checks, severity_at_least


class ReviewDecision(BaseModel):
    trajectory_id: str
    human_verdict: str
    reviewer: str = ""
    timestamp: str = ""
    note: str = ""


@dataclass
class ReviewRecord:
    trajectory_id: str
    raw: str
    unified: dict[str, Any]
    findings: list[dict[str, Any]]
    verdict: str
    rendered_text: str
    spans: list[dict[str, Any]]
    critique: dict[str, Any] | None = None


@dataclass
class ReviewStore:
    records: list[ReviewRecord] = field(default_factory=list)
    by_id: dict[str, ReviewRecord] = field(default_factory=dict)
    decisions: dict[str, dict[str, Any]] = field(default_factory=dict)
    stats: CorpusStats = field(default_factory=CorpusStats)


def _load_corpus(corpus_path: str, policy: ValidationPolicy) -> ReviewStore:
    store = ReviewStore()
    for line in iter_jsonl(corpus_path):
        try:
            obj = json.loads(line)
        except json.JSONDecodeError:
            store.stats.unparseable += 1
            continue
        findings = run_checks(obj, SIMPLE, policy)
        verdict = "remove" if severity_at_least(findings, policy.fail_on) else "keep"
        try:
            t = trajectory_from_obj(obj, strict=False)
            sample = render_chat(t, SIMPLE)
            rendered_text = sample.text
            spans = [{"start": s.start, "end": s.end, "trainable": s.trainable} for s in sample.spans]
            unified = json.loads(serialize_trajectory(t))
            tid = t.unique_trajectory_id
            observe(store.stats, t, findings)
        except Exception:
            rendered_text = ""
            spans = []
            unified = obj if isinstance(obj, dict) else {}
            tid = obj.get("unique_trajectory_id", "") if isinstance(obj, dict) else ""
        record = ReviewRecord(
            trajectory_id=tid,
            raw=line,
            unified=unified,
            findings=[f.to_obj() for f in findings],
            verdict=verdict,
            rendered_text=rendered_text,
            spans=spans,
        )
        store.records.append(record)
        store.by_id[record.trajectory_id] = record
    return store


def create_app(corpus_path: str, decisions_log: str, ui_dir: str | None = None, policy: ValidationPolicy | None = None) -> FastAPI:
    if not os.access(corpus_path, os.R_OK):
        raise OSError(f"corpus not readable: {corpus_path}")
    log_parent = os.path.dirname(os.path.abspath(decisions_log)) or "."
    if not os.access(log_parent, os.W_OK):
        raise OSError(f"decision log directory not writable: {log_parent}")

    store = _load_corpus(corpus_path, policy or ValidationPolicy())
    if os.path.exists(decisions_log):
        for line in iter_jsonl(decisions_log):
            obj = json.loads(line)
            tid = obj.get("trajectory_id")
            if isinstance(tid, str):
                store.decisions[tid] = obj

    write_lock = threading.Lock()
    app = FastAPI(title="trajectory review")

    @app.get("/api/trajectories")
    def list_trajectories(offset: int = 0, limit: int = 50, verdict: str | None = None) -> dict[str, Any]:
        records = store.records
        if verdict in ("keep", "remove"):
            records = [r for r in records if r.verdict == verdict]
        total = len(records)
        limit = max(1, min(limit, 500))
        if offset >= total:
            # clamp to the last page instead of returning an empty one
            offset = max(0, total - limit)
        page = records[offset : offset + limit]
        items = []
        for r in page:
            item: dict[str, Any] = {"id": r.trajectory_id, "verdict": r.verdict, "finding_count": len(r.findings)}
            if r.critique:
                item["scores"] = r.critique.get("scores")
            decision = store.decisions.get(r.trajectory_id)
            if decision:
                item["human_verdict"] = decision.get("human_verdict")
            items.append(item)
        return {"total": total, "offset": offset, "items": items}

    @app.get("/api/trajectory/{trajectory_id}")
    def get_trajectory(trajectory_id: str) -> dict[str, Any]:
        record = store.by_id.get(trajectory_id)
        if record is None:
            raise HTTPException(status_code=404, detail="unknown trajectory id")
        return {
            "id": record.trajectory_id,
            "raw": record.raw,
            "unified": record.unified,
            "findings": record.findings,
            "verdict": record.verdict,
            "critique": record.critique,
            "stages": {"rendered_text": record.rendered_text, "spans": record.spans},
            "decision": store.decisions.get(trajectory_id),
        }

    @app.post("/api/decision", status_code=201)
    def post_decision(decision: ReviewDecision) -> JSONResponse:
        if decision.human_verdict not in ("keep", "remove"):
            raise HTTPException(status_code=422, detail="human_verdict must be keep or remove")
        if decision.trajectory_id not in store.by_id:
            raise HTTPException(status_code=404, detail="unknown trajectory id")
        payload = decision.model_dump()
        if not payload["timestamp"]:
            payload["timestamp"] = datetime.now(timezone.utc).isoformat()
        with write_lock:
            with open(decisions_log, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(payload, separators=(",", ":")) + "\n")
                fh.flush()
                os.fsync(fh.fileno())
            store.decisions[decision.trajectory_id] = payload
        return JSONResponse(payload, status_code=201)

    @app.get("/api/stats")
    def get_stats() -> dict[str, Any]:
        return store.stats.to_obj()

    if ui_dir and os.path.isdir(ui_dir):
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
