import { escapeHtml, highlightSpans } from "./highlight.js";
import type { TrajectoryDetail, TrajectoryListItem } from "./types.js";

function verdictBadge(verdict: string, kind: "pipeline" | "human"): string {
  return `<span class="badge badge-${kind} badge-${escapeHtml(verdict)}">${escapeHtml(verdict)}</span>`;
}

function scoreCell(item: TrajectoryListItem): string {
  if (!item.scores) return "&mdash;";
  const s = item.scores;
  return escapeHtml(`${s.correctness}/${s.hallucination_freedom}/${s.tool_use}/${s.overall}`);
}

export function renderListView(items: TrajectoryListItem[], total: number): string {
  if (total === 0) {
    return `<p class="empty-state">No trajectories match the current filter.</p>`;
  }
  const rows = items
    .map((item) => {
      const human = item.human_verdict ? verdictBadge(item.human_verdict, "human") : "";
      return (
        `<tr data-id="${escapeHtml(item.id)}">` +
        `<td><a class="detail-link" href="#id=${encodeURIComponent(item.id)}">${escapeHtml(item.id)}</a></td>` +
        `<td>${verdictBadge(item.verdict, "pipeline")} ${human}</td>` +
        `<td>${scoreCell(item)}</td>` +
        `<td>${item.finding_count}</td>` +
        `</tr>`
      );
    })
    .join("");
  return (
    `<table class="trajectory-list">` +
    `<thead><tr><th>id</th><th>verdict</th><th>scores (c/h/t/o)</th><th>findings</th></tr></thead>` +
    `<tbody>${rows}</tbody></table>`
  );
}

export function renderDetailView(detail: TrajectoryDetail): string {
  const findings = detail.findings.length
    ? `<ul class="findings">` +
      detail.findings
        .map(
          (f) =>
            `<li><span class="severity-${escapeHtml(f.severity)}">${escapeHtml(f.severity)}</span> ` +
            `${escapeHtml(f.code)} ` +
            `<a class="finding-locator" href="#" data-path="${escapeHtml(f.path)}">${escapeHtml(f.path)}</a>: ` +
            `${escapeHtml(f.message)}</li>`,
        )
        .join("") +
      `</ul>`
    : `<p>(no findings)</p>`;

  const critique = detail.critique
    ? `<dl class="critique">` +
      `<dt>scores</dt><dd>${escapeHtml(JSON.stringify(detail.critique.scores))}</dd>` +
      `<dt>rationale</dt><dd>${escapeHtml(detail.critique.rationale)}</dd>` +
      `</dl>`
    : `<p class="placeholder">not critiqued</p>`;

  const decision = detail.decision
    ? `<p>human decision: ${verdictBadge(detail.decision.human_verdict, "human")}</p>`
    : "";

  return (
    `<section class="panel panel-raw"><h3>Raw record</h3>` +
    `<pre id="raw-record">${escapeHtml(detail.raw)}</pre></section>` +
    `<section class="panel panel-unified"><h3>Canonical unified form</h3>` +
    `<pre>${escapeHtml(JSON.stringify(detail.unified, null, 2))}</pre></section>` +
    `<section class="panel panel-findings"><h3>Findings &amp; critique</h3>${findings}${critique}${decision}</section>` +
    `<section class="panel panel-rendered"><h3>Rendered training text</h3>` +
    `<pre class="rendered">${highlightSpans(detail.stages.rendered_text, detail.stages.spans)}</pre></section>`
  );
}

export function renderConnectionBanner(visible: boolean, pendingCount: number): string {
  if (!visible) return "";
  const queued = pendingCount > 0 ? ` ${pendingCount} decision(s) queued for retry.` : "";
  return `<div class="banner banner-offline">Server unreachable; showing cached data.${queued} <button id="retry-button">Retry</button></div>`;
}
