import type { Span } from "./types.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

/**
 * Render training text with trainable spans highlighted.
 *
 * The server-provided offsets are used verbatim; the client never
 * recomputes masks. Any text not covered by a span (defensive case only)
 * is emitted unhighlighted.
 */
export function highlightSpans(text: string, spans: Span[]): string {
  const parts: string[] = [];
  let cursor = 0;
  for (const span of spans) {
    if (span.start > cursor) {
      parts.push(escapeHtml(text.slice(cursor, span.start)));
    }
    const piece = escapeHtml(text.slice(span.start, span.end));
    parts.push(span.trainable ? `<mark class="trainable">${piece}</mark>` : piece);
    cursor = span.end;
  }
  if (cursor < text.length) {
    parts.push(escapeHtml(text.slice(cursor)));
  }
  return parts.join("");
}
