// All navigable UI state lives in the URL hash so views round-trip through
// reloads and can be shared; there is no other client persistence.

export interface UiState {
  offset: number;
  limit: number;
  verdict: "" | "keep" | "remove";
  id: string;
}

export const DEFAULT_STATE: UiState = { offset: 0, limit: 50, verdict: "", id: "" };

export function parseState(hash: string): UiState {
  const params = new URLSearchParams(hash.replace(/^#\??/, ""));
  const state = { ...DEFAULT_STATE };
  const offset = Number(params.get("offset"));
  if (Number.isInteger(offset) && offset > 0) state.offset = offset;
  const limit = Number(params.get("limit"));
  if (Number.isInteger(limit) && limit > 0) state.limit = limit;
  const verdict = params.get("verdict");
  if (verdict === "keep" || verdict === "remove") state.verdict = verdict;
  state.id = params.get("id") ?? "";
  return state;
}

export function formatState(state: UiState): string {
  const params = new URLSearchParams();
  if (state.offset !== DEFAULT_STATE.offset) params.set("offset", String(state.offset));
  if (state.limit !== DEFAULT_STATE.limit) params.set("limit", String(state.limit));
  if (state.verdict) params.set("verdict", state.verdict);
  if (state.id) params.set("id", state.id);
  const qs = params.toString();
  return qs ? `#${qs}` : "#";
}
