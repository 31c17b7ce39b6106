import { ApiClient } from "./api.js";
import { DecisionQueue } from "./queue.js";
import type { TrajectoryList, TrajectoryListItem, Verdict } from "./types.js";
import { formatState, parseState, UiState } from "./urlState.js";
import { renderConnectionBanner, renderDetailView, renderListView } from "./views.js";

const api = new ApiClient();
const queue = new DecisionQueue(api);

// last successful list response; keeps the list usable while offline
let cachedList: TrajectoryList | null = null;
let offline = false;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function currentState(): UiState {
  return parseState(window.location.hash);
}

function navigate(state: UiState): void {
  window.location.hash = formatState(state);
}

async function refreshList(state: UiState): Promise<void> {
  try {
    cachedList = await api.listTrajectories({
      offset: state.offset,
      limit: state.limit,
      verdict: state.verdict || undefined,
    });
    offline = false;
  } catch {
    offline = true;
  }
  el("banner").innerHTML = renderConnectionBanner(offline, queue.pendingCount);
  if (cachedList) {
    el("list").innerHTML = renderListView(cachedList.items, cachedList.total);
    const page = Math.floor(cachedList.offset / state.limit) + 1;
    const pages = Math.max(1, Math.ceil(cachedList.total / state.limit));
    el("page-info").textContent = `page ${page} of ${pages} (${cachedList.total} records)`;
  }
  const retry = document.getElementById("retry-button");
  if (retry) {
    retry.addEventListener("click", async () => {
      await queue.flush();
      await render();
    });
  }
}

async function refreshDetail(state: UiState): Promise<void> {
  const container = el("detail");
  if (!state.id) {
    container.innerHTML = "";
    el("decision-form").hidden = true;
    return;
  }
  try {
    const detail = await api.getTrajectory(state.id);
    container.innerHTML = renderDetailView(detail);
    el("decision-form").hidden = false;
    el<HTMLInputElement>("decision-id").value = detail.id;
    for (const locator of container.querySelectorAll<HTMLAnchorElement>(".finding-locator")) {
      locator.addEventListener("click", (event) => {
        event.preventDefault();
        el("raw-record").scrollIntoView({ behavior: "smooth" });
      });
    }
  } catch {
    container.innerHTML = `<p class="error">Could not load trajectory ${state.id}.</p>`;
    el("decision-form").hidden = true;
  }
}

async function render(): Promise<void> {
  const state = currentState();
  el<HTMLSelectElement>("verdict-filter").value = state.verdict;
  await refreshList(state);
  await refreshDetail(state);
}

function wireControls(): void {
  el<HTMLSelectElement>("verdict-filter").addEventListener("change", (event) => {
    const verdict = (event.target as HTMLSelectElement).value as UiState["verdict"];
    navigate({ ...currentState(), verdict, offset: 0 });
  });
  el("prev-page").addEventListener("click", () => {
    const state = currentState();
    navigate({ ...state, offset: Math.max(0, state.offset - state.limit) });
  });
  el("next-page").addEventListener("click", () => {
    const state = currentState();
    // the server clamps past-the-end offsets to the last page
    navigate({ ...state, offset: state.offset + state.limit });
  });
  el("decision-form").addEventListener("submit", async (event) => {
    event.preventDefault();
    const form: { trajectory_id: string; human_verdict: Verdict; reviewer: string; note: string } = {
      trajectory_id: el<HTMLInputElement>("decision-id").value,
      human_verdict: el<HTMLSelectElement>("decision-verdict").value as Verdict,
      reviewer: el<HTMLInputElement>("decision-reviewer").value,
      note: el<HTMLTextAreaElement>("decision-note").value,
    };
    const outcome = await queue.submit(form);
    const status = el("decision-status");
    if (outcome.status === "accepted") {
      status.textContent = "decision recorded";
      el<HTMLTextAreaElement>("decision-note").value = "";
      updateListItemInPlace(form.trajectory_id, form.human_verdict);
      await render();
    } else if (outcome.status === "rejected") {
      // keep the note text so the reviewer can correct and resubmit
      status.textContent = `rejected: ${outcome.message}`;
    } else {
      status.textContent = "offline: decision queued, use Retry to resubmit";
      el("banner").innerHTML = renderConnectionBanner(true, queue.pendingCount);
    }
  });
  window.addEventListener("hashchange", render);
}

function updateListItemInPlace(id: string, verdict: Verdict): void {
  if (!cachedList) return;
  const item = cachedList.items.find((it: TrajectoryListItem) => it.id === id);
  if (item) item.human_verdict = verdict;
}

wireControls();
void render();
