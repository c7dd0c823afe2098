import { clearCache, clearCacheRecord, submitPrediction } from "./api.js";
import {
  renderErrorBanner,
  renderResults,
  renderToast,
  TableOptions,
} from "./render.js";
import { initialState, RequestTracker } from "./state.js";
import { FilterTab, ModelId } from "./types.js";

const state = initialState();
const tracker = new RequestTracker();

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function tableOptions(): TableOptions {
  return {
    sortKey: state.sortKey,
    sortDescending: state.sortDescending,
    searchQuery: state.searchQuery,
  };
}

function paint(): void {
  el("banner").innerHTML = renderErrorBanner(state.errorBanner, true);
  el("results").innerHTML = state.lastResponse
    ? renderResults(state.lastResponse, tableOptions())
    : `<p class="empty-state">upload a feature file to begin</p>`;
  const hashInput = el<HTMLInputElement>("cache-hash");
  if (state.lastResponse && !hashInput.value) {
    hashInput.value = state.lastResponse.file_sha256;
  }
  wireTableControls();
}

function wireTableControls(): void {
  for (const th of el("results").querySelectorAll<HTMLElement>("th[data-sort]")) {
    th.addEventListener("click", () => {
      const key = th.dataset.sort as "name" | "probability";
      if (state.sortKey === key) {
        state.sortDescending = !state.sortDescending;
      } else {
        state.sortKey = key;
        state.sortDescending = key === "probability";
      }
      paint();
    });
  }
}

async function submit(): Promise<void> {
  if (!state.file) {
    state.errorBanner = "choose a feature file first";
    paint();
    return;
  }
  state.errorBanner = "";
  const token = tracker.begin(state.tab);
  el("submit").setAttribute("disabled", "true");
  try {
    const result = await submitPrediction(state.file, state.model, state.tab);
    if (!tracker.isCurrent(state.tab, token)) {
      return; // a newer request for this tab superseded us
    }
    if (result.body) {
      state.lastResponse = result.body;
      state.errorBanner = "";
      const hashInput = el<HTMLInputElement>("cache-hash");
      hashInput.value = result.body.file_sha256;
    } else {
      state.errorBanner = `server replied ${result.status}: ${result.detail}`;
    }
  } catch (err) {
    if (tracker.isCurrent(state.tab, token)) {
      state.errorBanner = `network failure: ${String(err)}`;
    }
  } finally {
    el("submit").removeAttribute("disabled");
    paint();
  }
}

function toast(message: string, ok: boolean): void {
  const node = el("toast");
  node.innerHTML = renderToast(message, ok);
  setTimeout(() => {
    node.innerHTML = "";
  }, 4000);
}

function wire(): void {
  el<HTMLInputElement>("file-input").addEventListener("change", (event) => {
    const input = event.target as HTMLInputElement;
    state.file = input.files && input.files[0] ? input.files[0] : null;
  });
  el<HTMLSelectElement>("model-select").addEventListener("change", (event) => {
    state.model = (event.target as HTMLSelectElement).value as ModelId;
  });
  for (const tab of ["all", "high", "sure"] as FilterTab[]) {
    el(`tab-${tab}`).addEventListener("click", () => {
      state.tab = tab;
      for (const other of ["all", "high", "sure"]) {
        el(`tab-${other}`).classList.toggle("active", other === tab);
      }
      void submit(); // each tab re-queries its own endpoint
    });
  }
  el("submit").addEventListener("click", () => void submit());
  el<HTMLInputElement>("search").addEventListener("input", (event) => {
    state.searchQuery = (event.target as HTMLInputElement).value;
    paint();
  });
  el("clear-record").addEventListener("click", async () => {
    const hash = el<HTMLInputElement>("cache-hash").value.trim();
    const result = await clearCacheRecord(hash);
    if (result.body) {
      toast(`cleared ${result.body.removed} cache entr(ies)`, true);
    } else {
      toast(`clear failed: ${result.status} ${result.detail}`, false);
    }
  });
  el("clear-all").addEventListener("click", async () => {
    const result = await clearCache();
    if (result.body) {
      toast(`evicted ${result.body.evicted} cache entr(ies)`, true);
    } else {
      toast(`clear failed: ${result.status} ${result.detail}`, false);
    }
  });
  paint();
}

document.addEventListener("DOMContentLoaded", wire);
