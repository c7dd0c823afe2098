import { FilterTab, ModelId, PredictionResponse } from "./types.js";

export interface UiState {
  model: ModelId;
  file: File | null;
  tab: FilterTab;
  lastResponse: PredictionResponse | null;
  errorBanner: string;
  sortKey: "probability" | "name";
  sortDescending: boolean;
  searchQuery: string;
}

export function initialState(): UiState {
  return {
    model: "gbdtfn",
    file: null,
    tab: "all",
    lastResponse: null,
    errorBanner: "",
    sortKey: "probability",
    sortDescending: true,
    searchQuery: "",
  };
}

/**
 * One in-flight request per tab: each submission takes a fresh token and
 * only the latest token's response may be rendered.
 */
export class RequestTracker {
  private latest = new Map<FilterTab, number>();
  private counter = 0;

  begin(tab: FilterTab): number {
    this.counter += 1;
    this.latest.set(tab, this.counter);
    return this.counter;
  }

  isCurrent(tab: FilterTab, token: number): boolean {
    return this.latest.get(tab) === token;
  }
}
