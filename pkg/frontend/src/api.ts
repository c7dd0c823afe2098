import { FilterTab, ModelId, PredictionResponse, TAB_ENDPOINTS } from "./types.js";

export interface ApiResult<T> {
  status: number;
  body: T | null;
  detail: string;
}

async function parse<T>(res: Response): Promise<ApiResult<T>> {
  let body: unknown = null;
  try {
    body = await res.json();
  } catch {
    body = null;
  }
  const detail =
    body && typeof body === "object" && "detail" in body
      ? String((body as { detail: unknown }).detail)
      : "";
  return { status: res.status, body: res.ok ? (body as T) : null, detail };
}

/** POSTs the selected file to the endpoint matching the active tab. */
export async function submitPrediction(
  file: File | Blob,
  model: ModelId,
  tab: FilterTab,
  base = ""
): Promise<ApiResult<PredictionResponse>> {
  const form = new FormData();
  form.append("file", file);
  form.append("modelselect", model);
  const res = await fetch(base + TAB_ENDPOINTS[tab], { method: "POST", body: form });
  return parse<PredictionResponse>(res);
}

export async function clearCacheRecord(
  hash: string,
  base = ""
): Promise<ApiResult<{ removed: number }>> {
  const res = await fetch(
    `${base}/api/clear-cache-record?hash=${encodeURIComponent(hash)}`
  );
  return parse(res);
}

export async function clearCache(base = ""): Promise<ApiResult<{ evicted: number }>> {
  const res = await fetch(`${base}/api/clear-cache`, { method: "POST" });
  return parse(res);
}
