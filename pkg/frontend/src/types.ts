export type ModelId = "dnnfn" | "dnnbb" | "gbdtfn" | "gbdtbb";

export type FilterTab = "all" | "high" | "sure";

export interface PredictionRecord {
  name: string;
  probability: number;
  predicted: 0 | 1;
}

export interface BucketCounts {
  safe: number;
  low: number;
  medium: number;
  high: number;
  sure: number;
}

export interface SummaryStats {
  total: number;
  vulnerable: number;
  safe: number;
  buckets: BucketCounts;
}

export interface PredictionResponse {
  file_sha256: string;
  model: ModelId;
  cache_hit: boolean;
  stats: SummaryStats;
  records: PredictionRecord[];
}

export interface ApiError {
  detail: string;
}

/** Maps each filter tab onto its prediction endpoint. */
export const TAB_ENDPOINTS: Record<FilterTab, string> = {
  all: "/api/all-list",
  high: "/api/high-conf-list",
  sure: "/api/sure-list",
};

export const MODEL_IDS: ModelId[] = ["dnnfn", "dnnbb", "gbdtfn", "gbdtbb"];
