import { BucketCounts, PredictionRecord, PredictionResponse, SummaryStats } from "./types.js";

const BUCKET_ORDER: (keyof BucketCounts)[] = ["safe", "low", "medium", "high", "sure"];
const BUCKET_LABELS: Record<keyof BucketCounts, string> = {
  safe: "< 0.5",
  low: "0.5–0.7",
  medium: "0.7–0.9",
  high: "0.9+",
  sure: "≈ 1.0",
};

export function esc(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function renderStatsLine(stats: SummaryStats): string {
  const bucketSum = BUCKET_ORDER.reduce((acc, key) => acc + stats.buckets[key], 0);
  return (
    `<p class="stats-line">` +
    `<span>total <strong>${stats.total}</strong></span>` +
    `<span>vulnerable <strong>${stats.vulnerable}</strong></span>` +
    `<span>safe <strong>${stats.safe}</strong></span>` +
    `<span>buckets sum <strong>${bucketSum}</strong></span>` +
    `</p>`
  );
}

/** Vertical bar chart of the confidence buckets, pure SVG. */
export function renderBarChart(buckets: BucketCounts): string {
  const width = 320;
  const height = 180;
  const plotHeight = 130;
  const barWidth = 44;
  const gap = 16;
  const max = Math.max(1, ...BUCKET_ORDER.map((key) => buckets[key]));
  const bars = BUCKET_ORDER.map((key, i) => {
    const value = buckets[key];
    const h = Math.round((value / max) * plotHeight);
    const x = 10 + i * (barWidth + gap);
    const y = 20 + (plotHeight - h);
    return (
      `<rect x="${x}" y="${y}" width="${barWidth}" height="${h}" class="bar bar-${key}"></rect>` +
      `<text x="${x + barWidth / 2}" y="${y - 4}" text-anchor="middle" class="bar-value">${value}</text>` +
      `<text x="${x + barWidth / 2}" y="${height - 8}" text-anchor="middle" class="bar-label">${BUCKET_LABELS[key]}</text>`
    );
  }).join("");
  return (
    `<svg viewBox="0 0 ${width} ${height}" role="img" aria-label="confidence buckets" class="bar-chart">` +
    bars +
    `</svg>`
  );
}

function arcPath(cx: number, cy: number, r: number, startFrac: number, endFrac: number): string {
  const start = 2 * Math.PI * (startFrac - 0.25);
  const end = 2 * Math.PI * (endFrac - 0.25);
  const x1 = cx + r * Math.cos(start);
  const y1 = cy + r * Math.sin(start);
  const x2 = cx + r * Math.cos(end);
  const y2 = cy + r * Math.sin(end);
  const large = endFrac - startFrac > 0.5 ? 1 : 0;
  return `M ${cx} ${cy} L ${x1.toFixed(2)} ${y1.toFixed(2)} A ${r} ${r} 0 ${large} 1 ${x2.toFixed(2)} ${y2.toFixed(2)} Z`;
}

/** Two-slice pie: vulnerable vs safe, sized from the stats alone. */
export function renderPieChart(stats: SummaryStats): string {
  const size = 160;
  const cx = size / 2;
  const cy = size / 2;
  const r = 64;
  if (stats.total === 0) {
    return `<p class="empty-state">no rows to chart</p>`;
  }
  const vulnFrac = stats.vulnerable / stats.total;
  let slices: string;
  if (stats.vulnerable === 0 || stats.safe === 0) {
    const cls = stats.vulnerable === 0 ? "slice-safe" : "slice-vulnerable";
    slices = `<circle cx="${cx}" cy="${cy}" r="${r}" class="${cls}"></circle>`;
  } else {
    slices =
      `<path d="${arcPath(cx, cy, r, 0, vulnFrac)}" class="slice-vulnerable"></path>` +
      `<path d="${arcPath(cx, cy, r, vulnFrac, 1)}" class="slice-safe"></path>`;
  }
  const pct = (100 * vulnFrac).toFixed(1);
  return (
    `<svg viewBox="0 0 ${size} ${size}" role="img" aria-label="vulnerable share" class="pie-chart">` +
    slices +
    `</svg>` +
    `<p class="pie-legend">vulnerable ${stats.vulnerable} (${pct}%) / safe ${stats.safe}</p>`
  );
}

export interface TableOptions {
  sortKey: "probability" | "name";
  sortDescending: boolean;
  searchQuery: string;
}

export const DEFAULT_TABLE_OPTIONS: TableOptions = {
  sortKey: "probability",
  sortDescending: true,
  searchQuery: "",
};

export function sortAndFilter(
  records: PredictionRecord[],
  options: TableOptions
): PredictionRecord[] {
  const query = options.searchQuery.trim().toLowerCase();
  const kept = query
    ? records.filter((r) => r.name.toLowerCase().includes(query))
    : [...records];
  kept.sort((a, b) => {
    const cmp =
      options.sortKey === "probability"
        ? a.probability - b.probability
        : a.name.localeCompare(b.name);
    return options.sortDescending ? -cmp : cmp;
  });
  return kept;
}

export function renderTable(
  records: PredictionRecord[],
  options: TableOptions = DEFAULT_TABLE_OPTIONS
): string {
  const rows = sortAndFilter(records, options);
  if (rows.length === 0) {
    return `<p class="empty-state">no records match</p>`;
  }
  const body = rows
    .map(
      (r) =>
        `<tr><td>${esc(r.name)}</td>` +
        `<td class="num">${r.probability.toFixed(6)}</td>` +
        `<td class="num">${r.predicted}</td></tr>`
    )
    .join("");
  const arrow = options.sortDescending ? "↓" : "↑";
  const mark = (key: string) => (options.sortKey === key ? ` ${arrow}` : "");
  return (
    `<table class="records">` +
    `<thead><tr>` +
    `<th data-sort="name">name${mark("name")}</th>` +
    `<th data-sort="probability">probability${mark("probability")}</th>` +
    `<th>predicted</th>` +
    `</tr></thead><tbody>${body}</tbody></table>`
  );
}

export function renderCacheBadge(cacheHit: boolean): string {
  return cacheHit
    ? `<span class="badge badge-cache">served from cache</span>`
    : "";
}

export function renderResults(response: PredictionResponse, options?: TableOptions): string {
  return (
    `<div class="results">` +
    `<header>` +
    `<span class="badge badge-model">${response.model}</span>` +
    renderCacheBadge(response.cache_hit) +
    `<code class="sha">${esc(response.file_sha256)}</code>` +
    `</header>` +
    renderStatsLine(response.stats) +
    `<div class="charts">` +
    `<figure>${renderBarChart(response.stats.buckets)}<figcaption>confidence buckets</figcaption></figure>` +
    `<figure>${renderPieChart(response.stats)}<figcaption>vulnerable vs safe</figcaption></figure>` +
    `</div>` +
    renderTable(response.records, options) +
    `</div>`
  );
}

export function renderErrorBanner(message: string, retryable: boolean): string {
  if (!message) {
    return "";
  }
  const retry = retryable ? `<button class="retry">retry</button>` : "";
  return `<div class="banner banner-error">${esc(message)}${retry}</div>`;
}

export function renderToast(message: string, ok: boolean): string {
  return `<div class="toast ${ok ? "toast-ok" : "toast-error"}">${esc(message)}</div>`;
}
