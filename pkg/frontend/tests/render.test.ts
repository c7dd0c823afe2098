import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";

import {
  esc,
  renderBarChart,
  renderCacheBadge,
  renderErrorBanner,
  renderPieChart,
  renderResults,
  renderStatsLine,
  renderTable,
  sortAndFilter,
} from "../src/render.js";
import { PredictionResponse } from "../src/types.js";

const here = dirname(fileURLToPath(import.meta.url));
const fixture: PredictionResponse = JSON.parse(
  readFileSync(join(here, "..", "..", "fixtures", "prediction_response.sample.json"), "utf-8")
);

describe("renderResults on the shared fixture", () => {
  it("matches the snapshot", () => {
    expect(renderResults(fixture)).toMatchSnapshot();
  });

  it("renders table, bar chart and pie chart", () => {
    const html = renderResults(fixture);
    expect(html).toContain("<table");
    expect(html).toContain("bar-chart");
    expect(html).toContain("pie-chart");
  });

  it("shows every number straight from the response", () => {
    const html = renderResults(fixture);
    expect(html).toContain(`total <strong>${fixture.stats.total}</strong>`);
    expect(html).toContain(`vulnerable <strong>${fixture.stats.vulnerable}</strong>`);
    for (const record of fixture.records) {
      expect(html).toContain(record.name);
      expect(html).toContain(record.probability.toFixed(6));
    }
  });

  it("bucket sums in the legend equal the total", () => {
    const sum = Object.values(fixture.stats.buckets).reduce((a, b) => a + b, 0);
    expect(sum).toBe(fixture.stats.total);
    expect(renderStatsLine(fixture.stats)).toContain(
      `buckets sum <strong>${fixture.stats.total}</strong>`
    );
  });

  it("resubmission response shows the cache badge", () => {
    const cached = { ...fixture, cache_hit: true };
    expect(renderResults(cached)).toContain("served from cache");
    expect(renderResults(fixture)).not.toContain("served from cache");
    expect(renderCacheBadge(true)).toContain("badge-cache");
    expect(renderCacheBadge(false)).toBe("");
  });
});

describe("bar chart", () => {
  it("draws one bar per bucket with its count", () => {
    const svg = renderBarChart(fixture.stats.buckets);
    const bars = svg.match(/<rect /g) ?? [];
    expect(bars.length).toBe(5);
    for (const count of Object.values(fixture.stats.buckets)) {
      expect(svg).toContain(`>${count}</text>`);
    }
  });
});

describe("pie chart", () => {
  it("legend reflects vulnerable vs safe split", () => {
    const html = renderPieChart(fixture.stats);
    expect(html).toContain(`vulnerable ${fixture.stats.vulnerable}`);
    expect(html).toContain(`safe ${fixture.stats.safe}`);
  });

  it("all-safe upload renders a single safe slice", () => {
    const html = renderPieChart({
      total: 4,
      vulnerable: 0,
      safe: 4,
      buckets: { safe: 4, low: 0, medium: 0, high: 0, sure: 0 },
    });
    expect(html).toContain("slice-safe");
    expect(html).not.toContain("slice-vulnerable");
    expect(html).toContain("vulnerable 0 (0.0%)");
  });

  it("empty stats render the empty state", () => {
    const html = renderPieChart({
      total: 0,
      vulnerable: 0,
      safe: 0,
      buckets: { safe: 0, low: 0, medium: 0, high: 0, sure: 0 },
    });
    expect(html).toContain("empty-state");
  });
});

describe("table", () => {
  it("sorts by probability descending by default", () => {
    const sorted = sortAndFilter(fixture.records, {
      sortKey: "probability",
      sortDescending: true,
      searchQuery: "",
    });
    const probs = sorted.map((r) => r.probability);
    expect(probs).toEqual([...probs].sort((a, b) => b - a));
  });

  it("name search filters rows", () => {
    const filtered = sortAndFilter(fixture.records, {
      sortKey: "probability",
      sortDescending: true,
      searchQuery: "memcpy",
    });
    expect(filtered.length).toBe(2);
    expect(filtered.every((r) => r.name.includes("memcpy"))).toBe(true);
  });

  it("zero records renders the empty state", () => {
    expect(renderTable([])).toContain("empty-state");
  });

  it("escapes hostile names", () => {
    const html = renderTable([
      { name: "<script>alert(1)</script>", probability: 0.9, predicted: 1 },
    ]);
    expect(html).not.toContain("<script>");
    expect(html).toContain("&lt;script&gt;");
  });
});

describe("error banner", () => {
  it("renders the server diagnostic and a retry control", () => {
    const html = renderErrorBanner("line 32: expected 15 cells, got 3", true);
    expect(html).toContain("line 32");
    expect(html).toContain("retry");
  });

  it("empty message renders nothing", () => {
    expect(renderErrorBanner("", true)).toBe("");
  });
});

describe("esc", () => {
  it("escapes the four html-sensitive characters", () => {
    expect(esc('<a href="x">&</a>')).toBe("&lt;a href=&quot;x&quot;&gt;&amp;&lt;/a&gt;");
  });
});
