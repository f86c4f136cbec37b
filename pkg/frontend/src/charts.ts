/** Hand-rolled SVG charts: bar groups for phases 1 and 2, a scatter for
 * the sweep. Pure string builders so they are trivially testable and the
 * app can re-render on every event without a chart library. */

import type { BarDatum, ScatterPoint } from "./types.js";

const WIDTH = 560;
const BAR_HEIGHT = 26;
const GAP = 10;
const LABEL_W = 210;

function esc(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;")
             .replace(/"/g, "&quot;");
}

export function barChart(bars: BarDatum[], title: string,
                         winner: string | null = null): string {
  const height = bars.length * (BAR_HEIGHT + GAP) + 30;
  const parts = [
    `<svg class="chart" viewBox="0 0 ${WIDTH} ${height}" role="img" aria-label="${esc(title)}">`,
    `<text x="4" y="16" class="chart-title">${esc(title)}</text>`,
  ];
  bars.forEach((bar, i) => {
    const y = 30 + i * (BAR_HEIGHT + GAP);
    const value = bar.value ?? 0;
    const w = Math.max(1, Math.round(value * (WIDTH - LABEL_W - 70)));
    const classes = ["bar"];
    if (bar.removed) classes.push("removed");
    if (bar.key === winner) classes.push("winner");
    parts.push(
      `<text x="4" y="${y + 17}" class="bar-label">${esc(bar.key)}</text>`,
      `<rect data-key="${esc(bar.key)}" data-value="${value}" ` +
        `x="${LABEL_W}" y="${y}" width="${w}" height="${BAR_HEIGHT}" ` +
        `class="${classes.join(" ")}"></rect>`,
      `<text x="${LABEL_W + w + 6}" y="${y + 17}" class="bar-value">` +
        `${bar.value === null ? "-" : value.toFixed(4)}` +
        ` (${bar.episodes} ep)</text>`,
    );
  });
  parts.push("</svg>");
  return parts.join("\n");
}

export function scatterChart(points: ScatterPoint[], title: string): string {
  const height = 200;
  const plotW = WIDTH - 60;
  const maxX = Math.max(1, ...points.map((p) => p.episodeIndex));
  const parts = [
    `<svg class="chart" viewBox="0 0 ${WIDTH} ${height}" role="img" aria-label="${esc(title)}">`,
    `<text x="4" y="16" class="chart-title">${esc(title)}</text>`,
    `<line x1="40" y1="${height - 20}" x2="${WIDTH - 10}" y2="${height - 20}" class="axis"></line>`,
    `<line x1="40" y1="26" x2="40" y2="${height - 20}" class="axis"></line>`,
  ];
  for (const point of points) {
    if (point.value === null) continue;
    const x = 40 + (point.episodeIndex / maxX) * (plotW - 40);
    const y = height - 20 - point.value * (height - 50);
    parts.push(
      `<circle data-episode="${point.episodeIndex}" data-value="${point.value}" ` +
      `cx="${x.toFixed(1)}" cy="${y.toFixed(1)}" r="4" class="dot"></circle>`);
  }
  parts.push("</svg>");
  return parts.join("\n");
}
