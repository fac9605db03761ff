/** Client-side SVG renderings of the exported row formats (no server-side
 * image generation): Gantt bars from (task, start, end, pct, depends_on)
 * rows and a mood trend polyline. Pure string builders, easy to assert on. */

import type { GanttRow, TimelinePoint } from "./api.js";

const DAY = 24 * 3600 * 1000;

function esc(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;").replace(/"/g, "&quot;");
}

export function ganttSvg(rows: GanttRow[], width = 640): string {
  if (!rows.length) {
    return `<svg class="gantt" role="img" width="${width}" height="40"><text x="10" y="25">no tasks yet</text></svg>`;
  }
  const starts = rows.map((r) => Date.parse(r.start));
  const ends = rows.map((r) => Date.parse(r.end) + DAY);
  const min = Math.min(...starts);
  const max = Math.max(...ends);
  const span = Math.max(max - min, DAY);
  const rowHeight = 26;
  const labelWidth = 150;
  const chartWidth = width - labelWidth - 10;
  const height = rows.length * rowHeight + 10;
  const parts: string[] = [
    `<svg class="gantt" role="img" width="${width}" height="${height}" viewBox="0 0 ${width} ${height}">`,
  ];
  rows.forEach((row, i) => {
    const y = i * rowHeight + 6;
    const x = labelWidth + ((Date.parse(row.start) - min) / span) * chartWidth;
    const w = Math.max((((Date.parse(row.end) + DAY) - Date.parse(row.start)) / span) * chartWidth, 2);
    const done = (w * row.pct) / 100;
    parts.push(
      `<text x="4" y="${y + 13}" class="gantt-label">${esc(row.task)}</text>`,
      `<rect x="${x.toFixed(1)}" y="${y}" width="${w.toFixed(1)}" height="16" class="gantt-planned" data-task="${esc(row.task)}"></rect>`,
      `<rect x="${x.toFixed(1)}" y="${y}" width="${done.toFixed(1)}" height="16" class="gantt-done"></rect>`,
      `<text x="${(x + w + 4).toFixed(1)}" y="${y + 13}" class="gantt-pct">${row.pct}%</text>`,
    );
  });
  parts.push("</svg>");
  return parts.join("");
}

export function trendSvg(series: Record<string, TimelinePoint[]>, maxValue: number, width = 640): string {
  const names = Object.keys(series).filter((k) => (series[k] ?? []).length > 0);
  if (!names.length) {
    return `<svg class="trend" role="img" width="${width}" height="40"><text x="10" y="25">no data points yet</text></svg>`;
  }
  const all = names.flatMap((name) => series[name] ?? []);
  const times = all.map((p) => Date.parse(p.at));
  const min = Math.min(...times);
  const span = Math.max(Math.max(...times) - min, 1);
  const height = 140;
  const colors = ["#46627f", "#5a845a", "#a05252", "#8a6d3b", "#556b8d", "#6b5b95"];
  const parts = [
    `<svg class="trend" role="img" width="${width}" height="${height}" viewBox="0 0 ${width} ${height}">`,
  ];
  names.forEach((name, idx) => {
    const points = (series[name] ?? [])
      .map((p) => {
        const x = 10 + ((Date.parse(p.at) - min) / span) * (width - 20);
        const y = height - 20 - (p.value / maxValue) * (height - 40);
        return `${x.toFixed(1)},${y.toFixed(1)}`;
      })
      .join(" ");
    const color = colors[idx % colors.length];
    parts.push(
      `<polyline fill="none" stroke="${color}" stroke-width="1.5" points="${points}" data-series="${esc(name)}"></polyline>`,
    );
    parts.push(`<text x="12" y="${14 + idx * 12}" fill="${color}" class="trend-legend">${esc(name)}</text>`);
  });
  parts.push("</svg>");
  return parts.join("");
}
