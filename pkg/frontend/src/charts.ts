// Dependency-free SVG line charts for the metrics panel.

export interface Point {
  x: number;
  y: number;
}

const W = 420;
const H = 220;
const PAD = 38;

function scale(points: Point[]) {
  const xs = points.map((p) => p.x);
  const ys = points.map((p) => p.y);
  const x0 = Math.min(...xs);
  const x1 = Math.max(...xs, x0 + 1);
  const y0 = Math.min(0, ...ys);
  const y1 = Math.max(...ys, y0 + 1e-9);
  return {
    sx: (x: number) => PAD + ((x - x0) / (x1 - x0)) * (W - 2 * PAD),
    sy: (y: number) => H - PAD - ((y - y0) / (y1 - y0)) * (H - 2 * PAD),
    x0,
    x1,
    y0,
    y1,
  };
}

export function lineChartSvg(points: Point[], title: string, yLabel: string): string {
  if (points.length === 0) {
    return `<svg viewBox="0 0 ${W} ${H}" role="img"><text x="${W / 2}" y="${H / 2}" text-anchor="middle" fill="#888">no data yet</text></svg>`;
  }
  const { sx, sy, x0, x1, y0, y1 } = scale(points);
  const path = points.map((p, i) => `${i === 0 ? "M" : "L"}${sx(p.x).toFixed(1)},${sy(p.y).toFixed(1)}`).join(" ");
  const dots = points
    .map((p) => `<circle cx="${sx(p.x).toFixed(1)}" cy="${sy(p.y).toFixed(1)}" r="2.6" fill="#c23c2a"/>`)
    .join("");
  const fmt = (v: number) => (Math.abs(v) >= 100 || Number.isInteger(v) ? v.toFixed(0) : v.toFixed(2));
  return `
<svg viewBox="0 0 ${W} ${H}" role="img" aria-label="${title}">
  <text x="${W / 2}" y="14" text-anchor="middle" font-size="12" fill="#333">${title}</text>
  <line x1="${PAD}" y1="${H - PAD}" x2="${W - PAD}" y2="${H - PAD}" stroke="#999"/>
  <line x1="${PAD}" y1="${PAD / 2}" x2="${PAD}" y2="${H - PAD}" stroke="#999"/>
  <text x="${PAD}" y="${H - PAD + 14}" font-size="10" fill="#666">${fmt(x0)}</text>
  <text x="${W - PAD}" y="${H - PAD + 14}" text-anchor="end" font-size="10" fill="#666">${fmt(x1)}</text>
  <text x="${PAD - 4}" y="${H - PAD}" text-anchor="end" font-size="10" fill="#666">${fmt(y0)}</text>
  <text x="${PAD - 4}" y="${PAD / 2 + 8}" text-anchor="end" font-size="10" fill="#666">${fmt(y1)}</text>
  <text x="12" y="${H / 2}" font-size="10" fill="#666" transform="rotate(-90 12 ${H / 2})" text-anchor="middle">${yLabel}</text>
  <text x="${W / 2}" y="${H - 4}" font-size="10" fill="#666" text-anchor="middle">labels used</text>
  <path d="${path}" fill="none" stroke="#c23c2a" stroke-width="1.6"/>
  ${dots}
</svg>`;
}
