/**
 * Minimal deterministic SVG emission.
 *
 * Hand-rolled on purpose: the figures need only line plots with axes, and a
 * fixed serialization keeps re-renders byte-identical for a given input.
 */

export const COLOR_CYCLE = [
  "#1f77b4",
  "#d62728",
  "#2ca02c",
  "#9467bd",
  "#ff7f0e",
  "#8c564b",
] as const;

export interface Rect {
  x: number;
  y: number;
  width: number;
  height: number;
}

export interface Series {
  xs: number[];
  ys: number[];
  color: string;
  dash?: string;
  label?: string;
}

/** Affine map from a data interval onto a pixel interval. */
export class LinearScale {
  private readonly lo: number;
  private readonly span: number;
  private readonly pixelLo: number;
  private readonly pixelSpan: number;

  constructor(lo: number, hi: number, pixelLo: number, pixelHi: number) {
    if (!(hi > lo)) {
      hi = lo + 1;
    }
    this.lo = lo;
    this.span = hi - lo;
    this.pixelLo = pixelLo;
    this.pixelSpan = pixelHi - pixelLo;
  }

  map(value: number): number {
    return this.pixelLo + ((value - this.lo) / this.span) * this.pixelSpan;
  }
}

export function dataRange(values: number[]): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const v of values) {
    if (Number.isFinite(v)) {
      if (v < lo) lo = v;
      if (v > hi) hi = v;
    }
  }
  if (lo > hi) {
    return [0, 1];
  }
  if (lo === hi) {
    const pad = Math.abs(lo) > 0 ? Math.abs(lo) * 0.1 : 1;
    return [lo - pad, hi + pad];
  }
  const pad = (hi - lo) * 0.05;
  return [lo - pad, hi + pad];
}

/** Round tick positions covering [lo, hi] at a 1/2/5 decade step. */
export function ticks(lo: number, hi: number, target = 5): number[] {
  if (!(hi > lo)) {
    return [lo];
  }
  const rawStep = (hi - lo) / target;
  const power = Math.pow(10, Math.floor(Math.log10(rawStep)));
  let step = power;
  for (const mult of [1, 2, 5, 10]) {
    step = mult * power;
    if (step >= rawStep) break;
  }
  const out: number[] = [];
  for (let v = Math.ceil(lo / step) * step; v <= hi + step * 1e-9; v += step) {
    out.push(Math.abs(v) < step * 1e-9 ? 0 : v);
  }
  return out;
}

function fmt(value: number): string {
  if (value === 0) return "0";
  const abs = Math.abs(value);
  if (abs >= 1e4 || abs < 1e-3) {
    return value.toExponential(1);
  }
  return String(Number(value.toPrecision(4)));
}

function px(value: number): string {
  return Number(value.toFixed(2)).toString();
}

export function escapeXml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export interface PanelSpec {
  rect: Rect;
  title: string;
  xLabel: string;
  yLabel: string;
  series: Series[];
  /** Vertical marker lines at these x data positions. */
  xMarkers?: number[];
}

function renderPanel(spec: PanelSpec): string {
  const { rect, series } = spec;
  const margin = { left: 52, right: 10, top: 24, bottom: 34 };
  const plot: Rect = {
    x: rect.x + margin.left,
    y: rect.y + margin.top,
    width: rect.width - margin.left - margin.right,
    height: rect.height - margin.top - margin.bottom,
  };
  const allX = series.flatMap((s) => s.xs);
  const allY = series.flatMap((s) => s.ys);
  const [xLo, xHi] = dataRange(allX);
  const [yLo, yHi] = dataRange(allY);
  const xScale = new LinearScale(xLo, xHi, plot.x, plot.x + plot.width);
  const yScale = new LinearScale(yLo, yHi, plot.y + plot.height, plot.y);

  const parts: string[] = [];
  parts.push(
    `<rect x="${px(plot.x)}" y="${px(plot.y)}" width="${px(plot.width)}" height="${px(plot.height)}" fill="none" stroke="#333" stroke-width="1"/>`,
  );
  parts.push(
    `<text x="${px(rect.x + rect.width / 2)}" y="${px(rect.y + 14)}" text-anchor="middle" font-size="12" font-weight="bold">${escapeXml(spec.title)}</text>`,
  );
  for (const t of ticks(xLo, xHi)) {
    const x = xScale.map(t);
    parts.push(
      `<line x1="${px(x)}" y1="${px(plot.y + plot.height)}" x2="${px(x)}" y2="${px(plot.y + plot.height + 4)}" stroke="#333" stroke-width="1"/>`,
    );
    parts.push(
      `<text x="${px(x)}" y="${px(plot.y + plot.height + 16)}" text-anchor="middle" font-size="9">${escapeXml(fmt(t))}</text>`,
    );
  }
  for (const t of ticks(yLo, yHi)) {
    const y = yScale.map(t);
    parts.push(
      `<line x1="${px(plot.x - 4)}" y1="${px(y)}" x2="${px(plot.x)}" y2="${px(y)}" stroke="#333" stroke-width="1"/>`,
    );
    parts.push(
      `<text x="${px(plot.x - 6)}" y="${px(y + 3)}" text-anchor="end" font-size="9">${escapeXml(fmt(t))}</text>`,
    );
  }
  parts.push(
    `<text x="${px(plot.x + plot.width / 2)}" y="${px(plot.y + plot.height + 30)}" text-anchor="middle" font-size="10">${escapeXml(spec.xLabel)}</text>`,
  );
  parts.push(
    `<text x="${px(rect.x + 12)}" y="${px(plot.y + plot.height / 2)}" text-anchor="middle" font-size="10" transform="rotate(-90 ${px(rect.x + 12)} ${px(plot.y + plot.height / 2)})">${escapeXml(spec.yLabel)}</text>`,
  );
  for (const marker of spec.xMarkers ?? []) {
    const x = xScale.map(marker);
    parts.push(
      `<line x1="${px(x)}" y1="${px(plot.y)}" x2="${px(x)}" y2="${px(plot.y + plot.height)}" stroke="#999" stroke-width="1" stroke-dasharray="4 3"/>`,
    );
  }
  for (const s of series) {
    const points: string[] = [];
    for (let i = 0; i < s.xs.length; i++) {
      const x = s.xs[i]!;
      const y = s.ys[i]!;
      if (Number.isFinite(x) && Number.isFinite(y)) {
        points.push(`${px(xScale.map(x))},${px(yScale.map(y))}`);
      }
    }
    if (points.length === 0) continue;
    const dash = s.dash ? ` stroke-dasharray="${s.dash}"` : "";
    if (points.length === 1) {
      const [cx, cy] = points[0]!.split(",");
      parts.push(`<circle cx="${cx}" cy="${cy}" r="2.5" fill="${s.color}"/>`);
    } else {
      parts.push(
        `<polyline points="${points.join(" ")}" fill="none" stroke="${s.color}" stroke-width="1.5"${dash}/>`,
      );
    }
  }
  const labeled = series.filter((s) => s.label);
  labeled.forEach((s, i) => {
    const lx = plot.x + plot.width - 8;
    const ly = plot.y + 12 + 12 * i;
    parts.push(
      `<line x1="${px(lx - 26)}" y1="${px(ly - 3)}" x2="${px(lx - 8)}" y2="${px(ly - 3)}" stroke="${s.color}" stroke-width="1.5"${s.dash ? ` stroke-dasharray="${s.dash}"` : ""}/>`,
    );
    parts.push(
      `<text x="${px(lx - 30)}" y="${px(ly)}" text-anchor="end" font-size="9">${escapeXml(s.label!)}</text>`,
    );
  });
  return parts.join("\n");
}

export interface FigureSpec {
  width: number;
  height: number;
  panels: PanelSpec[];
  /** Footnote lines rendered along the bottom edge. */
  footnotes?: string[];
}

export function renderFigure(spec: FigureSpec): string {
  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${spec.width}" height="${spec.height}" viewBox="0 0 ${spec.width} ${spec.height}" font-family="Helvetica, Arial, sans-serif">`,
  );
  parts.push(`<rect width="${spec.width}" height="${spec.height}" fill="white"/>`);
  for (const panel of spec.panels) {
    parts.push(renderPanel(panel));
  }
  (spec.footnotes ?? []).forEach((note, i) => {
    const y = spec.height - 6 - 11 * (spec.footnotes!.length - 1 - i);
    parts.push(
      `<text x="6" y="${px(y)}" font-size="9" fill="#555">${escapeXml(note)}</text>`,
    );
  });
  parts.push("</svg>");
  return parts.join("\n") + "\n";
}
