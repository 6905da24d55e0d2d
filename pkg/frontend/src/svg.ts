/** Minimal hand-rolled SVG line charts: mean lines with stderr bands. */

export interface PlotPoint {
    x: number;
    y: number;
    lo: number;
    hi: number;
}

export interface PlotSeries {
    label: string;
    points: PlotPoint[];
}

export interface PlotOptions {
    title?: string;
    xLabel?: string;
    yLabel?: string;
    width?: number;
    height?: number;
}

const PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"];
const MARGIN = { top: 48, right: 24, bottom: 56, left: 72 };

function extent(values: number[]): [number, number] {
    let lo = Math.min(...values);
    let hi = Math.max(...values);
    if (!Number.isFinite(lo) || !Number.isFinite(hi)) throw new Error("non-finite plot data");
    if (lo === hi) {
        lo -= 1;
        hi += 1;
    }
    return [lo, hi];
}

function ticks(lo: number, hi: number, count = 6): number[] {
    const span = hi - lo;
    const step = Math.pow(10, Math.floor(Math.log10(span / count)));
    const err = span / count / step;
    const mult = err >= 7.5 ? 10 : err >= 3.5 ? 5 : err >= 1.5 ? 2 : 1;
    const tick = mult * step;
    const out: number[] = [];
    for (let v = Math.ceil(lo / tick) * tick; v <= hi + 1e-12 * span; v += tick) {
        out.push(Number(v.toPrecision(12)));
    }
    return out;
}

function fmt(v: number): string {
    if (v === 0) return "0";
    const a = Math.abs(v);
    if (a >= 1e4 || a < 1e-3) return v.toExponential(1);
    return String(Number(v.toPrecision(6)));
}

/** Build the full SVG document for the given series. Deterministic. */
export function lineChart(series: PlotSeries[], options: PlotOptions = {}): string {
    const width = options.width ?? 720;
    const height = options.height ?? 480;
    const iw = width - MARGIN.left - MARGIN.right;
    const ih = height - MARGIN.top - MARGIN.bottom;

    const xs = series.flatMap((s) => s.points.map((p) => p.x));
    const ys = series.flatMap((s) => s.points.flatMap((p) => [p.lo, p.hi, p.y]));
    const [x0, x1] = extent(xs);
    const [y0, y1] = extent(ys);
    const sx = (v: number) => MARGIN.left + ((v - x0) / (x1 - x0)) * iw;
    const sy = (v: number) => MARGIN.top + ih - ((v - y0) / (y1 - y0)) * ih;
    const px = (v: number) => v.toFixed(2);

    const parts: string[] = [];
    parts.push(
        `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
        `viewBox="0 0 ${width} ${height}" font-family="Helvetica, Arial, sans-serif">`,
    );
    parts.push(`<rect width="${width}" height="${height}" fill="white"/>`);

    for (const t of ticks(x0, x1)) {
        const x = px(sx(t));
        parts.push(`<line x1="${x}" y1="${MARGIN.top}" x2="${x}" y2="${MARGIN.top + ih}" stroke="#e0e0e0"/>`);
        parts.push(
            `<text x="${x}" y="${MARGIN.top + ih + 18}" font-size="12" text-anchor="middle">${fmt(t)}</text>`,
        );
    }
    for (const t of ticks(y0, y1)) {
        const y = px(sy(t));
        parts.push(`<line x1="${MARGIN.left}" y1="${y}" x2="${MARGIN.left + iw}" y2="${y}" stroke="#e0e0e0"/>`);
        parts.push(
            `<text x="${MARGIN.left - 8}" y="${y}" font-size="12" text-anchor="end" dominant-baseline="middle">${fmt(t)}</text>`,
        );
    }
    parts.push(
        `<rect x="${MARGIN.left}" y="${MARGIN.top}" width="${iw}" height="${ih}" fill="none" stroke="#333"/>`,
    );

    series.forEach((s, idx) => {
        const color = PALETTE[idx % PALETTE.length];
        if (s.points.length > 1) {
            const band = [
                ...s.points.map((p) => `${px(sx(p.x))},${px(sy(p.hi))}`),
                ...[...s.points].reverse().map((p) => `${px(sx(p.x))},${px(sy(p.lo))}`),
            ].join(" ");
            parts.push(`<polygon points="${band}" fill="${color}" opacity="0.15"/>`);
        }
        const line = s.points.map((p) => `${px(sx(p.x))},${px(sy(p.y))}`).join(" ");
        parts.push(
            `<polyline points="${line}" fill="none" stroke="${color}" stroke-width="2" data-series="${s.label}"/>`,
        );
        for (const p of s.points) {
            parts.push(`<circle cx="${px(sx(p.x))}" cy="${px(sy(p.y))}" r="3" fill="${color}"/>`);
        }
        const ly = MARGIN.top + 16 + 16 * idx;
        parts.push(
            `<line x1="${MARGIN.left + iw - 150}" y1="${ly - 4}" x2="${MARGIN.left + iw - 126}" y2="${ly - 4}" stroke="${color}" stroke-width="2"/>`,
        );
        parts.push(`<text x="${MARGIN.left + iw - 120}" y="${ly}" font-size="12">${s.label}</text>`);
    });

    if (options.title) {
        parts.push(
            `<text x="${width / 2}" y="24" font-size="16" text-anchor="middle">${options.title}</text>`,
        );
    }
    parts.push(
        `<text x="${MARGIN.left + iw / 2}" y="${height - 12}" font-size="13" text-anchor="middle">${options.xLabel ?? ""}</text>`,
    );
    parts.push(
        `<text x="18" y="${MARGIN.top + ih / 2}" font-size="13" text-anchor="middle" ` +
        `transform="rotate(-90 18 ${MARGIN.top + ih / 2})">${options.yLabel ?? ""}</text>`,
    );
    parts.push("</svg>");
    return parts.join("\n");
}
