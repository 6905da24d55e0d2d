import { Row } from "./csv.js";

export interface AggregatedPoint {
    x: number;
    mean: number;
    stderr: number;
    n: number;
}

export interface Series {
    key: string;
    points: AggregatedPoint[];
}

/** Group rows by the series columns and the x column, then reduce the y
 *  column to its mean and standard error per group. */
export function aggregate(
    rows: Row[],
    x: string,
    y: string,
    seriesColumns: string[],
): Series[] {
    const groups = new Map<string, Map<number, number[]>>();
    for (const row of rows) {
        const key = seriesColumns.map((c) => String(row[c])).join(" / ") || "all";
        const xValue = Number(row[x]);
        const yValue = Number(row[y]);
        if (!Number.isFinite(xValue) || !Number.isFinite(yValue)) {
            throw new Error(`non-numeric cell in column ${x} or ${y}`);
        }
        if (!groups.has(key)) groups.set(key, new Map());
        const byX = groups.get(key)!;
        if (!byX.has(xValue)) byX.set(xValue, []);
        byX.get(xValue)!.push(yValue);
    }
    const series: Series[] = [];
    for (const [key, byX] of [...groups.entries()].sort((a, b) => a[0].localeCompare(b[0]))) {
        const points: AggregatedPoint[] = [];
        for (const [xValue, values] of [...byX.entries()].sort((a, b) => a[0] - b[0])) {
            points.push({ x: xValue, ...meanAndStderr(values) });
        }
        series.push({ key, points });
    }
    return series;
}

export function meanAndStderr(values: number[]): { mean: number; stderr: number; n: number } {
    const n = values.length;
    const mean = values.reduce((a, b) => a + b, 0) / n;
    if (n < 2) return { mean, stderr: 0, n };
    const variance = values.reduce((a, b) => a + (b - mean) ** 2, 0) / (n - 1);
    return { mean, stderr: Math.sqrt(variance / n), n };
}

const DB_FLOOR = 1e-12;

/** 10*log10 with a floor so zero/negative means stay plottable. */
export function toDb(value: number): number {
    return 10 * Math.log10(Math.max(value, DB_FLOOR));
}
