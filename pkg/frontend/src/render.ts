import fs from "node:fs";
import path from "node:path";

import { Series, aggregate, toDb } from "./aggregate.js";
import { Row, columnsOf, readCsv } from "./csv.js";
import { FigureSpec } from "./figure.js";
import { PlotSeries, lineChart } from "./svg.js";

export interface RenderResult {
    /** aggregated series in data units (before any dB conversion) */
    series: Series[];
    /** the series as drawn (after scale conversion) */
    plotted: PlotSeries[];
    output: string;
}

/** Render a figure spec to its SVG file and return the aggregation used.
 *  Pure in the CSV contents: rendering twice produces identical bytes. */
export function render(spec: FigureSpec): RenderResult {
    const rows: Row[] = spec.input.flatMap((file) => readCsv(file));
    if (rows.length === 0) throw new Error("no rows in the input CSVs");
    const columns = columnsOf(rows);
    for (const column of [spec.x, spec.y, ...spec.series]) {
        if (!columns.includes(column)) {
            throw new Error(`column "${column}" not present in the CSV (have: ${columns.join(", ")})`);
        }
    }

    const series = aggregate(rows, spec.x, spec.y, spec.series);
    const convert = spec.scale === "dB" ? toDb : (v: number) => v;
    const plotted: PlotSeries[] = series.map((s) => ({
        label: s.key,
        points: s.points.map((p) => ({
            x: p.x,
            y: convert(p.mean),
            lo: convert(p.mean - p.stderr),
            hi: convert(p.mean + p.stderr),
        })),
    }));

    const svg = lineChart(plotted, {
        title: spec.title,
        xLabel: spec.xLabel,
        yLabel: spec.yLabel,
    });
    fs.mkdirSync(path.dirname(spec.output), { recursive: true });
    fs.writeFileSync(spec.output, svg);
    return { series, plotted, output: spec.output };
}
