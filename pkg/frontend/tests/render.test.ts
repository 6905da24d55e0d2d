import fs from "node:fs";
import os from "node:os";
import path from "node:path";
import { fileURLToPath } from "node:url";
import { afterAll, describe, expect, it } from "vitest";

import { normalizeFigureSpec } from "../src/figure.js";
import { render } from "../src/render.js";
import { readCsv } from "../src/csv.js";

const here = path.dirname(fileURLToPath(import.meta.url));
const FIXTURE = path.join(here, "..", "fixtures", "tiny.csv");
const tmp = fs.mkdtempSync(path.join(os.tmpdir(), "figtest-"));

afterAll(() => fs.rmSync(tmp, { recursive: true, force: true }));

function spec(overrides: any = {}) {
    return normalizeFigureSpec({
        input: FIXTURE,
        x: "sweep_value",
        y: "sum_rate",
        series: ["scenario"],
        scale: "linear",
        output: path.join(tmp, "out.svg"),
        title: "fixture",
        ...overrides,
    });
}

describe("render", () => {
    it("writes an SVG with one line per series and returns the aggregation", () => {
        const result = render(spec());
        const svg = fs.readFileSync(result.output, "utf8");
        expect(svg.startsWith("<svg")).toBe(true);
        expect((svg.match(/<polyline /g) ?? []).length).toBe(2);
        expect(svg).toContain('data-series="alpha"');
        expect(svg).toContain('data-series="beta"');
        // aggregation returned to callers matches the plotted values
        const alpha = result.series.find((s) => s.key === "alpha")!;
        expect(alpha.points.map((p) => p.x)).toEqual([100, 200]);
        expect(alpha.points[0].mean).toBeCloseTo(11, 9);
    });

    it("is idempotent byte for byte", () => {
        const s = spec({ output: path.join(tmp, "twice.svg") });
        render(s);
        const first = fs.readFileSync(s.output, "utf8");
        render(s);
        expect(fs.readFileSync(s.output, "utf8")).toBe(first);
    });

    it("applies the dB scale to the plotted values", () => {
        const result = render(spec({ y: "nmse_fra", scale: "dB", output: path.join(tmp, "db.svg") }));
        const alpha = result.series.find((s) => s.key === "alpha")!;
        const plotted = result.plotted.find((s) => s.label === "alpha")!;
        expect(plotted.points[0].y).toBeCloseTo(10 * Math.log10(alpha.points[0].mean), 9);
        // an NMSE of 1 sits at the 0 dB tick
        expect(10 * Math.log10(1)).toBe(0);
    });

    it("handles a single-row CSV without crashing", () => {
        const single = path.join(tmp, "single.csv");
        const lines = fs.readFileSync(FIXTURE, "utf8").trim().split("\n");
        fs.writeFileSync(single, lines.slice(0, 2).join("\n"));
        const result = render(spec({ input: single, series: [], output: path.join(tmp, "single.svg") }));
        expect(result.series[0].points.length).toBe(1);
        expect(fs.existsSync(path.join(tmp, "single.svg"))).toBe(true);
    });

    it("reports missing columns", () => {
        expect(() => render(spec({ y: "nope" }))).toThrow(/column "nope"/);
    });

    it("concatenates multiple input CSVs", () => {
        const result = render(
            spec({ input: [FIXTURE, FIXTURE], output: path.join(tmp, "both.svg") }),
        );
        const rows = readCsv(FIXTURE);
        const alpha = result.series.find((s) => s.key === "alpha")!;
        // doubling the rows leaves the means untouched
        const expected = rows
            .filter((r) => r.scenario === "alpha" && r.sweep_value === 100)
            .map((r) => Number(r.sum_rate));
        const mean = expected.reduce((a, b) => a + b, 0) / expected.length;
        expect(alpha.points[0].mean).toBeCloseTo(mean, 9);
        expect(alpha.points[0].n).toBe(2 * expected.length);
    });
});
