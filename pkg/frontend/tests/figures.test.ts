import fs from "node:fs";
import os from "node:os";
import path from "node:path";
import { fileURLToPath } from "node:url";
import { afterAll, describe, expect, it } from "vitest";

import { loadFigureSpec } from "../src/figure.js";
import { render } from "../src/render.js";
import { readCsv } from "../src/csv.js";

const here = path.dirname(fileURLToPath(import.meta.url));
const SPECS = path.join(here, "..", "specs");
const FIXTURES = path.join(here, "..", "fixtures");
const tmp = fs.mkdtempSync(path.join(os.tmpdir(), "figpreset-"));

afterAll(() => fs.rmSync(tmp, { recursive: true, force: true }));

// independent recomputation with plain loops over the raw rows
function naiveMeans(rows: any[], seriesKey: string, x: string, y: string) {
    const sums = new Map<string, { s: number; n: number }>();
    for (const row of rows) {
        const key = `${row[seriesKey]}@${row[x]}`;
        const cell = sums.get(key) ?? { s: 0, n: 0 };
        cell.s += Number(row[y]);
        cell.n += 1;
        sums.set(key, cell);
    }
    return sums;
}

describe("shipped figure specs against preset-schema CSVs", () => {
    for (const name of ["fig3a", "fig4b", "fig5a"] as const) {
        it(`${name}: renders and matches an independent mean recomputation`, () => {
            const spec = loadFigureSpec(path.join(SPECS, `${name}.json`));
            spec.input = [path.join(FIXTURES, `${name}.csv`)];
            spec.output = path.join(tmp, `${name}.svg`);
            const result = render(spec);

            expect(fs.existsSync(spec.output)).toBe(true);
            const svg = fs.readFileSync(spec.output, "utf8");
            expect((svg.match(/<polyline /g) ?? []).length).toBe(result.series.length);

            const rows = readCsv(spec.input[0]);
            const expected = naiveMeans(rows, spec.series[0], spec.x, spec.y);
            for (const s of result.series) {
                for (const p of s.points) {
                    const cell = expected.get(`${s.key}@${p.x}`)!;
                    expect(cell).toBeDefined();
                    expect(Math.abs(p.mean - cell.s / cell.n)).toBeLessThan(1e-9);
                    expect(p.n).toBe(cell.n);
                }
            }
        });
    }

    it("every shipped spec file parses", () => {
        for (const file of fs.readdirSync(SPECS)) {
            const spec = loadFigureSpec(path.join(SPECS, file));
            expect(spec.x).toBe("sweep_value");
            expect(["linear", "dB"]).toContain(spec.scale);
        }
    });
});
