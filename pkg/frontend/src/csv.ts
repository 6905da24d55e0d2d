import fs from "node:fs";
import Papa from "papaparse";

export type Row = Record<string, string | number>;

/** Parse one of the simulator's result CSVs into typed rows
 *  (numeric columns become numbers, everything else stays a string). */
export function readCsv(path: string): Row[] {
    const text = fs.readFileSync(path, "utf8");
    const parsed = Papa.parse<Row>(text.trim(), {
        header: true,
        dynamicTyping: true,
        skipEmptyLines: true,
    });
    if (parsed.errors.length > 0) {
        const first = parsed.errors[0];
        throw new Error(`failed to parse ${path}: ${first.message} (row ${first.row})`);
    }
    return parsed.data;
}

export function columnsOf(rows: Row[]): string[] {
    return rows.length > 0 ? Object.keys(rows[0]) : [];
}
