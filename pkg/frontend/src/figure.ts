import fs from "node:fs";

export interface FigureSpec {
    /** one or more result CSVs, concatenated */
    input: string[];
    x: string;
    y: string;
    series: string[];
    scale: "linear" | "dB";
    output: string;
    title?: string;
    xLabel?: string;
    yLabel?: string;
}

export function loadFigureSpec(path: string): FigureSpec {
    const raw = JSON.parse(fs.readFileSync(path, "utf8"));
    return normalizeFigureSpec(raw);
}

export function normalizeFigureSpec(raw: any): FigureSpec {
    for (const field of ["input", "x", "y", "output"]) {
        if (raw[field] === undefined) throw new Error(`figure spec is missing "${field}"`);
    }
    const input = Array.isArray(raw.input) ? raw.input : [raw.input];
    const scale = raw.scale ?? "linear";
    if (scale !== "linear" && scale !== "dB") {
        throw new Error(`unknown scale "${scale}" (use "linear" or "dB")`);
    }
    return {
        input,
        x: raw.x,
        y: raw.y,
        series: raw.series ?? [],
        scale,
        output: raw.output,
        title: raw.title,
        xLabel: raw.xLabel ?? raw.x,
        yLabel: raw.yLabel ?? (scale === "dB" ? `${raw.y} (dB)` : raw.y),
    };
}
