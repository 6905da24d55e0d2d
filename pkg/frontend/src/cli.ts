#!/usr/bin/env node
/** CLI: `bios-mimo-render render --spec <figure.json>` renders one figure;
 *  `--spec` may be repeated. */

import { loadFigureSpec } from "./figure.js";
import { render } from "./render.js";

function main(argv: string[]): number {
    const args = argv.slice(2);
    if (args[0] !== "render") {
        console.error("usage: bios-mimo-render render --spec <figure.json> [--spec ...]");
        return 2;
    }
    const specs: string[] = [];
    for (let i = 1; i < args.length; i++) {
        if (args[i] === "--spec") {
            if (i + 1 >= args.length) {
                console.error("--spec needs a path");
                return 2;
            }
            specs.push(args[++i]);
        } else {
            console.error(`unknown argument ${args[i]}`);
            return 2;
        }
    }
    if (specs.length === 0) {
        console.error("at least one --spec is required");
        return 2;
    }
    for (const specPath of specs) {
        try {
            const result = render(loadFigureSpec(specPath));
            console.log(`${specPath}: wrote ${result.output} (${result.series.length} series)`);
        } catch (err) {
            console.error(`${specPath}: ${(err as Error).message}`);
            return 1;
        }
    }
    return 0;
}

process.exit(main(process.argv));
