/**
 * Figure CLI.
 *
 * Usage:
 *   plot-trajectories   <out.svg> <trajectory.csv> [more.csv ...]
 *   plot-rmse-vs-n      <out.svg> <results.csv>
 *   plot-param-and-ident <out.svg> <trajectory.csv> <results.csv> <component>
 *
 * Each command writes <out.svg> and a <out.svg>.json sidecar holding the
 * plotted arrays.
 */

import { readFileSync, writeFileSync } from "node:fs";
import { basename } from "node:path";
import { pathToFileURL } from "node:url";
import {
  FigureOutput,
  NamedInput,
  buildParamAndIdentFigure,
  buildRmseVsNFigure,
  buildTrajectoriesFigure,
} from "./figures.js";

const USAGE = `usage:
  plot-trajectories <out.svg> <trajectory.csv> [more.csv ...]
  plot-rmse-vs-n <out.svg> <results.csv>
  plot-param-and-ident <out.svg> <trajectory.csv> <results.csv> <component>`;

function load(path: string): NamedInput {
  return { name: basename(path), text: readFileSync(path, "utf8") };
}

function emit(outPath: string, figure: FigureOutput): void {
  writeFileSync(outPath, figure.svg);
  writeFileSync(`${outPath}.json`, JSON.stringify(figure.sidecar, null, 2) + "\n");
}

export function main(argv: string[]): number {
  const [command, outPath, ...inputs] = argv;
  try {
    if (command === "plot-trajectories") {
      if (outPath === undefined || inputs.length === 0) {
        throw new Error(USAGE);
      }
      emit(outPath, buildTrajectoriesFigure(inputs.map(load)));
    } else if (command === "plot-rmse-vs-n") {
      if (outPath === undefined || inputs.length !== 1) {
        throw new Error(USAGE);
      }
      emit(outPath, buildRmseVsNFigure(load(inputs[0]!)));
    } else if (command === "plot-param-and-ident") {
      if (outPath === undefined || inputs.length !== 3) {
        throw new Error(USAGE);
      }
      const component = Number(inputs[2]);
      emit(outPath, buildParamAndIdentFigure(load(inputs[0]!), load(inputs[1]!), component));
    } else {
      throw new Error(USAGE);
    }
  } catch (error) {
    console.error(error instanceof Error ? error.message : String(error));
    return 1;
  }
  return 0;
}

if (process.argv[1] && import.meta.url === pathToFileURL(process.argv[1]).href) {
  process.exit(main(process.argv.slice(2)));
}
