/**
 * Figure builders.
 *
 * Each builder turns pipeline CSV output into an SVG plus a JSON sidecar
 * holding the plotted arrays. Builders only select, group, and average
 * columns for display; every number originates in the input files.
 */

import {
  Table,
  parseCsv,
  requireColumns,
  stringColumn,
  numericColumn,
  vectorColumns,
} from "./csv.js";
import {
  COLOR_CYCLE,
  FigureSpec,
  PanelSpec,
  Series,
  renderFigure,
} from "./svg.js";

export interface FigureOutput {
  svg: string;
  sidecar: unknown;
}

export interface NamedInput {
  name: string;
  text: string;
}

const PANEL_WIDTH = 270;
const PANEL_HEIGHT = 200;

function mean(values: number[]): number {
  let total = 0;
  for (const v of values) total += v;
  return total / values.length;
}

function sampleStd(values: number[], center: number): number {
  if (values.length < 2) {
    return 0;
  }
  let total = 0;
  for (const v of values) total += (v - center) * (v - center);
  return Math.sqrt(total / (values.length - 1));
}

interface Trajectory {
  name: string;
  table: Table;
  ts: number[];
  nCollect: number;
  hasPredict: boolean;
}

function readTrajectory(name: string, text: string): Trajectory {
  const table = parseCsv(text, name);
  requireColumns(table, ["t", "phase"], name);
  const ts = numericColumn(table, "t", name);
  const phases = stringColumn(table, "phase", name);
  return {
    name,
    table,
    ts,
    nCollect: phases.filter((p) => p === "collect").length,
    hasPredict: phases.includes("predict"),
  };
}

/** One panel per (state component, window length), targets overlaid. */
export function buildTrajectoriesFigure(inputs: NamedInput[]): FigureOutput {
  if (inputs.length === 0) {
    throw new Error("plot-trajectories: no trajectory files given");
  }
  const trajectories = inputs
    .map((input) => readTrajectory(input.name, input.text))
    .sort((a, b) => a.nCollect - b.nCollect);
  const xhatNames = vectorColumns(trajectories[0]!.table, "xhat", trajectories[0]!.name);
  const n = xhatNames.length;
  for (const traj of trajectories) {
    requireColumns(traj.table, xhatNames, traj.name);
    requireColumns(traj.table, xhatNames.map((_, i) => `xstar_${i}`), traj.name);
  }

  const panels: PanelSpec[] = [];
  for (let c = 0; c < n; c++) {
    trajectories.forEach((traj, col) => {
      const series: Series[] = [
        {
          xs: traj.ts,
          ys: numericColumn(traj.table, `xstar_${c}`, traj.name),
          color: COLOR_CYCLE[1],
          dash: "5 3",
          label: c === 0 && col === 0 ? "target" : undefined,
        },
        {
          xs: traj.ts,
          ys: numericColumn(traj.table, `xhat_${c}`, traj.name),
          color: COLOR_CYCLE[0],
          label: c === 0 && col === 0 ? "estimate" : undefined,
        },
      ];
      panels.push({
        rect: {
          x: col * PANEL_WIDTH,
          y: c * PANEL_HEIGHT,
          width: PANEL_WIDTH,
          height: PANEL_HEIGHT,
        },
        title: `x_${c}, N=${traj.nCollect}`,
        xLabel: "t",
        yLabel: `x_${c}`,
        series,
        xMarkers: traj.hasPredict ? [traj.nCollect] : [],
      });
    });
  }
  const svg = renderFigure({
    width: trajectories.length * PANEL_WIDTH,
    height: n * PANEL_HEIGHT,
    panels,
  });
  return {
    svg,
    sidecar: {
      kind: "trajectories",
      files: trajectories.map((t) => t.name),
      N: trajectories.map((t) => t.nCollect),
      components: n,
      panels: panels.length,
    },
  };
}

interface ResultGroups {
  /** Experiment ids in first-appearance order. */
  experiments: string[];
  byExperiment: Map<string, { Ns: number[]; byN: Map<number, number[]>; failed: number; total: number }>;
}

function groupMetric(text: string, name: string, metric: string): ResultGroups {
  const table = parseCsv(text, name);
  requireColumns(table, ["experiment", "N", "status", metric], name);
  const experimentCol = stringColumn(table, "experiment", name);
  const nCol = numericColumn(table, "N", name);
  const statusCol = stringColumn(table, "status", name);
  const metricCol = numericColumn(table, metric, name);

  const groups: ResultGroups = { experiments: [], byExperiment: new Map() };
  for (let i = 0; i < table.rows.length; i++) {
    const id = experimentCol[i]!;
    let entry = groups.byExperiment.get(id);
    if (entry === undefined) {
      entry = { Ns: [], byN: new Map(), failed: 0, total: 0 };
      groups.experiments.push(id);
      groups.byExperiment.set(id, entry);
    }
    entry.total += 1;
    if (statusCol[i] !== "ok" || !Number.isFinite(metricCol[i]!)) {
      entry.failed += 1;
      continue;
    }
    const N = nCol[i]!;
    let values = entry.byN.get(N);
    if (values === undefined) {
      values = [];
      entry.Ns.push(N);
      entry.byN.set(N, values);
    }
    values.push(metricCol[i]!);
  }
  for (const entry of groups.byExperiment.values()) {
    entry.Ns.sort((a, b) => a - b);
  }
  return groups;
}

/** Per-experiment tracking error versus window length, failed trials dropped. */
export function buildRmseVsNFigure(input: NamedInput): FigureOutput {
  const groups = groupMetric(input.text, input.name, "rmse");
  if (groups.experiments.length === 0) {
    throw new Error(`${input.name}: no result rows`);
  }

  const panels: PanelSpec[] = [];
  const experiments: object[] = [];
  const footnotes: string[] = [];
  groups.experiments.forEach((id, col) => {
    const entry = groups.byExperiment.get(id)!;
    const means = entry.Ns.map((N) => mean(entry.byN.get(N)!));
    const stds = entry.Ns.map((N, i) => sampleStd(entry.byN.get(N)!, means[i]!));
    const trials = entry.Ns.map((N) => entry.byN.get(N)!.length);
    experiments.push({
      experiment: id,
      N: entry.Ns,
      mean_rmse: means,
      std_rmse: stds,
      trials,
      excluded: entry.failed,
    });
    if (entry.failed > 0) {
      footnotes.push(`${id}: ${entry.failed} failed trial(s) of ${entry.total} excluded`);
    }
    panels.push({
      rect: { x: col * PANEL_WIDTH, y: 0, width: PANEL_WIDTH, height: PANEL_HEIGHT },
      title: id,
      xLabel: "N",
      yLabel: "tracking RMSE",
      series: [
        {
          xs: entry.Ns,
          ys: means.map((m, i) => m + stds[i]!),
          color: COLOR_CYCLE[0],
          dash: "2 3",
        },
        {
          xs: entry.Ns,
          ys: means.map((m, i) => m - stds[i]!),
          color: COLOR_CYCLE[0],
          dash: "2 3",
          label: col === 0 ? "mean +/- std" : undefined,
        },
        {
          xs: entry.Ns,
          ys: means,
          color: COLOR_CYCLE[0],
          label: col === 0 ? "mean" : undefined,
        },
      ],
    });
  });
  const svg = renderFigure({
    width: groups.experiments.length * PANEL_WIDTH,
    height: PANEL_HEIGHT + (footnotes.length > 0 ? 14 + 11 * footnotes.length : 0),
    panels,
    footnotes,
  });
  return { svg, sidecar: { kind: "rmse-vs-n", experiments } };
}

/** One latent component, true versus forecast, beside identification error. */
export function buildParamAndIdentFigure(
  trajInput: NamedInput,
  resultsInput: NamedInput,
  component: number,
): FigureOutput {
  if (!Number.isInteger(component) || component < 0) {
    throw new Error(`component must be a nonnegative integer, got ${component}`);
  }
  const traj = readTrajectory(trajInput.name, trajInput.text);
  requireColumns(
    traj.table,
    [`theta_true_${component}`, `theta_hat_${component}`],
    trajInput.name,
  );
  const thetaTrue = numericColumn(traj.table, `theta_true_${component}`, trajInput.name);
  const thetaHat = numericColumn(traj.table, `theta_hat_${component}`, trajInput.name);

  const groups = groupMetric(resultsInput.text, resultsInput.name, "a_err_fro");
  const identN: number[] = [];
  const identMeans: number[] = [];
  let excluded = 0;
  let total = 0;
  for (const id of groups.experiments) {
    const entry = groups.byExperiment.get(id)!;
    for (const N of entry.Ns) {
      identN.push(N);
      identMeans.push(mean(entry.byN.get(N)!));
    }
    excluded += entry.failed;
    total += entry.total;
  }
  if (identN.length === 0) {
    throw new Error(`${resultsInput.name}: no usable a_err_fro rows`);
  }

  const footnotes: string[] = [];
  if (excluded > 0) {
    footnotes.push(`${excluded} failed trial(s) of ${total} excluded`);
  }
  const panels: PanelSpec[] = [
    {
      rect: { x: 0, y: 0, width: PANEL_WIDTH, height: PANEL_HEIGHT },
      title: `theta_${component}: true vs forecast`,
      xLabel: "t",
      yLabel: `theta_${component}`,
      series: [
        { xs: traj.ts, ys: thetaTrue, color: COLOR_CYCLE[2], label: "true" },
        { xs: traj.ts, ys: thetaHat, color: COLOR_CYCLE[0], dash: "5 3", label: "forecast" },
      ],
      xMarkers: traj.hasPredict ? [traj.nCollect] : [],
    },
    {
      rect: { x: PANEL_WIDTH, y: 0, width: PANEL_WIDTH, height: PANEL_HEIGHT },
      title: "identification error vs N",
      xLabel: "N",
      yLabel: "mean Frobenius error",
      series: [{ xs: identN, ys: identMeans, color: COLOR_CYCLE[1] }],
    },
  ];
  const svg = renderFigure({
    width: 2 * PANEL_WIDTH,
    height: PANEL_HEIGHT + (footnotes.length > 0 ? 14 + 11 * footnotes.length : 0),
    panels,
    footnotes,
  });
  return {
    svg,
    sidecar: {
      kind: "param-and-ident",
      component,
      N_marker: traj.nCollect,
      ident: { N: identN, mean_a_err_fro: identMeans },
    },
  };
}
