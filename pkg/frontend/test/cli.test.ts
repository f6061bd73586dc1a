import { mkdtempSync, readFileSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, afterEach, describe, expect, it, vi } from "vitest";
import { main } from "../src/cli.js";

const dir = mkdtempSync(join(tmpdir(), "figures-"));
afterAll(() => rmSync(dir, { recursive: true, force: true }));
afterEach(() => vi.restoreAllMocks());

const RESULTS = [
  "experiment,trial,N,seed,rmse,a_err_fro,a_err_spec,min_alpha_k,clipped,clamp_count,projections,status",
  "demo,0,10,1,4.0,9.0,8.0,0.5,0,0,0,ok",
  "demo,0,20,3,3.0,5.0,4.0,0.5,0,0,0,ok",
  "",
].join("\n");

const resultsPath = join(dir, "results.csv");
writeFileSync(resultsPath, RESULTS);

function quietErrors(): string[] {
  const messages: string[] = [];
  vi.spyOn(console, "error").mockImplementation((message) => {
    messages.push(String(message));
  });
  return messages;
}

describe("main", () => {
  it("writes the figure and its sidecar, and is byte-stable", () => {
    const out = join(dir, "fig.svg");
    expect(main(["plot-rmse-vs-n", out, resultsPath])).toBe(0);
    const first = readFileSync(out, "utf8");
    const sidecar = readFileSync(`${out}.json`, "utf8");
    expect(first.startsWith("<svg")).toBe(true);
    expect(JSON.parse(sidecar).experiments[0].mean_rmse).toEqual([4.0, 3.0]);

    expect(main(["plot-rmse-vs-n", out, resultsPath])).toBe(0);
    expect(readFileSync(out, "utf8")).toBe(first);
  });

  it("prints usage and fails on an unknown command", () => {
    const messages = quietErrors();
    expect(main(["plot-everything", "out.svg"])).toBe(1);
    expect(messages.join("\n")).toContain("usage:");
  });

  it("fails on a wrong argument count", () => {
    const messages = quietErrors();
    expect(main(["plot-rmse-vs-n", join(dir, "x.svg")])).toBe(1);
    expect(main(["plot-trajectories", join(dir, "x.svg")])).toBe(1);
    expect(messages.join("\n")).toContain("usage:");
  });

  it("fails cleanly when an input file is missing", () => {
    const messages = quietErrors();
    expect(main(["plot-rmse-vs-n", join(dir, "x.svg"), join(dir, "absent.csv")])).toBe(1);
    expect(messages.join("\n")).toContain("absent.csv");
  });

  it("surfaces schema errors from the builders", () => {
    const badPath = join(dir, "bad.csv");
    writeFileSync(badPath, "a,b\n1,2\n");
    const messages = quietErrors();
    expect(main(["plot-rmse-vs-n", join(dir, "x.svg"), badPath])).toBe(1);
    expect(messages.join("\n")).toContain("missing column(s)");
  });
});
