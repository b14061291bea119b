import { execFile } from "node:child_process";
import { readFileSync } from "node:fs";
import { join, dirname } from "node:path";
import { fileURLToPath } from "node:url";
import { promisify } from "node:util";

import { Robot } from "../src/robot.js";

const execFileP = promisify(execFile);

export const HERE = dirname(fileURLToPath(import.meta.url));
export const REPO_ROOT = join(HERE, "..", "..");

export interface Case {
  q: number[];
  pose: number[];
}

export function loadCases(robot: string): Case[] {
  const all = JSON.parse(
    readFileSync(join(HERE, "fixtures", "poses.json"), "utf-8"));
  return all[robot];
}

export function robotDescription(robot: string): string {
  return readFileSync(join(REPO_ROOT, "robots", `${robot}.json`), "utf-8");
}

export function makeRobot(robot: string): Robot {
  return new Robot(robotDescription(robot), "native");
}

function cliCommand(): string[] {
  const env = process.env.AUTOIK_CMD;
  if (env && env.trim().length > 0) return env.trim().split(/\s+/);
  return ["python3", "-m", "autoik"];
}

export interface CliSolution {
  theta: number[];
  exact: boolean;
  pos_err: number;
  rot_err: number;
}

/** Solve one pose by invoking the CLI directly (reference for parity). */
export async function cliSolve(robot: string, pose: number[],
                               ): Promise<CliSolution[]> {
  const m = pose;
  const vals = [
    m[0], m[1], m[2], m[4], m[5], m[6], m[8], m[9], m[10],
    m[3], m[7], m[11],
  ];
  const poseArg = vals.map((v) => v.toPrecision(17)).join(" ");
  const [prog, ...pre] = cliCommand();
  const args = [...pre, "solve", join(REPO_ROOT, "robots", `${robot}.json`),
                "--pose", poseArg, "--json"];
  let stdout: string;
  try {
    ({ stdout } = await execFileP(prog, args, { encoding: "utf-8" }));
  } catch (err) {
    const e = err as { code?: number; stdout?: string };
    if (e.code === 3 && e.stdout) {
      stdout = e.stdout.toString();
    } else {
      throw err;
    }
  }
  return JSON.parse(stdout).solutions;
}

export async function mapPool<T, R>(items: T[], limit: number,
                                    fn: (item: T, i: number) => Promise<R>,
                                    ): Promise<R[]> {
  const out: R[] = new Array(items.length);
  let next = 0;
  async function worker(): Promise<void> {
    while (next < items.length) {
      const i = next++;
      out[i] = await fn(items[i], i);
    }
  }
  await Promise.all(Array.from({ length: limit }, worker));
  return out;
}

/** Max per-joint angular difference modulo 2 pi. */
export function angleSetDistance(a: number[], b: number[]): number {
  let worst = 0;
  for (let i = 0; i < a.length; i++) {
    let d = (a[i] - b[i]) % (2 * Math.PI);
    if (d > Math.PI) d -= 2 * Math.PI;
    if (d < -Math.PI) d += 2 * Math.PI;
    worst = Math.max(worst, Math.abs(d));
  }
  return worst;
}

export function sameSolutionSets(a: number[][], b: number[][],
                                 tol: number): boolean {
  if (a.length !== b.length) return false;
  for (let i = 0; i < a.length; i++) {
    if (angleSetDistance(a[i], b[i]) > tol) return false;
  }
  return true;
}

/** Parity check for one robot: wrapper output equals direct CLI output. */
export async function runParity(robotName: string, limit = 8): Promise<void> {
  const robot = makeRobot(robotName);
  try {
    const cases = loadCases(robotName);
    const reference = await mapPool(cases, limit,
                                    (c) => cliSolve(robotName, c.pose));
    cases.forEach((c, i) => {
      const got = robot.solve(c.pose);
      const ref = reference[i];
      if (got.length !== ref.length) {
        throw new Error(`case ${i}: ${got.length} vs ${ref.length} solutions`);
      }
      // Both sides are sorted lexicographically; compare position-wise.
      if (!sameSolutionSets(got.map((s) => s.angles),
                            ref.map((s) => s.theta), 1e-12)) {
        throw new Error(`case ${i}: solution sets differ`);
      }
      got.forEach((s, k) => {
        if (s.exact !== ref[k].exact) {
          throw new Error(`case ${i}: exact flags differ`);
        }
      });
      // The ground-truth configuration must appear in the wrapper's set.
      if (!got.some((s) => angleSetDistance(s.angles, c.q) <= 1e-6)) {
        throw new Error(`case ${i}: ground truth not recovered`);
      }
    });
  } finally {
    robot.dispose();
  }
}
