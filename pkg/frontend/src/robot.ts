// Thin wrapper around the autoik command-line solver: a Robot derives its
// kinematic plan once at construction and answers IK queries per pose.
// All math stays in the core; this module only shuttles text.

import { execFileSync } from "node:child_process";
import { mkdtempSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

export const VERSION = "0.1.0"; // mirrors the core package version

export type ChainFormat = "native" | "urdf";

export interface RobotOptions {
  /** URDF base link name (required for format "urdf"). */
  baseLink?: string;
  /** URDF tip link name (required for format "urdf"). */
  tipLink?: string;
  /** Override the solver command, e.g. ["python3", "-m", "autoik"]. */
  command?: string[];
}

export interface IkSolution {
  angles: number[];
  exact: boolean;
  errors: { pos: number; rot: number };
}

interface CliResult {
  status: number;
  stdout: string;
  stderr: string;
}

function defaultCommand(): string[] {
  const env = process.env.AUTOIK_CMD;
  if (env && env.trim().length > 0) {
    return env.trim().split(/\s+/);
  }
  return ["python3", "-m", "autoik"];
}

function runCli(command: string[], args: string[]): CliResult {
  const [prog, ...pre] = command;
  try {
    const stdout = execFileSync(prog, [...pre, ...args], {
      encoding: "utf-8",
      stdio: ["ignore", "pipe", "pipe"],
    });
    return { status: 0, stdout, stderr: "" };
  } catch (err) {
    const e = err as { status?: number; stdout?: string; stderr?: string };
    if (typeof e.status !== "number") {
      throw err; // spawn failure, not a CLI exit code
    }
    return {
      status: e.status,
      stdout: e.stdout?.toString() ?? "",
      stderr: e.stderr?.toString() ?? "",
    };
  }
}

function asMatrix4(pose: number[] | number[][]): number[] {
  const flat = Array.isArray(pose[0])
    ? (pose as number[][]).flat()
    : (pose as number[]);
  if (flat.length !== 16 || flat.some((v) => typeof v !== "number" || !Number.isFinite(v))) {
    throw new Error("pose must be a 4x4 homogeneous matrix (16 finite reals, row-major)");
  }
  return flat;
}

function checkHomogeneous(m: number[]): void {
  const bottom = [m[12], m[13], m[14], m[15]];
  const want = [0, 0, 0, 1];
  for (let i = 0; i < 4; i++) {
    if (Math.abs(bottom[i] - want[i]) > 1e-9) {
      throw new Error("pose bottom row must be [0 0 0 1]");
    }
  }
  // Rotation block: columns orthonormal, right-handed.
  const r = [
    [m[0], m[1], m[2]],
    [m[4], m[5], m[6]],
    [m[8], m[9], m[10]],
  ];
  for (let i = 0; i < 3; i++) {
    for (let j = 0; j < 3; j++) {
      let dot = 0;
      for (let k = 0; k < 3; k++) dot += r[k][i] * r[k][j];
      const want = i === j ? 1 : 0;
      if (Math.abs(dot - want) > 1e-6) {
        throw new Error("pose rotation block is not orthonormal");
      }
    }
  }
  const det =
    r[0][0] * (r[1][1] * r[2][2] - r[1][2] * r[2][1]) -
    r[0][1] * (r[1][0] * r[2][2] - r[1][2] * r[2][0]) +
    r[0][2] * (r[1][0] * r[2][1] - r[1][1] * r[2][0]);
  if (det < 0) {
    throw new Error("pose rotation block is left-handed");
  }
}

/**
 * A robot handle with a cached one-time derivation.
 *
 * Construction writes the description to a scratch file and runs the
 * solver's derive command once; the resulting kinematic class and
 * derivation time are exposed as properties. solve() never mutates the
 * handle, so one Robot may serve concurrent callers.
 */
export class Robot {
  readonly className: string;
  readonly inverted: boolean;
  /** One-time derivation time reported by the core, in microseconds. */
  readonly deriveMicros: number;

  private readonly file: string;
  private readonly dir: string;
  private readonly command: string[];
  private readonly formatArgs: string[];

  constructor(descriptionText: string, format: ChainFormat = "native",
              options: RobotOptions = {}) {
    this.command = options.command ?? defaultCommand();
    this.dir = mkdtempSync(join(tmpdir(), "autoik-"));
    this.file = join(this.dir, format === "urdf" ? "robot.urdf" : "robot.json");
    writeFileSync(this.file, descriptionText, "utf-8");
    this.formatArgs = ["--format", format];
    if (format === "urdf") {
      if (!options.baseLink || !options.tipLink) {
        throw new Error("urdf format needs baseLink and tipLink");
      }
      this.formatArgs.push("--base", options.baseLink, "--tip", options.tipLink);
    }
    const res = runCli(this.command, ["derive", this.file, ...this.formatArgs]);
    if (res.status !== 0) {
      throw new Error(res.stderr.trim() || `derive failed (exit ${res.status})`);
    }
    const cls = /^class:\s*(\S+)/m.exec(res.stdout);
    const inv = /^inverted:\s*(\S+)/m.exec(res.stdout);
    const dt = /^derivation_us:\s*(\S+)/m.exec(res.stdout);
    if (!cls || !inv || !dt) {
      throw new Error("unexpected derive output");
    }
    this.className = cls[1];
    this.inverted = inv[1] === "true";
    this.deriveMicros = Number(dt[1]);
  }

  /**
   * All IK solutions for a 4x4 homogeneous target pose (row-major 16-array
   * or 4x4 nested array). Angles come back as plain number lists together
   * with the exactness flag and the FK residuals.
   */
  solve(pose: number[] | number[][]): IkSolution[] {
    const m = asMatrix4(pose);
    checkHomogeneous(m);
    const vals = [
      m[0], m[1], m[2],
      m[4], m[5], m[6],
      m[8], m[9], m[10],
      m[3], m[7], m[11],
    ];
    const poseArg = vals.map((v) => v.toPrecision(17)).join(" ");
    const res = runCli(this.command,
                       ["solve", this.file, ...this.formatArgs,
                        "--pose", poseArg, "--json"]);
    if (res.status !== 0 && res.status !== 3) {
      throw new Error(res.stderr.trim() || `solve failed (exit ${res.status})`);
    }
    const doc = JSON.parse(res.stdout) as {
      solutions: { theta: number[]; exact: boolean;
                   pos_err: number; rot_err: number }[];
    };
    return doc.solutions.map((s) => ({
      angles: s.theta,
      exact: s.exact,
      errors: { pos: s.pos_err, rot: s.rot_err },
    }));
  }

  /** Remove the scratch file backing this handle. */
  dispose(): void {
    rmSync(this.dir, { recursive: true, force: true });
  }
}
