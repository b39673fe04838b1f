/** Vitest global setup for the integration suite.
 *
 * Prepares a fixture course with the engine CLI (ingest, extract from canned
 * outputs, approve the review CSV, build) in a temp data dir, then launches
 * the HTTP service and waits for /api/health before tests run.
 */

import { execFileSync, spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync, readFileSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import type { TestProject } from "vitest/node";

declare module "vitest" {
  export interface ProvidedContext {
    baseUrl: string;
  }
}

const FRONTEND_ROOT = join(dirname(fileURLToPath(import.meta.url)), "..");
const REPO_ROOT = join(FRONTEND_ROOT, "..");
const FIXTURE = join(REPO_ROOT, "tests", "fixtures", "finance");
const PYTHON = process.env.KGRAG_PYTHON ?? "python3";

let server: ChildProcess | undefined;
let dataDir: string | undefined;

function cli(args: string[], dir: string): void {
  execFileSync(PYTHON, ["-m", "kgrag", "--data-dir", dir, ...args], {
    cwd: REPO_ROOT,
    stdio: "pipe",
  });
}

function approveReviewCsv(path: string): void {
  // fixture fields contain no embedded commas, so line-level editing is safe
  const lines = readFileSync(path, "utf-8").trimEnd().split("\n");
  const edited = lines.map((line, i) => {
    if (i === 0) return line;
    const status = line.startsWith("Financial Markets,") ? "rejected" : "approved";
    return line.replace(",pending,", `,${status},`);
  });
  writeFileSync(path, edited.join("\n") + "\n", "utf-8");
}

async function waitForHealth(baseUrl: string, timeoutMs = 30000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  let lastError: unknown = "no attempt";
  while (Date.now() < deadline) {
    try {
      const response = await fetch(`${baseUrl}/api/health`);
      if (response.ok) return;
      lastError = `status ${response.status}`;
    } catch (error) {
      lastError = error;
    }
    await new Promise((resolve) => setTimeout(resolve, 250));
  }
  throw new Error(`service did not come up at ${baseUrl}: ${lastError}`);
}

export default async function setup(project: TestProject): Promise<() => void> {
  dataDir = mkdtempSync(join(tmpdir(), "kgrag-ui-it-"));
  const reviewCsv = join(dataDir, "review.csv");

  cli(["ingest", join(FIXTURE, "docs")], dataDir);
  cli(["extract", "--canned", join(FIXTURE, "canned")], dataDir);
  cli(["review", "export", reviewCsv], dataDir);
  approveReviewCsv(reviewCsv);
  cli(["review", "import", reviewCsv], dataDir);
  cli(["build"], dataDir);

  const port = 8900 + (process.pid % 500);
  const baseUrl = `http://127.0.0.1:${port}`;
  server = spawn(
    PYTHON,
    ["-m", "kgrag", "--data-dir", dataDir, "serve", "--port", String(port)],
    { cwd: REPO_ROOT, stdio: "pipe" },
  );
  await waitForHealth(baseUrl);
  project.provide("baseUrl", baseUrl);

  return () => {
    server?.kill("SIGTERM");
    if (dataDir) rmSync(dataDir, { recursive: true, force: true });
  };
}
