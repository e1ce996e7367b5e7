// Boots a real albatch service for the integration tests and tears it down.

import { spawn, ChildProcess } from "node:child_process";
import { mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

export const PORT = Number(process.env.ALBATCH_TEST_PORT ?? 8971);
const BASE = `http://127.0.0.1:${PORT}`;

let server: ChildProcess | null = null;

const MANIFEST = {
  datasets: [
    {
      name: "walkthrough",
      kind: "synthetic",
      seed: 11,
      spec: {
        n_normal: 180,
        normal_components: [
          [[0.0, 0.0, 0.0], 1.0],
          [[6.0, 0.0, 0.0], 1.0],
        ],
        n_anomaly_cluster: 12,
        anomaly_cluster_offset: 7.0,
        n_anomaly_scatter: 8,
        d: 3,
      },
    },
  ],
};

async function waitForHealth(): Promise<void> {
  for (let i = 0; i < 100; i++) {
    try {
      const res = await fetch(`${BASE}/v1/health`);
      if (res.ok) return;
    } catch {
      // not up yet
    }
    await new Promise((r) => setTimeout(r, 200));
  }
  throw new Error(`service did not come up on ${BASE}`);
}

export async function setup(): Promise<void> {
  const dir = mkdtempSync(join(tmpdir(), "albatch-ui-test-"));
  const manifestPath = join(dir, "manifest.json");
  writeFileSync(manifestPath, JSON.stringify(MANIFEST));
  server = spawn(
    "albatch",
    [
      "serve",
      "--bind",
      `127.0.0.1:${PORT}`,
      "--manifest",
      manifestPath,
      "--snapshots",
      join(dir, "snapshots"),
    ],
    { stdio: ["ignore", "pipe", "pipe"] },
  );
  server.on("error", (err) => {
    throw new Error(`failed to launch albatch serve: ${err.message}`);
  });
  await waitForHealth();
}

export async function teardown(): Promise<void> {
  if (server && !server.killed) {
    server.kill("SIGTERM");
    await new Promise((r) => setTimeout(r, 300));
    if (server.exitCode === null) server.kill("SIGKILL");
  }
}
