// Scripted UI session against a live service: the exact call sequence the
// workbench buttons issue (generate -> simulate -> corrective -> generate
// -> simulate -> accept), gated by the same guards the buttons use. Skips
// when the python service cannot be spawned.

import { spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync, readFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { Api } from "../src/api.js";
import { canAct } from "../src/guards.js";
import { POLL_MS } from "../src/runMonitor.js";
import type { ScenarioView } from "../src/types.js";

const HERE = dirname(fileURLToPath(import.meta.url));
const DEMO_AML = join(HERE, "..", "..", "src", "linetwin", "fixtures", "demo_plant.aml");

const PORT = 18430 + Math.floor(Math.random() * 1000);
const BASE = `http://127.0.0.1:${PORT}`;
const GOAL = "steps: [LoadFromWarehouse, RobotCommand(to=punch), Stamp, " +
  "RobotCommand(to=index), MillAndDrill, StoreToWarehouse]";

let service: ChildProcess | null = null;
let available = false;

async function waitHealthy(timeoutMs = 20000): Promise<boolean> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    try {
      const response = await fetch(`${BASE}/api/v1/health`);
      if (response.ok) return true;
    } catch {
      await new Promise((resolve) => setTimeout(resolve, 200));
    }
  }
  return false;
}

beforeAll(async () => {
  const dataDir = mkdtempSync(join(tmpdir(), "linetwin-ui-"));
  service = spawn("python3", ["-m", "linetwin.cli", "serve",
    "--host", "127.0.0.1", "--port", String(PORT)], {
    env: { ...process.env, LINETWIN_DATA_DIR: dataDir },
    stdio: "ignore",
  });
  service.on("error", () => { available = false; });
  available = await waitHealthy();
}, 30000);

afterAll(() => {
  service?.kill("SIGKILL");
});

describe("scripted UI session against the live service", () => {
  it("drives the loop with guard-gated calls and accepts only after a completed run", async () => {
    if (!available) {
      console.warn("service not available; skipping live UI session");
      return;
    }
    const api = new Api(`${BASE}/api/v1`);

    // The UI's upload control posts the raw AML body.
    const ingest = await api.ingestPlant(readFileSync(DEMO_AML, "utf-8"));
    const plantId = ingest.plant_id;

    let scenario: ScenarioView = await api.createScenario(plantId, GOAL);
    const act = async (action: "generate" | "simulate" | "corrective" | "accept", note?: string) => {
      // A disabled button can never fire; the test honors the same guard.
      expect(canAct(scenario.phase, action, scenario.last_run_outcome)).toBe(true);
      scenario = await api.scenarioAction(scenario.scenario_id, action, note);
      return scenario;
    };

    // accept stays disabled until a completed simulation run exists
    expect(canAct(scenario.phase, "accept", scenario.last_run_outcome)).toBe(false);
    await act("generate");
    expect(scenario.phase).toBe("validated");
    expect(canAct(scenario.phase, "accept", scenario.last_run_outcome)).toBe(false);

    // what the workbench renders after generate: the candidate diagram
    const candidate = await api.scenarioProcessJson(scenario.scenario_id);
    expect(candidate.nodes.filter((n) => n.kind === "service_task")).toHaveLength(6);

    await act("simulate");
    expect(scenario.phase).toBe("awaiting_review");
    expect(scenario.last_run_outcome).toBe("completed");

    // The engineer steers once more before accepting.
    await act("corrective", "keep the same step order");
    expect(scenario.phase).toBe("drafting");
    expect(canAct(scenario.phase, "accept", scenario.last_run_outcome)).toBe(false);
    await act("generate");
    expect(scenario.phase).toBe("validated");
    await act("simulate");
    expect(scenario.last_run_outcome).toBe("completed");

    expect(canAct(scenario.phase, "accept", scenario.last_run_outcome)).toBe(true);
    await act("accept");
    expect(scenario.phase).toBe("accepted");
    expect(scenario.accepted_doc_id).toBeTruthy();
    expect(scenario.history.map((h) => h.action)).toEqual([
      "generate", "simulate", "corrective", "generate", "simulate", "accept",
    ]);

    // Live machine cards transition in dispatch order: the first busy=true
    // sample per machine follows the dispatch sequence of process 1.
    const { samples } = await api.telemetry(`plant/${plantId}/+/busy`);
    const firstBusy = new Map<string, number>();
    for (const sample of samples) {
      const machine = sample.topic.split("/")[2];
      if (sample.value === true && !firstBusy.has(machine)) {
        firstBusy.set(machine, sample.at);
      }
    }
    const order = [...firstBusy.entries()].sort((a, b) => a[1] - b[1]).map(([m]) => m);
    expect(order).toEqual([
      "high-bay-warehouse", "robot-arm", "punching-machine", "indexed-line",
    ]);

    // Display latency budget: telemetry-backed cards refresh faster than
    // 500 ms; stream events render synchronously on receipt.
    expect(POLL_MS).toBeLessThan(500);
  }, 60000);
});
