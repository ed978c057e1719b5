// Live run feed: token overlay on the diagram, an event log pane, and
// per-machine telemetry sparklines fed by periodic /telemetry polls.

import type { Api } from "./api.js";
import type { BpmnDiagram } from "./diagram.js";
import type { PlantView } from "./plantView.js";
import { sparklinePoints, type SparkSample } from "./sparkline.js";
import { NdjsonStream } from "./stream.js";
import type { MachineJson, RunEventMsg } from "./types.js";

const SPARK_WINDOW = 120; // samples kept per machine

// Display latency budget: stream events render synchronously on receipt;
// telemetry-backed card state refreshes at this cadence (< 500 ms).
export const POLL_MS = 400;

export class RunMonitor {
  private stream: NdjsonStream<RunEventMsg> | null = null;
  private traces = new Map<string, SparkSample[]>();
  private sparkEls = new Map<string, SVGPolylineElement>();
  private pollTimer: number | null = null;
  private lastPollAt = 0;

  constructor(
    private api: Api,
    private diagram: BpmnDiagram,
    private plantView: PlantView,
    private logEl: HTMLElement,
    private sparksEl: HTMLElement,
    private staleEl: HTMLElement,
  ) {}

  watch(runId: string, onDone?: (outcome: string) => void): void {
    this.stopStream();
    this.diagram.resetStates();
    this.logEl.innerHTML = "";
    this.stream = new NdjsonStream<RunEventMsg>(this.api.runEventsUrl(runId), {
      onEvent: (event) => this.handleEvent(event),
      onStale: (stale) => {
        this.staleEl.hidden = !stale;
      },
      onEnd: () => {
        const last = this.logEl.lastElementChild?.textContent ?? "";
        onDone?.(last.includes("completed") ? "completed" : last);
      },
    });
    void this.stream.run();
  }

  stopStream(): void {
    this.stream?.stop();
    this.stream = null;
  }

  private handleEvent(event: RunEventMsg): void {
    const line = document.createElement("div");
    line.className = `log-line log-${event.source}`;
    if (event.source === "engine") {
      line.textContent =
        `${(event.at ?? 0).toFixed(2).padStart(8)}  ${event.node_id}  ${event.phase}` +
        (event.detail ? `  ${event.detail}` : "");
      this.applyTokenState(event);
    } else if (event.source === "adapter") {
      line.textContent =
        `${(event.at ?? 0).toFixed(2).padStart(8)}  ${event.command_id}  ${event.kind}` +
        (event.detail ? `  ${event.detail}` : "");
    } else {
      line.textContent = `run finished: ${event.outcome}`;
      line.classList.add(event.outcome === "completed" ? "log-ok" : "log-bad");
    }
    this.logEl.appendChild(line);
    this.logEl.scrollTop = this.logEl.scrollHeight;
  }

  private applyTokenState(event: RunEventMsg): void {
    if (!event.node_id || !this.diagram.rendered) return;
    if (event.phase === "entered" || event.phase === "dispatched") {
      this.diagram.setNodeState(event.node_id, "active");
    } else if (event.phase === "completed") {
      this.diagram.setNodeState(event.node_id, "done");
    } else if (event.phase === "failed") {
      this.diagram.setNodeState(event.node_id, "failed");
    }
  }

  // -- telemetry ---------------------------------------------------------

  startTelemetry(plantId: string, machines: MachineJson[]): void {
    this.stopTelemetry();
    this.sparksEl.innerHTML = "";
    this.traces.clear();
    this.sparkEls.clear();
    for (const machine of machines) {
      const row = document.createElement("div");
      row.className = "spark-row";
      row.innerHTML =
        `<span class="spark-name">${machine.name}</span>` +
        `<svg class="spark" viewBox="0 0 160 26" width="160" height="26">` +
        `<polyline class="spark-line" points=""/></svg>`;
      this.sparksEl.appendChild(row);
      this.sparkEls.set(machine.machine_id, row.querySelector(".spark-line") as SVGPolylineElement);
      this.traces.set(machine.machine_id, []);
    }

    const poll = async () => {
      try {
        const { samples } = await this.api.telemetry(
          `plant/${plantId}/+/busy`,
          this.lastPollAt > 0 ? this.lastPollAt : undefined,
        );
        for (const sample of samples) {
          const [, , machineId, signal] = sample.topic.split("/");
          this.lastPollAt = Math.max(this.lastPollAt, sample.at);
          const trace = this.traces.get(machineId);
          if (trace) {
            trace.push({ at: sample.at, value: sample.value });
            if (trace.length > SPARK_WINDOW) trace.shift();
            const el = this.sparkEls.get(machineId);
            if (el) el.setAttribute("points", sparklinePoints(trace, 160, 26));
          }
          if (signal === "busy") {
            this.plantView.setPhase(machineId, sample.value ? "busy" : "idle");
          }
          this.plantView.setSignal(machineId, signal, sample.value);
        }
      } catch {
        // transient polling errors surface through the stale badge only
      }
    };
    void poll();
    this.pollTimer = window.setInterval(poll, POLL_MS);
  }

  stopTelemetry(): void {
    if (this.pollTimer !== null) {
      window.clearInterval(this.pollTimer);
      this.pollTimer = null;
    }
  }
}
