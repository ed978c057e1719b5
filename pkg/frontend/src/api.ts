// Typed client for the /api/v1 surface. Server errors are surfaced
// verbatim: ApiError carries the error body's code/message/detail.

import type {
  DeploymentView,
  PlantConfigJson,
  PlantSummary,
  ProcessJson,
  ScenarioView,
  TelemetrySampleJson,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
    public detail: string,
  ) {
    super(message);
  }

  display(): string {
    return this.detail ? `${this.message}: ${this.detail}` : this.message;
  }
}

export class Api {
  constructor(
    private base = "/api/v1",
    private fetchFn: typeof fetch = fetch.bind(globalThis),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown, rawBody?: string): Promise<T> {
    const init: RequestInit = { method };
    if (rawBody !== undefined) {
      init.body = rawBody;
      init.headers = { "Content-Type": "application/xml" };
    } else if (body !== undefined) {
      init.body = JSON.stringify(body);
      init.headers = { "Content-Type": "application/json" };
    }
    const response = await this.fetchFn(`${this.base}${path}`, init);
    if (!response.ok) {
      let code = "http_error";
      let message = `HTTP ${response.status}`;
      let detail = "";
      try {
        const data = await response.json();
        if (data && data.error) {
          code = data.error.code ?? code;
          message = data.error.message ?? message;
          detail = data.error.detail ?? "";
        }
      } catch {
        // non-JSON error body; keep the status line
      }
      throw new ApiError(response.status, code, message, detail);
    }
    if (response.status === 204) return undefined as T;
    return (await response.json()) as T;
  }

  listPlants(): Promise<{ plants: PlantSummary[] }> {
    return this.request("GET", "/plants");
  }

  ingestPlant(xml: string): Promise<{ plant_id: string }> {
    return this.request("POST", "/plants", undefined, xml);
  }

  getConfig(plantId: string): Promise<PlantConfigJson> {
    return this.request("GET", `/plants/${plantId}/config`);
  }

  deploy(plantId: string, mode: string, clockMode: string, scale: number): Promise<DeploymentView> {
    return this.request("POST", `/plants/${plantId}/deploy`, {
      mode,
      clock: { mode: clockMode, scale },
    });
  }

  getDeployment(deploymentId: string): Promise<DeploymentView> {
    return this.request("GET", `/deployments/${deploymentId}`);
  }

  stopDeployment(deploymentId: string): Promise<unknown> {
    return this.request("DELETE", `/deployments/${deploymentId}`);
  }

  createScenario(plantId: string, goal: string): Promise<ScenarioView> {
    return this.request("POST", "/scenarios", { plant_id: plantId, goal });
  }

  getScenario(scenarioId: string): Promise<ScenarioView> {
    return this.request("GET", `/scenarios/${scenarioId}`);
  }

  scenarioAction(scenarioId: string, action: string, note?: string): Promise<ScenarioView> {
    const body = action === "corrective" ? { note } : undefined;
    return this.request("POST", `/scenarios/${scenarioId}/${action}`, body);
  }

  startRun(deploymentId: string, bpmnDocId: string): Promise<{ run_id: string }> {
    return this.request("POST", `/deployments/${deploymentId}/runs`, {
      bpmn_doc_id: bpmnDocId,
      vars: {},
    });
  }

  processJson(docId: string): Promise<ProcessJson> {
    return this.request("GET", `/documents/${docId}/process`);
  }

  scenarioProcessJson(scenarioId: string): Promise<ProcessJson> {
    return this.request("GET", `/scenarios/${scenarioId}/process`);
  }

  telemetry(filter: string, fromS?: number): Promise<{ samples: TelemetrySampleJson[] }> {
    const params = new URLSearchParams({ filter });
    if (fromS !== undefined) params.set("from_s", String(fromS));
    return this.request("GET", `/telemetry?${params}`);
  }

  runEventsUrl(runId: string): string {
    return `${this.base}/runs/${runId}/events`;
  }
}
