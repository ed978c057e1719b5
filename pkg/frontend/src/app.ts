// Entry point: wires the plant view, scenario workbench, and run monitor
// to the service API. Single page, no client-side state beyond what the
// server reports.

import { Api, ApiError } from "./api.js";
import { BpmnDiagram } from "./diagram.js";
import { PlantView } from "./plantView.js";
import { RunMonitor } from "./runMonitor.js";
import type { DeploymentView, PlantConfigJson } from "./types.js";
import { Workbench } from "./workbench.js";

const api = new Api();

const el = (id: string) => document.getElementById(id) as HTMLElement;

const diagram = new BpmnDiagram(el("diagram"));
const plantView = new PlantView(el("plant-cards"), el("deployment-banner"));
const monitor = new RunMonitor(api, diagram, plantView, el("event-log"), el("sparklines"),
                               el("stale-badge"));

let currentPlant: PlantConfigJson | null = null;
let currentDeployment: DeploymentView | null = null;
let acceptedDocId: string | null = null;

const workbench = new Workbench(el("workbench"), api, diagram, {
  onAccepted(docId) {
    acceptedDocId = docId;
    (el("btn-run-accepted") as HTMLButtonElement).disabled = false;
    setStatus(`accepted process stored as ${docId}; deploy & run when ready`);
  },
});

function setStatus(text: string, isError = false): void {
  const status = el("status");
  status.textContent = text;
  status.className = isError ? "status status-error" : "status";
}

function surface(err: unknown): void {
  setStatus(err instanceof ApiError ? err.display() : String(err), true);
}

async function refreshPlants(selected?: string): Promise<void> {
  const select = el("plant-select") as HTMLSelectElement;
  const { plants } = await api.listPlants();
  select.innerHTML = "";
  for (const plant of plants) {
    const option = document.createElement("option");
    option.value = plant.plant_id;
    option.textContent = `${plant.plant_name} (${plant.machines} machines)`;
    select.appendChild(option);
  }
  if (plants.length === 0) {
    workbench.setPlant(null);
    return;
  }
  select.value = selected ?? plants[0].plant_id;
  await selectPlant(select.value);
}

async function selectPlant(plantId: string): Promise<void> {
  try {
    currentPlant = await api.getConfig(plantId);
    plantView.render(currentPlant);
    plantView.setDeployment(currentDeployment);
    workbench.setPlant(plantId);
    monitor.startTelemetry(plantId, currentPlant.machines);
  } catch (err) {
    surface(err);
  }
}

async function deployVirtual(): Promise<void> {
  if (!currentPlant) return;
  try {
    currentDeployment = await api.deploy(currentPlant.plant_id, "virtual", "realtime_scaled", 4.0);
    plantView.setDeployment(currentDeployment);
    setStatus(`deployment ${currentDeployment.deployment_id} is ${currentDeployment.status}`);
  } catch (err) {
    surface(err);
  }
}

async function stopDeployment(): Promise<void> {
  if (!currentDeployment) return;
  try {
    await api.stopDeployment(currentDeployment.deployment_id);
    currentDeployment = null;
    plantView.setDeployment(null);
    setStatus("deployment stopped");
  } catch (err) {
    surface(err);
  }
}

async function runAccepted(): Promise<void> {
  if (!acceptedDocId || !currentPlant) return;
  try {
    if (!currentDeployment || currentDeployment.status !== "ready") {
      await deployVirtual();
    }
    if (!currentDeployment) return;
    const process = await api.processJson(acceptedDocId);
    diagram.render(process);
    const { run_id } = await api.startRun(currentDeployment.deployment_id, acceptedDocId);
    setStatus(`run ${run_id} started`);
    monitor.watch(run_id, (outcome) => setStatus(`run ${run_id} finished: ${outcome}`));
  } catch (err) {
    surface(err);
  }
}

async function uploadAml(file: File): Promise<void> {
  try {
    const xml = await file.text();
    const { plant_id } = await api.ingestPlant(xml);
    setStatus(`ingested ${file.name} as ${plant_id}`);
    await refreshPlants(plant_id);
  } catch (err) {
    surface(err);
  }
}

el("plant-select").addEventListener("change", (event) => {
  void selectPlant((event.target as HTMLSelectElement).value);
});
el("btn-deploy").addEventListener("click", () => void deployVirtual());
el("btn-stop-deploy").addEventListener("click", () => void stopDeployment());
el("btn-run-accepted").addEventListener("click", () => void runAccepted());
el("aml-upload").addEventListener("change", (event) => {
  const input = event.target as HTMLInputElement;
  if (input.files && input.files[0]) void uploadAml(input.files[0]);
});

void refreshPlants().catch(surface);
