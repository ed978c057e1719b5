// Machine cards grouped by zone, plus the deployment status banner.
// Card phases and signal values come exclusively from API/telemetry data.

import type { DeploymentView, PlantConfigJson } from "./types.js";

export class PlantView {
  private cards = new Map<string, HTMLElement>();
  private signalRows = new Map<string, HTMLElement>();

  constructor(private container: HTMLElement, private banner: HTMLElement) {}

  render(config: PlantConfigJson): void {
    this.container.innerHTML = "";
    this.cards.clear();
    this.signalRows.clear();

    const machinesByZone = new Map<string, typeof config.machines>();
    for (const machine of config.machines) {
      const list = machinesByZone.get(machine.zone_id) ?? [];
      list.push(machine);
      machinesByZone.set(machine.zone_id, list);
    }

    const renderZone = (zoneId: string, title: string) => {
      const machines = machinesByZone.get(zoneId) ?? [];
      if (!machines.length) return;
      const section = document.createElement("section");
      section.className = "zone";
      const heading = document.createElement("h3");
      heading.textContent = title;
      section.appendChild(heading);
      const grid = document.createElement("div");
      grid.className = "machine-grid";
      for (const machine of machines) {
        const card = document.createElement("div");
        card.className = "machine-card";
        card.dataset.machineId = machine.machine_id;
        card.innerHTML =
          `<div class="machine-name">${machine.name}</div>` +
          `<div class="machine-kind">${machine.kind.replace("_", " ")}</div>` +
          `<div class="machine-phase" data-role="phase">idle</div>` +
          `<dl class="machine-signals"></dl>`;
        const signals = card.querySelector(".machine-signals") as HTMLElement;
        for (const signal of machine.signals) {
          const dt = document.createElement("dt");
          dt.textContent = signal.name;
          const dd = document.createElement("dd");
          dd.textContent = "—";
          signals.appendChild(dt);
          signals.appendChild(dd);
          this.signalRows.set(`${machine.machine_id}/${signal.name}`, dd);
        }
        grid.appendChild(card);
        this.cards.set(machine.machine_id, card);
      }
      section.appendChild(grid);
      this.container.appendChild(section);
    };

    for (const zone of config.zones) {
      renderZone(zone.zone_id, zone.name);
    }
    renderZone("", "Unzoned");
  }

  setDeployment(deployment: DeploymentView | null): void {
    if (!deployment) {
      this.banner.className = "banner banner-none";
      this.banner.textContent = "no active deployment";
      return;
    }
    this.banner.className = `banner banner-${deployment.status}`;
    const adapters = Object.entries(deployment.adapters)
      .map(([controllerId, a]) => `${controllerId}: ${a.registered ? "registered" : "offline"}`)
      .join(", ");
    this.banner.textContent =
      `${deployment.mode} deployment ${deployment.deployment_id} — ${deployment.status}` +
      (adapters ? ` (${adapters})` : "");
  }

  setPhase(machineId: string, phase: string): void {
    const card = this.cards.get(machineId);
    if (!card) return;
    const label = card.querySelector('[data-role="phase"]') as HTMLElement;
    label.textContent = phase;
    card.classList.toggle("machine-busy", phase === "busy");
    card.classList.toggle("machine-error", phase === "error");
  }

  setSignal(machineId: string, signal: string, value: boolean | number): void {
    const row = this.signalRows.get(`${machineId}/${signal}`);
    if (row) row.textContent = String(value);
  }
}
