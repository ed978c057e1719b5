// Scenario workbench: goal entry, generated-BPMN review, corrective
// prompts, and the accept gate. Server responses are the only source of
// state; no optimistic updates.

import { Api, ApiError } from "./api.js";
import type { BpmnDiagram } from "./diagram.js";
import { canAct, type LoopAction } from "./guards.js";
import type { ScenarioView } from "./types.js";

export interface WorkbenchCallbacks {
  onAccepted(docId: string): void;
}

export class Workbench {
  private scenario: ScenarioView | null = null;
  private plantId: string | null = null;

  private goalInput: HTMLTextAreaElement;
  private correctiveInput: HTMLTextAreaElement;
  private validationEl: HTMLElement;
  private historyEl: HTMLElement;
  private phaseEl: HTMLElement;
  private buttons = new Map<string, HTMLButtonElement>();

  constructor(
    root: HTMLElement,
    private api: Api,
    private diagram: BpmnDiagram,
    private callbacks: WorkbenchCallbacks,
  ) {
    this.goalInput = root.querySelector("#goal") as HTMLTextAreaElement;
    this.correctiveInput = root.querySelector("#corrective") as HTMLTextAreaElement;
    this.validationEl = root.querySelector("#validation") as HTMLElement;
    this.historyEl = root.querySelector("#history") as HTMLElement;
    this.phaseEl = root.querySelector("#loop-phase") as HTMLElement;
    for (const action of ["create", "generate", "simulate", "corrective", "accept", "reject"]) {
      const button = root.querySelector(`#btn-${action}`) as HTMLButtonElement;
      this.buttons.set(action, button);
    }
    this.buttons.get("create")!.addEventListener("click", () => void this.create());
    for (const action of ["generate", "simulate", "accept", "reject"] as LoopAction[]) {
      this.buttons.get(action)!.addEventListener("click", () => void this.act(action));
    }
    this.buttons.get("corrective")!.addEventListener("click", () => {
      void this.act("corrective", this.correctiveInput.value);
    });
    this.refreshControls();
  }

  setPlant(plantId: string | null): void {
    this.plantId = plantId;
    this.refreshControls();
  }

  private async create(): Promise<void> {
    if (!this.plantId) return;
    const goal = this.goalInput.value.trim();
    if (!goal) {
      this.showMessages(["goal must not be empty"], true);
      return;
    }
    try {
      this.scenario = await this.api.createScenario(this.plantId, goal);
      this.showMessages([`scenario ${this.scenario.scenario_id} created`], false);
      this.diagram.clear();
      this.renderState();
    } catch (err) {
      this.surfaceError(err);
    }
  }

  private async act(action: LoopAction, note?: string): Promise<void> {
    if (!this.scenario) return;
    if (!canAct(this.scenario.phase, action, this.scenario.last_run_outcome)) return;
    if (action === "corrective" && !note?.trim()) {
      this.showMessages(["corrective note must not be empty"], true);
      return;
    }
    this.setBusy(true);
    try {
      this.scenario = await this.api.scenarioAction(this.scenario.scenario_id, action, note);
      if (action === "corrective") this.correctiveInput.value = "";
      this.renderState();
      if (this.scenario.current_bpmn_xml) {
        await this.refreshDiagram();
      }
      if (this.scenario.phase === "accepted" && this.scenario.accepted_doc_id) {
        this.callbacks.onAccepted(this.scenario.accepted_doc_id);
      }
    } catch (err) {
      this.surfaceError(err);
    } finally {
      this.setBusy(false);
    }
  }

  private async refreshDiagram(): Promise<void> {
    if (!this.scenario) return;
    try {
      const process = await this.api.scenarioProcessJson(this.scenario.scenario_id);
      this.diagram.render(process);
    } catch (err) {
      // malformed candidate: error panel, never a blank screen
      this.surfaceError(err);
    }
  }

  private renderState(): void {
    const scenario = this.scenario;
    if (!scenario) {
      this.phaseEl.textContent = "—";
      this.refreshControls();
      return;
    }
    this.phaseEl.textContent = scenario.phase +
      (scenario.last_run_outcome ? ` (last run: ${scenario.last_run_outcome})` : "");
    if (scenario.last_validation_errors.length) {
      this.showMessages(scenario.last_validation_errors, true);
    } else if (scenario.phase === "validated") {
      this.showMessages(["validation clean"], false);
    }
    this.historyEl.innerHTML = "";
    for (const entry of scenario.history) {
      const item = document.createElement("li");
      const outcome = entry.run_log ? ` → ${entry.run_log.outcome}` : "";
      const note = entry.supervisor_note ? ` “${entry.supervisor_note}”` : "";
      const errors = entry.validation_messages.length
        ? ` (${entry.validation_messages.length} finding(s))` : "";
      item.textContent = `#${entry.iteration} ${entry.action}${outcome}${note}${errors}`;
      this.historyEl.appendChild(item);
    }
    this.refreshControls();
  }

  private refreshControls(): void {
    const scenario = this.scenario;
    this.buttons.get("create")!.disabled = !this.plantId;
    for (const action of ["generate", "simulate", "corrective", "accept", "reject"] as LoopAction[]) {
      const button = this.buttons.get(action)!;
      button.disabled = !scenario || !canAct(scenario.phase, action, scenario.last_run_outcome);
    }
  }

  private setBusy(busy: boolean): void {
    for (const button of this.buttons.values()) button.disabled = busy;
    if (!busy) this.refreshControls();
  }

  private showMessages(messages: string[], isError: boolean): void {
    this.validationEl.innerHTML = "";
    this.validationEl.className = isError ? "validation validation-bad" : "validation validation-ok";
    for (const message of messages) {
      const p = document.createElement("p");
      p.textContent = message;
      this.validationEl.appendChild(p);
    }
  }

  private surfaceError(err: unknown): void {
    if (err instanceof ApiError) {
      this.showMessages([err.display()], true);
    } else {
      this.showMessages([String(err)], true);
    }
  }

  get current(): ScenarioView | null {
    return this.scenario;
  }
}
