// Client-side mirror of the scenario loop's legal-action table. The server
// guard stays authoritative; these only disable buttons so the UI cannot
// even request an illegal transition.

export type LoopPhase =
  | "drafting"
  | "generated"
  | "validated"
  | "simulating"
  | "awaiting_review"
  | "accepted"
  | "rejected";

export type LoopAction = "generate" | "simulate" | "corrective" | "accept" | "reject";

export const LEGAL_ACTIONS: Record<LoopPhase, LoopAction[]> = {
  drafting: ["generate", "corrective", "reject"],
  generated: [],
  validated: ["simulate", "corrective", "reject"],
  simulating: [],
  awaiting_review: ["accept", "corrective", "simulate", "reject"],
  accepted: [],
  rejected: [],
};

export function canAct(
  phase: string,
  action: LoopAction,
  lastRunOutcome: string | null,
): boolean {
  const legal = LEGAL_ACTIONS[phase as LoopPhase] ?? [];
  if (!legal.includes(action)) return false;
  if (action === "accept") return lastRunOutcome === "completed";
  return true;
}

export function legalActions(phase: string, lastRunOutcome: string | null): LoopAction[] {
  return (LEGAL_ACTIONS[phase as LoopPhase] ?? []).filter((action) =>
    canAct(phase, action, lastRunOutcome),
  );
}
