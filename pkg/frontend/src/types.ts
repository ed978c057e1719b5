// API payload shapes, mirroring the documented /api/v1 contracts.

export interface ProcessNode {
  node_id: string;
  kind: string;
  name: string;
  capability_id: string | null;
  params: Record<string, string>;
  default_flow_id: string | null;
}

export interface ProcessFlow {
  flow_id: string;
  source: string;
  target: string;
  condition: string | null;
}

export interface ProcessLane {
  lane_id: string;
  name: string;
  node_ids: string[];
}

export interface ProcessJson {
  process_id: string;
  nodes: ProcessNode[];
  flows: ProcessFlow[];
  lanes: ProcessLane[];
  variables: Record<string, string>;
}

export interface SignalJson {
  signal_id: string;
  name: string;
  direction: string;
  data_kind: string;
  binding: { table: string; address: number };
}

export interface MachineJson {
  machine_id: string;
  name: string;
  kind: string;
  zone_id: string;
  signals: SignalJson[];
}

export interface ZoneJson {
  zone_id: string;
  name: string;
  parent_zone_id: string | null;
  machine_ids: string[];
}

export interface CapabilityJson {
  capability_id: string;
  name: string;
  machine_id: string;
  controller_id: string;
  nominal_duration_s: number;
  params: Array<{ name: string; data_kind: string; range: [number, number] | null }>;
}

export interface PlantConfigJson {
  plant_id: string;
  plant_name: string;
  machines: MachineJson[];
  zones: ZoneJson[];
  capabilities: CapabilityJson[];
  controllers: Array<{ controller_id: string; name: string; kind: string }>;
}

export interface PlantSummary {
  plant_id: string;
  plant_name: string;
  machines: number;
  capabilities: number;
  deployed: boolean;
}

export interface HistoryEntryJson {
  iteration: number;
  action: string;
  raw_response: string | null;
  bpmn_xml: string | null;
  validation_messages: string[];
  run_log: { outcome: string } | null;
  supervisor_note: string | null;
}

export interface ScenarioView {
  scenario_id: string;
  plant_id: string;
  goal: string;
  phase: string;
  iteration: number;
  corrective: string | null;
  current_bpmn_xml: string | null;
  last_validation_errors: string[];
  last_run_outcome: string | null;
  accepted_doc_id: string | null;
  history: HistoryEntryJson[];
}

export interface DeploymentView {
  deployment_id: string;
  plant_id: string;
  mode: string;
  status: string;
  clock: { mode: string; scale: number; now_s: number };
  endpoints: Record<string, [string, number]>;
  adapters: Record<string, { registered: boolean; detail: string }>;
}

export interface RunEventMsg {
  seq: number;
  source: "engine" | "adapter" | "run";
  at?: number;
  node_id?: string;
  phase?: string;
  detail?: string;
  kind?: string;
  command_id?: string;
  outcome?: string;
  stats?: Record<string, unknown>;
}

export interface TelemetrySampleJson {
  topic: string;
  value: boolean | number;
  at: number;
}
