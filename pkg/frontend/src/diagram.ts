// Read-only SVG rendering of a process layout, with a token overlay the
// run monitor drives: nodes highlight as tokens enter and settle as they
// complete.

import { layoutProcess, type DiagramLayout } from "./layout.js";
import type { ProcessJson } from "./types.js";

const SVG_NS = "http://www.w3.org/2000/svg";

export type NodeState = "idle" | "active" | "done" | "failed";

export class BpmnDiagram {
  private layout: DiagramLayout | null = null;
  private nodeGroups = new Map<string, SVGGElement>();

  constructor(private container: HTMLElement) {}

  clear(): void {
    this.container.innerHTML = "";
    this.layout = null;
    this.nodeGroups.clear();
  }

  render(process: ProcessJson): void {
    this.clear();
    const layout = layoutProcess(process);
    this.layout = layout;

    const svg = document.createElementNS(SVG_NS, "svg");
    svg.setAttribute("viewBox", `0 0 ${layout.width} ${layout.height}`);
    svg.setAttribute("width", String(layout.width));
    svg.classList.add("bpmn-diagram");

    const defs = document.createElementNS(SVG_NS, "defs");
    defs.innerHTML =
      '<marker id="arrow" viewBox="0 0 10 10" refX="9" refY="5" ' +
      'markerWidth="7" markerHeight="7" orient="auto-start-reverse">' +
      '<path d="M 0 0 L 10 5 L 0 10 z" class="edge-arrow"/></marker>';
    svg.appendChild(defs);

    for (const lane of layout.lanes) {
      const band = document.createElementNS(SVG_NS, "rect");
      band.setAttribute("x", "0");
      band.setAttribute("y", String(lane.top));
      band.setAttribute("width", String(layout.width));
      band.setAttribute("height", String(lane.height));
      band.classList.add("lane-band");
      svg.appendChild(band);
      if (lane.name) {
        const label = document.createElementNS(SVG_NS, "text");
        label.setAttribute("x", "12");
        label.setAttribute("y", String(lane.top + lane.height / 2));
        label.classList.add("lane-label");
        label.textContent = lane.name;
        svg.appendChild(label);
      }
    }

    for (const edge of layout.edges) {
      const line = document.createElementNS(SVG_NS, "polyline");
      line.setAttribute("points", edge.points.map(([x, y]) => `${x},${y}`).join(" "));
      line.setAttribute("marker-end", "url(#arrow)");
      line.classList.add("edge");
      svg.appendChild(line);
      if (edge.condition && edge.points.length > 0) {
        const [x, y] = edge.points[0];
        const caption = document.createElementNS(SVG_NS, "text");
        caption.setAttribute("x", String(x + 6));
        caption.setAttribute("y", String(y - 6));
        caption.classList.add("edge-condition");
        caption.textContent = edge.condition;
        svg.appendChild(caption);
      }
    }

    for (const node of layout.nodes) {
      const group = document.createElementNS(SVG_NS, "g");
      group.dataset.nodeId = node.id;
      group.classList.add("node", `node-${node.kind}`);
      if (node.kind === "start_event" || node.kind === "end_event") {
        const circle = document.createElementNS(SVG_NS, "circle");
        circle.setAttribute("cx", String(node.x));
        circle.setAttribute("cy", String(node.y));
        circle.setAttribute("r", String(node.w / 2));
        group.appendChild(circle);
      } else if (node.kind.endsWith("gateway")) {
        const half = node.w / 2;
        const diamond = document.createElementNS(SVG_NS, "polygon");
        diamond.setAttribute("points", [
          `${node.x},${node.y - half}`,
          `${node.x + half},${node.y}`,
          `${node.x},${node.y + half}`,
          `${node.x - half},${node.y}`,
        ].join(" "));
        group.appendChild(diamond);
        const glyph = document.createElementNS(SVG_NS, "text");
        glyph.setAttribute("x", String(node.x));
        glyph.setAttribute("y", String(node.y + 5));
        glyph.classList.add("gateway-glyph");
        glyph.textContent = node.kind === "parallel_gateway" ? "+" : "×";
        group.appendChild(glyph);
      } else {
        const rect = document.createElementNS(SVG_NS, "rect");
        rect.setAttribute("x", String(node.x - node.w / 2));
        rect.setAttribute("y", String(node.y - node.h / 2));
        rect.setAttribute("width", String(node.w));
        rect.setAttribute("height", String(node.h));
        rect.setAttribute("rx", "8");
        group.appendChild(rect);
        const label = document.createElementNS(SVG_NS, "text");
        label.setAttribute("x", String(node.x));
        label.setAttribute("y", String(node.y + 4));
        label.classList.add("node-label");
        label.textContent = node.name || node.id;
        group.appendChild(label);
      }
      svg.appendChild(group);
      this.nodeGroups.set(node.id, group);
    }

    this.container.appendChild(svg);
  }

  setNodeState(nodeId: string, state: NodeState): void {
    const group = this.nodeGroups.get(nodeId);
    if (!group) return;
    group.classList.remove("state-active", "state-done", "state-failed");
    if (state !== "idle") group.classList.add(`state-${state}`);
  }

  resetStates(): void {
    for (const nodeId of this.nodeGroups.keys()) this.setNodeState(nodeId, "idle");
  }

  get rendered(): boolean {
    return this.layout !== null;
  }
}
