import { ApiError, getGraph } from "./api";
import { categoryOf } from "./chain";
import type { GraphPayload } from "./types";

export interface GraphViewOptions {
  getGraphFn?: () => Promise<GraphPayload>;
  width?: number;
  height?: number;
}

interface Point {
  x: number;
  y: number;
}

/**
 * Deterministic force-directed layout: nodes start on a circle (sorted
 * by name, so renders are reproducible) and relax under pairwise
 * repulsion, spring forces along edges, and a centering pull.
 */
export function forceLayout(
  payload: GraphPayload,
  width = 640,
  height = 440,
  iterations = 200,
): Map<string, Point> {
  const names = [...payload.nodes].sort();
  const positions = new Map<string, Point>();
  const radius = Math.min(width, height) / 2 - 60;
  names.forEach((name, index) => {
    const angle = (2 * Math.PI * index) / Math.max(names.length, 1);
    positions.set(name, {
      x: width / 2 + radius * Math.cos(angle),
      y: height / 2 + radius * Math.sin(angle),
    });
  });
  const springLength = Math.max(90, radius / 1.5);
  for (let step = 0; step < iterations; step++) {
    const cooling = 1 - step / iterations;
    const forces = new Map<string, Point>(names.map((n) => [n, { x: 0, y: 0 }]));
    for (let i = 0; i < names.length; i++) {
      for (let j = i + 1; j < names.length; j++) {
        const a = positions.get(names[i])!;
        const b = positions.get(names[j])!;
        const dx = a.x - b.x;
        const dy = a.y - b.y;
        const distSq = Math.max(dx * dx + dy * dy, 1);
        const push = 2200 / distSq;
        const dist = Math.sqrt(distSq);
        forces.get(names[i])!.x += (dx / dist) * push;
        forces.get(names[i])!.y += (dy / dist) * push;
        forces.get(names[j])!.x -= (dx / dist) * push;
        forces.get(names[j])!.y -= (dy / dist) * push;
      }
    }
    for (const edge of payload.edges) {
      if (edge.from === edge.to) continue;
      const a = positions.get(edge.from);
      const b = positions.get(edge.to);
      if (!a || !b) continue;
      const dx = b.x - a.x;
      const dy = b.y - a.y;
      const dist = Math.max(Math.sqrt(dx * dx + dy * dy), 1);
      const pull = 0.02 * (dist - springLength);
      forces.get(edge.from)!.x += (dx / dist) * pull;
      forces.get(edge.from)!.y += (dy / dist) * pull;
      forces.get(edge.to)!.x -= (dx / dist) * pull;
      forces.get(edge.to)!.y -= (dy / dist) * pull;
    }
    for (const name of names) {
      const position = positions.get(name)!;
      const force = forces.get(name)!;
      force.x += (width / 2 - position.x) * 0.01;
      force.y += (height / 2 - position.y) * 0.01;
      position.x += force.x * cooling;
      position.y += force.y * cooling;
      position.x = Math.min(Math.max(position.x, 40), width - 40);
      position.y = Math.min(Math.max(position.y, 24), height - 24);
    }
  }
  return positions;
}

/** Renders GET /graph as SVG with edge labels at two decimals. */
export class GraphView {
  private readonly getGraphFn: () => Promise<GraphPayload>;
  private readonly width: number;
  private readonly height: number;

  constructor(
    private readonly root: HTMLElement,
    options: GraphViewOptions = {},
  ) {
    this.getGraphFn = options.getGraphFn ?? getGraph;
    this.width = options.width ?? 640;
    this.height = options.height ?? 440;
    this.root.innerHTML = '<div class="placeholder">Transition graph not loaded.</div>';
  }

  async load(): Promise<void> {
    try {
      this.render(await this.getGraphFn());
    } catch (error) {
      const kind = error instanceof ApiError ? error.kind : "network failure";
      this.root.innerHTML = `
        <div class="placeholder" data-role="graph-unavailable">
          <span></span>
          <button type="button" data-role="graph-retry">retry</button>
        </div>`;
      this.root.querySelector("span")!.textContent = kind;
      this.root
        .querySelector('[data-role="graph-retry"]')!
        .addEventListener("click", () => void this.load());
    }
  }

  private render(payload: GraphPayload): void {
    if (payload.nodes.length === 0) {
      this.root.innerHTML =
        '<div class="placeholder" data-role="graph-empty">No transitions recorded yet.</div>';
      return;
    }
    const positions = forceLayout(payload, this.width, this.height);
    const svg = document.createElementNS("http://www.w3.org/2000/svg", "svg");
    svg.setAttribute("viewBox", `0 0 ${this.width} ${this.height}`);
    svg.dataset.role = "graph-svg";

    for (const edge of payload.edges) {
      const from = positions.get(edge.from)!;
      const to = positions.get(edge.to)!;
      const line = document.createElementNS("http://www.w3.org/2000/svg", "line");
      line.dataset.role = "edge";
      line.setAttribute("x1", from.x.toFixed(1));
      line.setAttribute("y1", from.y.toFixed(1));
      line.setAttribute("x2", to.x.toFixed(1));
      line.setAttribute("y2", to.y.toFixed(1));
      line.setAttribute("class", "edge");
      svg.append(line);
      const label = document.createElementNS("http://www.w3.org/2000/svg", "text");
      label.dataset.role = "edge-label";
      label.setAttribute("class", "edge-label");
      const offset = edge.from === edge.to ? -14 : 0;
      label.setAttribute("x", ((from.x + to.x) / 2).toFixed(1));
      label.setAttribute("y", ((from.y + to.y) / 2 - 4 + offset).toFixed(1));
      label.textContent = edge.weight.toFixed(2);
      svg.append(label);
    }
    for (const name of payload.nodes) {
      const position = positions.get(name)!;
      const node = document.createElementNS("http://www.w3.org/2000/svg", "circle");
      node.dataset.role = "node";
      node.dataset.kind = name;
      node.setAttribute("cx", position.x.toFixed(1));
      node.setAttribute("cy", position.y.toFixed(1));
      node.setAttribute("r", "7");
      node.setAttribute("class", `node ${categoryOf(name)}`);
      svg.append(node);
      const label = document.createElementNS("http://www.w3.org/2000/svg", "text");
      label.setAttribute("class", "node-label");
      label.setAttribute("x", (position.x + 10).toFixed(1));
      label.setAttribute("y", (position.y + 4).toFixed(1));
      label.textContent = name;
      svg.append(label);
    }
    this.root.replaceChildren(svg);
  }
}
