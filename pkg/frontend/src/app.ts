/** Browser entry point: connect, render the strategy graph with live goal
 * tokens, drive the evaluation, and edit/draw graphs through the protocol.
 */

import { assignPositions, tokenPosition } from "./layout.js";
import {
  FrameView,
  StatePayload,
  ViewModel,
  buildViewModel,
  caretLine,
} from "./model.js";
import { Client, ProtocolError, webSocketTransport } from "./protocol.js";

const SVG_NS = "http://www.w3.org/2000/svg";

interface Ui {
  client: Client;
  vm: ViewModel | null;
  drawMode: boolean;
  pendingEdgeSrc: string | null;
  graphName: string;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  text = "",
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, v);
  if (text) node.textContent = text;
  return node;
}

function svgEl(tag: string, attrs: Record<string, string>): SVGElement {
  const node = document.createElementNS(SVG_NS, tag);
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, v);
  return node;
}

function banner(text: string, kind = "error"): void {
  const box = document.getElementById("banner")!;
  box.textContent = text;
  box.className = text ? kind : "";
}

function sidePanel(lines: string[]): void {
  const panel = document.getElementById("panel")!;
  panel.textContent = lines.join("\n");
}

function renderFrame(ui: Ui, frame: FrameView, svg: SVGElement): void {
  svg.textContent = "";
  const positions = assignPositions(frame.nodes, frame.edges);
  for (const e of frame.edges) {
    const a = positions.get(e.src);
    const b = positions.get(e.tgt);
    if (!a || !b) continue;
    const line = svgEl("line", {
      x1: String(a.x),
      y1: String(a.y),
      x2: String(b.x),
      y2: String(b.y),
      class: e.rejected ? "edge rejected" : "edge",
      "marker-end": "url(#arrow)",
    });
    line.addEventListener("dblclick", () => editEdgeType(ui, e.id, e.gtype));
    svg.appendChild(line);
    const mid = tokenPosition(a, b, 0, 1);
    const label = svgEl("text", {
      x: String(mid.x + 6),
      y: String(mid.y - 6),
      class: "gtype",
    });
    label.textContent = e.rejected?.failed_clause
      ? `${e.gtype}  ✗ ${e.rejected.failed_clause}`
      : e.gtype;
    svg.appendChild(label);
    e.tokens.forEach((tok, k) => {
      const p = tokenPosition(a, b, k, e.tokens.length);
      const dot = svgEl("circle", {
        cx: String(p.x),
        cy: String(p.y),
        r: "7",
        class: "goal-token",
      });
      dot.addEventListener("click", () => {
        void ui.client
          .request("select_goal", { edge_id: e.id, index: k })
          .catch((err) => banner(String(err)));
      });
      const title = document.createElementNS(SVG_NS, "title");
      title.textContent = tok.goalText;
      dot.appendChild(title);
      svg.appendChild(dot);
    });
  }
  for (const n of frame.nodes) {
    const p = positions.get(n.id);
    if (!p) continue;
    const group = svgEl("g", { class: `node ${n.kind}` });
    if (n.kind === "boundary") {
      // Boundary endpoints are drawn as small grey boxes.
      group.appendChild(
        svgEl("rect", {
          x: String(p.x - 6),
          y: String(p.y - 6),
          width: "12",
          height: "12",
          class: "boundary-box",
        }),
      );
    } else {
      group.appendChild(
        svgEl("rect", {
          x: String(p.x - 45),
          y: String(p.y - 16),
          width: "90",
          height: "32",
          rx: "6",
          class: n.nested ? "tactic-box nested" : "tactic-box",
        }),
      );
      const text = svgEl("text", {
        x: String(p.x),
        y: String(p.y + 4),
        "text-anchor": "middle",
        class: "node-label",
      });
      text.textContent = n.label;
      group.appendChild(text);
      group.addEventListener("dblclick", () => {
        if (n.nested) void openNested(ui, n.id);
        else showDetails(ui, n);
      });
      if (ui.drawMode) {
        group.addEventListener("click", () => drawConnect(ui, n.id));
      }
    }
    svg.appendChild(group);
  }
}

function showDetails(ui: Ui, n: { label: string; tactic: string | null }): void {
  const path = ui.vm?.hierarchyPath.join(" / ") || "(top)";
  sidePanel([
    `tactic: ${n.label}`,
    `backend: ${n.tactic ?? "-"}`,
    `hierarchy: ${path}`,
  ]);
}

async function openNested(ui: Ui, nodeId: string): Promise<void> {
  try {
    const out = await ui.client.request("hierarchy", { node_id: nodeId });
    sidePanel([
      `nested tactic ${out.name} (${out.mode})`,
      `${(out.graphs as unknown[]).length} subgraph(s)`,
    ]);
  } catch (err) {
    banner(String(err));
  }
}

function render(ui: Ui): void {
  const vm = ui.vm;
  if (!vm) return;
  document.getElementById("status")!.textContent =
    `${vm.status}${vm.reason ? ` (${vm.reason})` : ""}  ` +
    `branches: ${vm.branchCount}  open goals: ${vm.openGoals}  ` +
    `history: ${vm.historyDepth}`;
  const goalsBox = document.getElementById("goals")!;
  goalsBox.textContent = vm.goals.map((g) => `${g.id}: ${g.text}`).join("\n");
  const svg = document.getElementById("graph") as unknown as SVGElement;
  if (vm.active) renderFrame(ui, vm.active, svg);
  if (vm.failureLines.length) sidePanel(vm.failureLines);
  if (vm.warnings.length) banner(vm.warnings.join("; "), "warning");
}

async function command(
  ui: Ui,
  cmd: string,
  input: Record<string, unknown> = {},
): Promise<void> {
  try {
    const out = await ui.client.request(cmd, input);
    ui.vm = buildViewModel(out as unknown as StatePayload);
    banner("");
    render(ui);
  } catch (err) {
    banner(err instanceof ProtocolError ? `${cmd}: ${err.reason}` : String(err));
  }
}

// ---------------------------------------------------------------------------
// Draw mode

function drawConnect(ui: Ui, nodeId: string): void {
  if (ui.pendingEdgeSrc === null) {
    ui.pendingEdgeSrc = nodeId;
    banner(`edge from ${nodeId}: click the target node`, "info");
    return;
  }
  const src = ui.pendingEdgeSrc;
  ui.pendingEdgeSrc = null;
  const gtype = window.prompt("goal type for the new edge", "any") ?? "any";
  void ui.client
    .request("add_edge", { src, tgt: nodeId, gtype })
    .then(() => refreshDrawing(ui))
    .catch((err) => showEditError(err, gtype));
}

function editEdgeType(ui: Ui, edgeId: string, current: string): void {
  const gtype = window.prompt("goal type", current);
  if (gtype === null) return;
  void ui.client
    .request("set_edge_type", { id: edgeId, gtype })
    .then(() => refreshDrawing(ui))
    .catch((err) => showEditError(err, gtype));
}

function showEditError(err: unknown, text: string): void {
  if (err instanceof ProtocolError && typeof err.detail.position === "number") {
    sidePanel([text, caretLine(text, err.detail.position), err.reason]);
  }
  banner(String(err));
}

async function refreshDrawing(ui: Ui): Promise<void> {
  try {
    const out = await ui.client.request("save_graph", { name: ui.graphName });
    const doc = out.psgraph as {
      graph: { nodes: unknown[]; edges: unknown[] };
    };
    ui.vm = buildViewModel({
      status: "drawing",
      reason: "",
      failure_report: null,
      branch_count: 0,
      open_goals: 0,
      frames: [
        { graph: doc.graph as never, origin: null },
      ],
      hierarchy_path: [],
      goals: [],
      history_depth: 0,
      warnings: [],
    });
    render(ui);
  } catch (err) {
    banner(String(err));
  }
}

function saveToFile(ui: Ui): void {
  void ui.client
    .request("save_graph", { name: ui.graphName })
    .then((out) => {
      const blob = new Blob([JSON.stringify(out.psgraph)], {
        type: "application/json",
      });
      const a = el("a", {
        href: URL.createObjectURL(blob),
        download: "strategy.psg",
      });
      a.click();
    })
    .catch((err) => banner(String(err)));
}

function placeNode(ui: Ui, x: number, y: number): void {
  const name = window.prompt("node name (empty for boundary)", "");
  if (name === null) return;
  const params: Record<string, unknown> = { meta: { x, y } };
  if (!name) {
    params.kind = "boundary";
  } else {
    params.name = name;
    const tactic = window.prompt("backend tactic", "id") ?? "id";
    params.app = { atomic: tactic };
  }
  void ui.client
    .request("add_node", params)
    .then(() => refreshDrawing(ui))
    .catch((err) => banner(String(err)));
}

// ---------------------------------------------------------------------------
// Wiring

export async function main(): Promise<void> {
  const params = new URLSearchParams(window.location.search);
  const port = params.get("port") ?? "1779";
  const url = `ws://${window.location.hostname || "127.0.0.1"}:${port}/`;
  let client: Client;
  try {
    client = new Client(await webSocketTransport(url));
  } catch {
    banner(`cannot connect to ${url}`);
    return;
  }
  const ui: Ui = {
    client,
    vm: null,
    drawMode: false,
    pendingEdgeSrc: null,
    graphName: "<current>",
  };

  const hook = (id: string, fn: () => void) =>
    document.getElementById(id)!.addEventListener("click", fn);
  hook("start", () => {
    const goal = (document.getElementById("goal") as HTMLInputElement).value;
    const name = (document.getElementById("graph-name") as HTMLInputElement)
      .value || ui.graphName;
    ui.graphName = name;
    void command(ui, "start_eval", { graph: name, goal });
  });
  hook("step", () => void command(ui, "step"));
  hook("backtrack", () => void command(ui, "backtrack"));
  hook("replay", () => void command(ui, "replay"));
  hook("terminate", () => void command(ui, "terminate"));
  hook("save", () => saveToFile(ui));
  hook("draw", () => {
    ui.drawMode = !ui.drawMode;
    banner(ui.drawMode ? "draw mode: click canvas to place nodes" : "", "info");
  });
  document.getElementById("graph")!.addEventListener("click", (ev) => {
    if (!ui.drawMode || ev.target !== ev.currentTarget) return;
    const rect = (ev.currentTarget as Element).getBoundingClientRect();
    placeNode(ui, ev.clientX - rect.left, ev.clientY - rect.top);
  });

  client.request("list_graphs").then((out) => {
    const names = out.names as string[];
    if (names.length) {
      (document.getElementById("graph-name") as HTMLInputElement).value =
        names[0];
    }
  });
}

if (typeof document !== "undefined" && document.getElementById("graph")) {
  void main();
}
