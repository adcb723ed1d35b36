/** View model derived purely from server `state{}` payloads.
 *
 * The UI never computes proof logic locally: everything rendered — goal
 * tokens, statuses, failure highlights, the hierarchy path — is a direct
 * reshaping of what the protocol reported.
 */

// ---------------------------------------------------------------------------
// Wire shapes (matching the server's graph JSON and state rendering)

export interface WireNode {
  id: string;
  kind: "tactic" | "boundary";
  name?: string;
  app?: { atomic?: string; nested?: string };
  meta?: { x: number; y: number };
}

export interface WireGoal {
  goal_text: string;
  pnode_key: string;
  annotations: Record<string, string>;
}

export interface WireEdge {
  id: string;
  src: string;
  tgt: string;
  gtype: string;
  goals: WireGoal[];
}

export interface WireGraph {
  nodes: WireNode[];
  edges: WireEdge[];
}

export interface RejectedEdge {
  edge: string;
  gtype: string;
  failed_clause: string | null;
}

export interface FailureReport {
  branch: number;
  frame_depth: number;
  node: string | null;
  consumed_goal: { goal_text: string; pnode_key: string } | null;
  unmatched_subgoals: { goal: string; rejected_edges: RejectedEdge[] }[];
}

export interface StatePayload {
  status: string;
  reason: string;
  failure_report: FailureReport | null;
  branch_count: number;
  open_goals: number;
  frames: { graph: WireGraph; origin: string | null }[];
  hierarchy_path: string[];
  goals: { id: string; text: string }[];
  history_depth: number;
  warnings: string[];
}

// ---------------------------------------------------------------------------
// View model

export interface GoalToken {
  edgeId: string;
  index: number;
  goalText: string;
  pnodeKey: string;
  annotations: Record<string, string>;
}

export interface NodeView {
  id: string;
  kind: "tactic" | "boundary";
  label: string;
  nested: string | null; // graph-tactic name when this opens a child view
  tactic: string | null; // atomic tactic spec
  hasMeta: boolean;
  x: number;
  y: number;
}

export interface EdgeView {
  id: string;
  src: string;
  tgt: string;
  gtype: string;
  tokens: GoalToken[];
  rejected: RejectedEdge | null; // set when the failure report blames it
}

export interface FrameView {
  origin: string | null;
  nodes: NodeView[];
  edges: EdgeView[];
}

export interface ViewModel {
  status: string;
  reason: string;
  branchCount: number;
  openGoals: number;
  historyDepth: number;
  warnings: string[];
  hierarchyPath: string[];
  goals: { id: string; text: string }[];
  frames: FrameView[];
  /** The frame the next step acts on (top of the stack). */
  active: FrameView | null;
  failure: FailureReport | null;
  /** Pre-joined text lines for the side panel. */
  failureLines: string[];
}

function nodeView(n: WireNode): NodeView {
  return {
    id: n.id,
    kind: n.kind,
    label: n.kind === "boundary" ? "" : (n.name ?? n.id),
    nested: n.app?.nested ?? null,
    tactic: n.app?.atomic ?? null,
    hasMeta: n.meta !== undefined,
    x: n.meta?.x ?? 0,
    y: n.meta?.y ?? 0,
  };
}

function edgeView(e: WireEdge, rejected: Map<string, RejectedEdge>): EdgeView {
  return {
    id: e.id,
    src: e.src,
    tgt: e.tgt,
    gtype: e.gtype,
    tokens: e.goals.map((g, index) => ({
      edgeId: e.id,
      index,
      goalText: g.goal_text,
      pnodeKey: g.pnode_key,
      annotations: g.annotations,
    })),
    rejected: rejected.get(e.id) ?? null,
  };
}

export function buildViewModel(state: StatePayload): ViewModel {
  const rejected = new Map<string, RejectedEdge>();
  const failureLines: string[] = [];
  const report = state.failure_report;
  if (report) {
    if (report.node) failureLines.push(`stuck at node ${report.node}`);
    if (report.consumed_goal) {
      failureLines.push(`consumed goal: ${report.consumed_goal.goal_text}`);
    }
    for (const sub of report.unmatched_subgoals) {
      failureLines.push(`unroutable subgoal: ${sub.goal}`);
      for (const r of sub.rejected_edges) {
        rejected.set(r.edge, r);
        failureLines.push(
          `  edge ${r.edge} [${r.gtype}]` +
            (r.failed_clause ? ` failed clause: ${r.failed_clause}` : ""),
        );
      }
    }
  }
  const frames: FrameView[] = state.frames.map((f) => ({
    origin: f.origin,
    nodes: f.graph.nodes.map(nodeView),
    edges: f.graph.edges.map((e) => edgeView(e, rejected)),
  }));
  return {
    status: state.status,
    reason: state.reason,
    branchCount: state.branch_count,
    openGoals: state.open_goals,
    historyDepth: state.history_depth,
    warnings: state.warnings,
    hierarchyPath: state.hierarchy_path,
    goals: state.goals,
    frames,
    active: frames.length ? frames[frames.length - 1] : null,
    failure: report,
    failureLines,
  };
}

/** All goal tokens visible in a frame, in edge order. */
export function goalTokens(frame: FrameView): GoalToken[] {
  return frame.edges.flatMap((e) => e.tokens);
}

/** Caret line for inline parse errors ("^" under the failing position). */
export function caretLine(text: string, position: number): string {
  return " ".repeat(Math.max(0, Math.min(position, text.length))) + "^";
}
