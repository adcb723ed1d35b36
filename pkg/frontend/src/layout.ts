/** Layered auto-layout for graphs whose nodes carry no stored coordinates.
 *
 * Server-stored `meta.x/y` are authoritative; this layout only fills in
 * positions for nodes that lack them, so saved drawings keep their shape
 * and only goal tokens move during evaluation.
 */

import type { EdgeView, NodeView } from "./model.js";

export interface Point {
  x: number;
  y: number;
}

/** Longest-path layering from the input side (boundary sources first). */
export function layerNodes(
  nodes: NodeView[],
  edges: EdgeView[],
): Map<string, number> {
  const layer = new Map<string, number>();
  for (const n of nodes) layer.set(n.id, 0);
  // Relax along edges repeatedly; cycles (feedback loops) are cut by
  // bounding the number of passes.
  for (let pass = 0; pass < nodes.length + 1; pass++) {
    let changed = false;
    for (const e of edges) {
      const src = layer.get(e.src);
      const tgt = layer.get(e.tgt);
      if (src === undefined || tgt === undefined) continue;
      if (src + 1 > tgt && src + 1 <= nodes.length) {
        layer.set(e.tgt, src + 1);
        changed = true;
      }
    }
    if (!changed) break;
  }
  return layer;
}

export function assignPositions(
  nodes: NodeView[],
  edges: EdgeView[],
  width = 800,
  rowHeight = 90,
): Map<string, Point> {
  const positions = new Map<string, Point>();
  const layer = layerNodes(nodes, edges);
  const rows = new Map<number, NodeView[]>();
  for (const n of nodes) {
    if (n.hasMeta) {
      positions.set(n.id, { x: n.x, y: n.y });
      continue;
    }
    const l = layer.get(n.id) ?? 0;
    const row = rows.get(l) ?? [];
    row.push(n);
    rows.set(l, row);
  }
  for (const [l, row] of rows) {
    row.sort((a, b) => (a.id < b.id ? -1 : 1));
    row.forEach((n, i) => {
      positions.set(n.id, {
        x: ((i + 1) * width) / (row.length + 1),
        y: 50 + l * rowHeight,
      });
    });
  }
  return positions;
}

/** Position of the k-th of n goal tokens along an edge's straight line. */
export function tokenPosition(a: Point, b: Point, k: number, n: number): Point {
  const t = (k + 1) / (n + 1);
  return { x: a.x + (b.x - a.x) * t, y: a.y + (b.y - a.y) * t };
}
