import { describe, expect, it } from "vitest";
import { assignPositions, layerNodes, tokenPosition } from "../src/layout.js";
import type { EdgeView, NodeView } from "../src/model.js";

function node(id: string, meta?: { x: number; y: number }): NodeView {
  return {
    id,
    kind: "tactic",
    label: id,
    nested: null,
    tactic: "id",
    hasMeta: meta !== undefined,
    x: meta?.x ?? 0,
    y: meta?.y ?? 0,
  };
}

function edge(id: string, src: string, tgt: string): EdgeView {
  return { id, src, tgt, gtype: "any", tokens: [], rejected: null };
}

describe("layerNodes", () => {
  it("layers a chain by longest path", () => {
    const nodes = [node("a"), node("b"), node("c")];
    const edges = [edge("e0", "a", "b"), edge("e1", "b", "c")];
    const layer = layerNodes(nodes, edges);
    expect(layer.get("a")).toBe(0);
    expect(layer.get("b")).toBe(1);
    expect(layer.get("c")).toBe(2);
  });

  it("uses the longest of several paths", () => {
    const nodes = [node("a"), node("b"), node("c")];
    // a -> c directly and a -> b -> c: c must sit below b.
    const edges = [
      edge("e0", "a", "c"),
      edge("e1", "a", "b"),
      edge("e2", "b", "c"),
    ];
    const layer = layerNodes(nodes, edges);
    expect(layer.get("c")).toBe(2);
  });

  it("terminates on feedback cycles (REPEAT loops)", () => {
    const nodes = [node("a"), node("b")];
    const edges = [edge("e0", "a", "b"), edge("e1", "b", "a")];
    const layer = layerNodes(nodes, edges);
    for (const l of layer.values()) {
      expect(l).toBeGreaterThanOrEqual(0);
      expect(l).toBeLessThanOrEqual(nodes.length);
    }
  });
});

describe("assignPositions", () => {
  it("keeps stored meta coordinates untouched", () => {
    const nodes = [node("a", { x: 123, y: 456 }), node("b")];
    const pos = assignPositions(nodes, [edge("e0", "a", "b")]);
    expect(pos.get("a")).toEqual({ x: 123, y: 456 });
    expect(pos.get("b")).toBeDefined();
  });

  it("spaces auto-laid nodes within the given width and by layer", () => {
    const nodes = [node("a"), node("b"), node("c")];
    const edges = [edge("e0", "a", "b"), edge("e1", "a", "c")];
    const pos = assignPositions(nodes, edges, 800, 90);
    const a = pos.get("a")!;
    const b = pos.get("b")!;
    const c = pos.get("c")!;
    expect(b.y).toBe(c.y);
    expect(b.y).toBeGreaterThan(a.y);
    expect(b.x).not.toBe(c.x);
    for (const p of [a, b, c]) {
      expect(p.x).toBeGreaterThan(0);
      expect(p.x).toBeLessThan(800);
    }
  });

  it("positions every node, even in cyclic graphs", () => {
    const nodes = [node("a"), node("b"), node("c")];
    const edges = [
      edge("e0", "a", "b"),
      edge("e1", "b", "c"),
      edge("e2", "c", "a"),
    ];
    const pos = assignPositions(nodes, edges);
    expect(pos.size).toBe(3);
  });
});

describe("tokenPosition", () => {
  it("centers a lone token on the edge midpoint", () => {
    const p = tokenPosition({ x: 0, y: 0 }, { x: 10, y: 20 }, 0, 1);
    expect(p).toEqual({ x: 5, y: 10 });
  });

  it("spreads n tokens evenly and in order along the edge", () => {
    const a = { x: 0, y: 0 };
    const b = { x: 30, y: 0 };
    const ps = [0, 1, 2].map((k) => tokenPosition(a, b, k, 3));
    expect(ps.map((p) => p.x)).toEqual([7.5, 15, 22.5]);
    expect(ps[0].x).toBeLessThan(ps[1].x);
  });
});
