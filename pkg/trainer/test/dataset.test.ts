import { describe, expect, it } from "vitest";

import { DEFAULT_CONFIG, curveOnGrid, sampleEpisode } from "../src/dataset.js";
import { Rng } from "../src/rng.js";

describe("episode sampling", () => {
  it("produces curves satisfying the CDF axioms on a grid", () => {
    const rng = new Rng(11);
    for (let trial = 0; trial < 20; trial++) {
      const ep = sampleEpisode(rng, DEFAULT_CONFIG);
      const grid = curveOnGrid(ep.p, ep.q, 101);
      expect(grid[0]).toBe(0);
      expect(grid[100]).toBe(1);
      for (let i = 1; i < grid.length; i++) {
        expect(grid[i]).toBeGreaterThanOrEqual(grid[i - 1]);
      }
    }
  });

  it("keeps context sizes within the configured range", () => {
    const rng = new Rng(12);
    for (let trial = 0; trial < 50; trial++) {
      const ep = sampleEpisode(rng, DEFAULT_CONFIG);
      expect(ep.contextX.length).toBeGreaterThanOrEqual(DEFAULT_CONFIG.contextMin);
      expect(ep.contextX.length).toBeLessThanOrEqual(DEFAULT_CONFIG.contextMax);
      expect(ep.targetX.length).toBe(DEFAULT_CONFIG.targetsPerCurve);
    }
  });

  it("is deterministic under a fixed seed", () => {
    const a = sampleEpisode(new Rng(99), DEFAULT_CONFIG);
    const b = sampleEpisode(new Rng(99), DEFAULT_CONFIG);
    expect(a.p).toBe(b.p);
    expect(Array.from(a.targetY)).toEqual(Array.from(b.targetY));
  });
});
