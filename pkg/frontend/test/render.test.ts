import { describe, expect, it } from "vitest";

import { TileCache, type CachedTile } from "../src/cache.js";
import { tileKey } from "../src/dzi.js";
import { FADE_MS, missingTiles, renderFrame, type DrawSurface } from "../src/render.js";
import { visibleTiles, withBackdrop } from "../src/tiles.js";
import { fitViewport } from "../src/viewport.js";
import { descriptor } from "./helpers.js";

const D = descriptor(1024, 768);

interface Draw {
  key: string;
  level: number;
  alpha: number;
  rect: [number, number, number, number];
}

class RecordingSurface implements DrawSurface<string> {
  cleared = 0;
  draws: Draw[] = [];

  clear(): void {
    this.cleared++;
    this.draws = [];
  }

  drawTile(
    entry: CachedTile<string>,
    dx: number, dy: number, dw: number, dh: number,
    alpha: number,
  ): void {
    this.draws.push({
      key: tileKey(entry.tile),
      level: entry.tile.level,
      alpha,
      rect: [dx, dy, dw, dh],
    });
  }
}

function fullPlanSetup(arrivedAt = 0) {
  const viewport = fitViewport(512, 384);
  const cache = new TileCache<string>();
  const plan = visibleTiles(viewport, D);
  for (const tile of plan.visible) cache.put(tile, "px", arrivedAt);
  return { viewport, cache, plan };
}

describe("renderFrame", () => {
  it("draws every visible tile when fully cached (no backdrop gaps)", () => {
    const { viewport, cache, plan } = fullPlanSetup();
    const surface = new RecordingSurface();
    const animating = renderFrame(plan, cache, D, viewport, surface,
                                  FADE_MS + 1);
    expect(animating).toBe(false);
    const targetDraws = surface.draws.filter((d) => d.level === plan.targetLevel);
    expect(new Set(targetDraws.map((d) => d.key))).toEqual(
      new Set(plan.visible.map(tileKey)),
    );
    expect(targetDraws.every((d) => d.alpha === 1)).toBe(true);
    expect(missingTiles(plan, cache)).toEqual([]);
  });

  it("shows only the backdrop when no target tile is cached", () => {
    const viewport = fitViewport(512, 384);
    const cache = new TileCache<string>();
    cache.put({ level: 0, col: 0, row: 0 }, "base", 0);
    const plan = withBackdrop(visibleTiles(viewport, D), D,
                              (tile) => cache.has(tile));
    expect(plan.backdropLevel).toBe(0);
    const surface = new RecordingSurface();
    renderFrame(plan, cache, D, viewport, surface, 1000);
    expect(surface.draws.length).toBe(1);
    expect(surface.draws[0].level).toBe(0);
    // the upscaled level-0 tile covers the whole visible image area
    expect(surface.draws[0].rect[2]).toBeGreaterThanOrEqual(512);
  });

  it("half-cached: exactly the uncached rectangles fall back", () => {
    const viewport = fitViewport(512, 384);
    const cache = new TileCache<string>();
    const basePlan = visibleTiles(viewport, D);
    const cachedHalf = basePlan.visible.slice(0, 3);
    for (const tile of cachedHalf) cache.put(tile, "px", 0);
    cache.put({ level: 0, col: 0, row: 0 }, "base", 0);
    const plan = withBackdrop(basePlan, D, (tile) => cache.has(tile));
    const surface = new RecordingSurface();
    renderFrame(plan, cache, D, viewport, surface, 1000);
    const drawnTargets = surface.draws
      .filter((d) => d.level === plan.targetLevel)
      .map((d) => d.key);
    expect(new Set(drawnTargets)).toEqual(new Set(cachedHalf.map(tileKey)));
    expect(new Set(missingTiles(plan, cache).map(tileKey))).toEqual(
      new Set(basePlan.visible.slice(3).map(tileKey)),
    );
  });

  it("fades arrivals in over FADE_MS", () => {
    const { viewport, cache, plan } = fullPlanSetup(1000);
    const surface = new RecordingSurface();
    const animating = renderFrame(plan, cache, D, viewport, surface,
                                  1000 + FADE_MS / 2);
    expect(animating).toBe(true);
    const alphas = surface.draws.map((d) => d.alpha);
    expect(Math.max(...alphas)).toBeCloseTo(0.5, 9);
    const later = new RecordingSurface();
    expect(renderFrame(plan, cache, D, viewport, later, 1000 + FADE_MS * 2))
      .toBe(false);
  });
});
