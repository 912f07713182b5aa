/**
 * Frame composition: backdrop level first, then arrived target tiles
 * blended in with a short opacity fade. Pure given a cache snapshot and
 * a drawing surface, so tests can assert exactly what gets drawn.
 */

import {
  DziDescriptor,
  TileAddress,
  maxLevel,
  levelTiles,
  tileBounds,
} from "./dzi.js";
import type { TileRequestPlan } from "./tiles.js";
import type { CachedTile, TileCache } from "./cache.js";
import { Viewport, imageToScreen, scaleOf } from "./viewport.js";

export const FADE_MS = 150;

export interface DrawSurface<T = unknown> {
  clear(width: number, height: number): void;
  /** Draw a tile image to a screen-space rectangle at an opacity. */
  drawTile(
    entry: CachedTile<T>,
    dx: number,
    dy: number,
    dw: number,
    dh: number,
    alpha: number,
  ): void;
}

function drawLevelTile<T>(
  surface: DrawSurface<T>,
  entry: CachedTile<T>,
  d: DziDescriptor,
  viewport: Viewport,
  alpha: number,
): void {
  const levelScale = 2 ** (maxLevel(d) - entry.tile.level);
  const b = tileBounds(d, entry.tile);
  const topLeft = imageToScreen(viewport, d, b.x0 * levelScale, b.y0 * levelScale);
  const s = scaleOf(viewport, d) * levelScale;
  surface.drawTile(
    entry,
    topLeft.x,
    topLeft.y,
    (b.x1 - b.x0) * s,
    (b.y1 - b.y0) * s,
    alpha,
  );
}

/** Render one frame; returns true when a fade is still in progress
 * (callers keep animating until it settles). */
export function renderFrame<T>(
  plan: TileRequestPlan,
  cache: TileCache<T>,
  d: DziDescriptor,
  viewport: Viewport,
  surface: DrawSurface<T>,
  now: number,
): boolean {
  surface.clear(viewport.screenWidth, viewport.screenHeight);

  if (plan.backdropLevel !== null) {
    const { cols, rows } = levelTiles(d, plan.backdropLevel);
    for (let row = 0; row < rows; row++) {
      for (let col = 0; col < cols; col++) {
        const entry = cache.get({ level: plan.backdropLevel, col, row });
        if (entry) drawLevelTile(surface, entry, d, viewport, 1);
      }
    }
  }

  let animating = false;
  for (const tile of plan.visible) {
    const entry = cache.get(tile);
    if (!entry) continue;
    const age = now - entry.arrivedAt;
    const alpha = Math.min(1, Math.max(0, age / FADE_MS));
    if (alpha < 1) animating = true;
    drawLevelTile(surface, entry, d, viewport, alpha);
  }
  return animating;
}

/** Target tiles still missing from the cache (these rectangles show the
 * backdrop this frame). */
export function missingTiles<T>(
  plan: TileRequestPlan,
  cache: TileCache<T>,
): TileAddress[] {
  return plan.visible.filter((tile) => !cache.has(tile));
}
