/**
 * Tile planning: which tiles a viewport needs, and which cached coarser
 * level can back it while they load.
 */

import {
  DziDescriptor,
  TileAddress,
  levelTiles,
  maxLevel,
  tileBounds,
} from "./dzi.js";
import { Viewport, scaleOf, visibleRect } from "./viewport.js";

export interface TileRequestPlan {
  targetLevel: number;
  /** Tiles whose overlap-inclusive extents intersect the viewport. */
  visible: TileAddress[];
  /** Finest fully-cached level coarser than the target, if any. */
  backdropLevel: number | null;
}

/** Level whose pixels are at least as fine as the current screen scale. */
export function targetLevel(v: Viewport, d: DziDescriptor): number {
  const top = maxLevel(d);
  const level = Math.ceil(top + Math.log2(scaleOf(v, d)));
  return Math.min(top, Math.max(0, level));
}

export function visibleTiles(v: Viewport, d: DziDescriptor): TileRequestPlan {
  const level = targetLevel(v, d);
  const rect = visibleRect(v, d);
  const levelScale = 2 ** (maxLevel(d) - level);
  const x0 = rect.x0 / levelScale;
  const y0 = rect.y0 / levelScale;
  const x1 = rect.x1 / levelScale;
  const y1 = rect.y1 / levelScale;

  const { cols, rows } = levelTiles(d, level);
  const visible: TileAddress[] = [];
  // candidate range padded by one tile so overlap borders are included
  const colFirst = Math.max(0, Math.floor(x0 / d.tileSize) - 1);
  const colLast = Math.min(cols - 1, Math.floor(x1 / d.tileSize) + 1);
  const rowFirst = Math.max(0, Math.floor(y0 / d.tileSize) - 1);
  const rowLast = Math.min(rows - 1, Math.floor(y1 / d.tileSize) + 1);
  for (let row = rowFirst; row <= rowLast; row++) {
    for (let col = colFirst; col <= colLast; col++) {
      const tile = { level, col, row };
      const b = tileBounds(d, tile);
      if (b.x0 < x1 && b.x1 > x0 && b.y0 < y1 && b.y1 > y0) {
        visible.push(tile);
      }
    }
  }
  return { targetLevel: level, visible, backdropLevel: null };
}

/**
 * Pick the finest level below `plan.targetLevel` whose tiles are all in
 * the cache (level 0 is a single tile, so it qualifies early on).
 */
export function withBackdrop(
  plan: TileRequestPlan,
  d: DziDescriptor,
  isCached: (tile: TileAddress) => boolean,
): TileRequestPlan {
  for (let level = plan.targetLevel - 1; level >= 0; level--) {
    const { cols, rows } = levelTiles(d, level);
    let complete = true;
    outer: for (let row = 0; row < rows; row++) {
      for (let col = 0; col < cols; col++) {
        if (!isCached({ level, col, row })) {
          complete = false;
          break outer;
        }
      }
    }
    if (complete) {
      return { ...plan, backdropLevel: level };
    }
  }
  return { ...plan, backdropLevel: null };
}

/** Upper bound on tile fetches for a single viewport (invariant). */
export function fetchBound(v: Viewport, d: DziDescriptor): number {
  const across = Math.ceil(v.screenWidth / d.tileSize) + 1;
  const down = Math.ceil(v.screenHeight / d.tileSize) + 1;
  return across * down;
}
