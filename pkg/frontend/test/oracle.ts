/**
 * Brute-force tile-visibility oracle: enumerates every tile at a level
 * and intersects from first principles. Shares no code with src/tiles.
 */

import type { DziDescriptor, TileAddress } from "../src/dzi.js";
import type { Viewport } from "../src/viewport.js";

function ladderDims(
  d: DziDescriptor,
  level: number,
  top: number,
): { w: number; h: number } {
  let w = d.width;
  let h = d.height;
  for (let i = 0; i < top - level; i++) {
    w = Math.ceil(w / 2);
    h = Math.ceil(h / 2);
  }
  return { w, h };
}

export function bruteForceVisible(
  v: Viewport,
  d: DziDescriptor,
  level: number,
): TileAddress[] {
  const top = Math.max(d.width, d.height) <= 1
    ? 0
    : 32 - Math.clz32(Math.max(d.width, d.height) - 1);
  const scale = v.zoom * Math.min(v.screenWidth / d.width, v.screenHeight / d.height);
  // viewport rectangle in full-resolution image pixels
  const ix0 = v.centerX * d.width - v.screenWidth / 2 / scale;
  const iy0 = v.centerY * d.height - v.screenHeight / 2 / scale;
  const ix1 = v.centerX * d.width + v.screenWidth / 2 / scale;
  const iy1 = v.centerY * d.height + v.screenHeight / 2 / scale;
  const levelScale = 2 ** (top - level);
  const rx0 = ix0 / levelScale;
  const ry0 = iy0 / levelScale;
  const rx1 = ix1 / levelScale;
  const ry1 = iy1 / levelScale;

  const { w, h } = ladderDims(d, level, top);
  const cols = Math.ceil(w / d.tileSize);
  const rows = Math.ceil(h / d.tileSize);
  const out: TileAddress[] = [];
  for (let row = 0; row < rows; row++) {
    for (let col = 0; col < cols; col++) {
      const x0 = Math.max(0, col * d.tileSize - d.overlap);
      const y0 = Math.max(0, row * d.tileSize - d.overlap);
      const x1 = Math.min(w, (col + 1) * d.tileSize + d.overlap);
      const y1 = Math.min(h, (row + 1) * d.tileSize + d.overlap);
      if (x0 < rx1 && x1 > rx0 && y0 < ry1 && y1 > ry0) {
        out.push({ level, col, row });
      }
    }
  }
  return out;
}
