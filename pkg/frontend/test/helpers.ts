import type { DziDescriptor } from "../src/dzi.js";

/** Deterministic PRNG (mulberry32) so test runs are reproducible. */
export function seededRandom(seed: number): () => number {
  let state = seed >>> 0;
  return () => {
    state = (state + 0x6d2b79f5) >>> 0;
    let t = state;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

export function descriptor(
  width: number,
  height: number,
  tileSize = 254,
  overlap = 1,
): DziDescriptor {
  return { width, height, tileSize, overlap, format: "jpg" };
}

export function descriptorXml(d: DziDescriptor): string {
  return (
    '<?xml version="1.0" encoding="UTF-8"?>' +
    `<Image TileSize="${d.tileSize}" Overlap="${d.overlap}" ` +
    `Format="${d.format}" xmlns="http://schemas.microsoft.com/deepzoom/2008">` +
    `<Size Width="${d.width}" Height="${d.height}"/></Image>`
  );
}

/** ceil-halving ladder, finest first, independent of the implementation. */
export function haloLadder(width: number, height: number): Array<[number, number]> {
  const ladder: Array<[number, number]> = [[width, height]];
  while (ladder[ladder.length - 1][0] > 1 || ladder[ladder.length - 1][1] > 1) {
    const [w, h] = ladder[ladder.length - 1];
    ladder.push([Math.ceil(w / 2), Math.ceil(h / 2)]);
  }
  return ladder;
}
