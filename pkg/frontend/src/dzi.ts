/**
 * DZI descriptor parsing and pyramid geometry.
 *
 * Level n has dimensions ceil(image / 2^(maxLevel - n)); level 0 is
 * 1x1. Tiles carry an `overlap` pixel border on interior edges.
 */

export interface DziDescriptor {
  width: number;
  height: number;
  tileSize: number;
  overlap: number;
  format: string;
}

export interface TileAddress {
  level: number;
  col: number;
  row: number;
}

const ATTR = (xml: string, name: string): string | null => {
  const match = xml.match(new RegExp(`${name}="([^"]*)"`));
  return match ? match[1] : null;
};

/** Parse the descriptor XML (dependency-free: works off-DOM in tests). */
export function parseDzi(xml: string): DziDescriptor {
  if (!xml.includes("<Image")) {
    throw new Error("not a DZI descriptor");
  }
  const tileSize = ATTR(xml, "TileSize");
  const overlap = ATTR(xml, "Overlap");
  const format = ATTR(xml, "Format");
  const width = ATTR(xml, "Width");
  const height = ATTR(xml, "Height");
  if (!tileSize || overlap === null || !format || !width || !height) {
    throw new Error("descriptor is missing required attributes");
  }
  const descriptor = {
    width: Number(width),
    height: Number(height),
    tileSize: Number(tileSize),
    overlap: Number(overlap),
    format,
  };
  if (
    !Number.isInteger(descriptor.width) || descriptor.width < 1 ||
    !Number.isInteger(descriptor.height) || descriptor.height < 1 ||
    !Number.isInteger(descriptor.tileSize) || descriptor.tileSize < 1 ||
    !Number.isInteger(descriptor.overlap) || descriptor.overlap < 0 ||
    descriptor.overlap >= descriptor.tileSize
  ) {
    throw new Error("descriptor attributes out of range");
  }
  return descriptor;
}

export function maxLevel(d: DziDescriptor): number {
  const longest = Math.max(d.width, d.height);
  // integer ceil(log2): float log2 is not trustworthy at exact powers of 2
  return longest <= 1 ? 0 : 32 - Math.clz32(longest - 1);
}

export function levelDimensions(
  d: DziDescriptor,
  level: number,
): { width: number; height: number } {
  const shift = maxLevel(d) - level;
  if (level < 0 || shift < 0) {
    throw new Error(`level ${level} outside 0..${maxLevel(d)}`);
  }
  const scale = 2 ** shift;
  return {
    width: Math.max(1, Math.ceil(d.width / scale)),
    height: Math.max(1, Math.ceil(d.height / scale)),
  };
}

export function levelTiles(
  d: DziDescriptor,
  level: number,
): { cols: number; rows: number } {
  const { width, height } = levelDimensions(d, level);
  return {
    cols: Math.ceil(width / d.tileSize),
    rows: Math.ceil(height / d.tileSize),
  };
}

/** Tile extent in level pixels, overlap included. */
export function tileBounds(
  d: DziDescriptor,
  { level, col, row }: TileAddress,
): { x0: number; y0: number; x1: number; y1: number } {
  const { width, height } = levelDimensions(d, level);
  return {
    x0: Math.max(0, col * d.tileSize - d.overlap),
    y0: Math.max(0, row * d.tileSize - d.overlap),
    x1: Math.min(width, (col + 1) * d.tileSize + d.overlap),
    y1: Math.min(height, (row + 1) * d.tileSize + d.overlap),
  };
}

export function inPlan(d: DziDescriptor, tile: TileAddress): boolean {
  if (tile.level < 0 || tile.level > maxLevel(d)) return false;
  const { cols, rows } = levelTiles(d, tile.level);
  return tile.col >= 0 && tile.col < cols && tile.row >= 0 && tile.row < rows;
}

export function tileUrl(baseUrl: string, tile: TileAddress, format: string): string {
  // baseUrl is the .dzi location: {name}.dzi -> {name}_files/{level}/{c}_{r}.{fmt}
  const stem = baseUrl.replace(/\.dzi$/, "");
  return `${stem}_files/${tile.level}/${tile.col}_${tile.row}.${format}`;
}

export function tileKey(tile: TileAddress): string {
  return `${tile.level}/${tile.col}_${tile.row}`;
}
