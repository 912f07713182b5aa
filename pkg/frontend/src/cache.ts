/**
 * Bounded LRU tile cache. Arrival timestamps drive the fade-in blend.
 */

import type { TileAddress } from "./dzi.js";
import { tileKey } from "./dzi.js";

export interface CachedTile<T = unknown> {
  tile: TileAddress;
  image: T;
  arrivedAt: number;
}

export const DEFAULT_CAPACITY = 256;

export class TileCache<T = unknown> {
  private entries = new Map<string, CachedTile<T>>();

  constructor(readonly capacity: number = DEFAULT_CAPACITY) {
    if (capacity < 1) throw new Error("capacity must be >= 1");
  }

  get size(): number {
    return this.entries.size;
  }

  has(tile: TileAddress): boolean {
    return this.entries.has(tileKey(tile));
  }

  /** Returns the entry and refreshes its recency. */
  get(tile: TileAddress): CachedTile<T> | undefined {
    const key = tileKey(tile);
    const entry = this.entries.get(key);
    if (entry) {
      this.entries.delete(key);
      this.entries.set(key, entry);
    }
    return entry;
  }

  put(tile: TileAddress, image: T, arrivedAt: number): void {
    const key = tileKey(tile);
    this.entries.delete(key);
    this.entries.set(key, { tile, image, arrivedAt });
    while (this.entries.size > this.capacity) {
      const oldest = this.entries.keys().next().value as string;
      this.entries.delete(oldest);
    }
  }

  clear(): void {
    this.entries.clear();
  }
}
