import { describe, expect, it } from "vitest";

import { TileCache } from "../src/cache.js";

const tile = (col: number) => ({ level: 3, col, row: 0 });

describe("TileCache", () => {
  it("stores and retrieves entries", () => {
    const cache = new TileCache<string>(4);
    cache.put(tile(0), "a", 100);
    expect(cache.get(tile(0))?.image).toBe("a");
    expect(cache.get(tile(0))?.arrivedAt).toBe(100);
    expect(cache.has(tile(1))).toBe(false);
  });

  it("evicts the least recently used entry at capacity", () => {
    const cache = new TileCache<string>(3);
    for (let i = 0; i < 3; i++) cache.put(tile(i), String(i), i);
    cache.get(tile(0)); // refresh 0
    cache.put(tile(3), "3", 3);
    expect(cache.has(tile(0))).toBe(true);
    expect(cache.has(tile(1))).toBe(false); // oldest untouched
    expect(cache.size).toBe(3);
  });

  it("replaces entries for the same tile", () => {
    const cache = new TileCache<string>(2);
    cache.put(tile(0), "old", 1);
    cache.put(tile(0), "new", 2);
    expect(cache.size).toBe(1);
    expect(cache.get(tile(0))?.image).toBe("new");
  });

  it("defaults to a 256-tile bound", () => {
    const cache = new TileCache<number>();
    for (let i = 0; i < 400; i++) cache.put({ level: 9, col: i, row: 0 }, i, i);
    expect(cache.size).toBe(256);
  });
});
