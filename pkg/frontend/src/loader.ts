/**
 * Asynchronous tile loading with retry backoff.
 *
 * Fetching is injected so tests can drive the loader without a network
 * or DOM. Completed tiles only mark the cache; rendering reads the
 * cache snapshot each frame.
 */

import type { DziDescriptor, TileAddress } from "./dzi.js";
import { tileKey, tileUrl } from "./dzi.js";
import type { TileCache } from "./cache.js";

export type TileFetcher<T> = (url: string) => Promise<T>;

export interface LoaderOptions {
  maxRetries: number;
  retryDelayMs: number;
  schedule: (fn: () => void, delayMs: number) => void;
  now: () => number;
}

const DEFAULTS: LoaderOptions = {
  maxRetries: 3,
  retryDelayMs: 500,
  schedule: (fn, delay) => setTimeout(fn, delay),
  now: () => Date.now(),
};

export class TileLoader<T> {
  private inFlight = new Set<string>();
  private failures = new Map<string, number>();
  private options: LoaderOptions;

  constructor(
    private descriptor: DziDescriptor,
    private dziUrl: string,
    private cache: TileCache<T>,
    private fetcher: TileFetcher<T>,
    private onArrival: () => void = () => {},
    options: Partial<LoaderOptions> = {},
  ) {
    this.options = { ...DEFAULTS, ...options };
  }

  /** Queue every missing tile in the plan; already-cached or in-flight
   * tiles are skipped. */
  request(tiles: TileAddress[]): void {
    for (const tile of tiles) {
      const key = tileKey(tile);
      if (this.cache.has(tile) || this.inFlight.has(key)) continue;
      if ((this.failures.get(key) ?? 0) > this.options.maxRetries) continue;
      this.inFlight.add(key);
      void this.load(tile, key);
    }
  }

  private async load(tile: TileAddress, key: string): Promise<void> {
    const url = tileUrl(this.dziUrl, tile, this.descriptor.format);
    try {
      const image = await this.fetcher(url);
      this.cache.put(tile, image, this.options.now());
      this.failures.delete(key);
      this.inFlight.delete(key);
      this.onArrival();
    } catch {
      this.inFlight.delete(key);
      const attempts = (this.failures.get(key) ?? 0) + 1;
      this.failures.set(key, attempts);
      if (attempts <= this.options.maxRetries) {
        // exponential backoff; the region keeps its backdrop meanwhile
        const delay = this.options.retryDelayMs * 2 ** (attempts - 1);
        this.options.schedule(() => this.request([tile]), delay);
      }
    }
  }
}
