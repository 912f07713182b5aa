/**
 * Browser glue: canvas viewer for one published image.
 *
 * All geometry and planning logic lives in the pure modules; this file
 * only wires DOM events, fetch and requestAnimationFrame together.
 */

import { parseDzi, type DziDescriptor } from "./dzi.js";
import { TileCache } from "./cache.js";
import { TileLoader } from "./loader.js";
import { renderFrame, type DrawSurface } from "./render.js";
import { visibleTiles, withBackdrop } from "./tiles.js";
import {
  Viewport,
  doubleClickZoom,
  fitViewport,
  pan,
  zoomAboutCursor,
} from "./viewport.js";

class CanvasSurface implements DrawSurface<ImageBitmap> {
  constructor(private ctx: CanvasRenderingContext2D) {}

  clear(width: number, height: number): void {
    this.ctx.fillStyle = "#111";
    this.ctx.fillRect(0, 0, width, height);
  }

  drawTile(
    entry: { image: ImageBitmap },
    dx: number,
    dy: number,
    dw: number,
    dh: number,
    alpha: number,
  ): void {
    this.ctx.globalAlpha = alpha;
    this.ctx.drawImage(entry.image, dx, dy, dw, dh);
    this.ctx.globalAlpha = 1;
  }
}

async function fetchTile(url: string): Promise<ImageBitmap> {
  const response = await fetch(url);
  if (!response.ok) throw new Error(`${url}: ${response.status}`);
  return createImageBitmap(await response.blob());
}

export async function mountViewer(
  canvas: HTMLCanvasElement,
  dziUrl: string,
): Promise<void> {
  const response = await fetch(dziUrl);
  if (!response.ok) throw new Error(`${dziUrl}: ${response.status}`);
  const descriptor: DziDescriptor = parseDzi(await response.text());

  canvas.width = canvas.clientWidth || 800;
  canvas.height = canvas.clientHeight || 600;
  const ctx = canvas.getContext("2d");
  if (!ctx) throw new Error("canvas 2d context unavailable");
  const surface = new CanvasSurface(ctx);

  let viewport: Viewport = fitViewport(canvas.width, canvas.height);
  const cache = new TileCache<ImageBitmap>();
  let frameRequested = false;

  const requestFrame = () => {
    if (frameRequested) return;
    frameRequested = true;
    requestAnimationFrame(draw);
  };

  const loader = new TileLoader(descriptor, dziUrl, cache, fetchTile,
                                requestFrame);

  const draw = () => {
    frameRequested = false;
    const plan = withBackdrop(
      visibleTiles(viewport, descriptor),
      descriptor,
      (tile) => cache.has(tile),
    );
    loader.request(plan.visible);
    const animating = renderFrame(
      plan, cache, descriptor, viewport, surface, performance.now(),
    );
    if (animating) requestFrame();
  };

  canvas.addEventListener("wheel", (event) => {
    event.preventDefault();
    const factor = event.deltaY < 0 ? 1.25 : 0.8;
    const rect = canvas.getBoundingClientRect();
    viewport = zoomAboutCursor(
      viewport, descriptor,
      event.clientX - rect.left, event.clientY - rect.top, factor,
    );
    requestFrame();
  });

  let dragging = false;
  canvas.addEventListener("pointerdown", (event) => {
    dragging = true;
    canvas.setPointerCapture(event.pointerId);
  });
  canvas.addEventListener("pointermove", (event) => {
    if (!dragging) return;
    viewport = pan(viewport, descriptor, event.movementX, event.movementY);
    requestFrame();
  });
  canvas.addEventListener("pointerup", () => {
    dragging = false;
  });
  canvas.addEventListener("dblclick", (event) => {
    const rect = canvas.getBoundingClientRect();
    viewport = doubleClickZoom(
      viewport, descriptor,
      event.clientX - rect.left, event.clientY - rect.top,
    );
    requestFrame();
  });
  window.addEventListener("resize", () => {
    canvas.width = canvas.clientWidth || canvas.width;
    canvas.height = canvas.clientHeight || canvas.height;
    viewport = {
      ...viewport,
      screenWidth: canvas.width,
      screenHeight: canvas.height,
    };
    requestFrame();
  });

  requestFrame();
}
