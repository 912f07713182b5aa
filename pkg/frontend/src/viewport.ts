/**
 * Viewport state and interaction math.
 *
 * Coordinates: `centerX`/`centerY` are normalized image coordinates in
 * [0, 1]; `zoom` is relative to fit (zoom 1 shows the whole image).
 * All transforms are pure: handlers return a new viewport.
 */

import type { DziDescriptor } from "./dzi.js";

export interface Viewport {
  centerX: number;
  centerY: number;
  zoom: number;
  screenWidth: number;
  screenHeight: number;
}

export const MIN_ZOOM = 0.5;
export const MAX_ZOOM = 1 << 16;

/** Screen pixels per image pixel when the image exactly fits. */
export function fitScale(v: Viewport, d: DziDescriptor): number {
  return Math.min(v.screenWidth / d.width, v.screenHeight / d.height);
}

/** Screen pixels per full-resolution image pixel. */
export function scaleOf(v: Viewport, d: DziDescriptor): number {
  return v.zoom * fitScale(v, d);
}

function clampViewport(v: Viewport): Viewport {
  return {
    ...v,
    // the image center cannot leave the screen: at the extremes the
    // image edge still sits at the screen midpoint
    centerX: Math.min(1, Math.max(0, v.centerX)),
    centerY: Math.min(1, Math.max(0, v.centerY)),
    zoom: Math.min(MAX_ZOOM, Math.max(MIN_ZOOM, v.zoom)),
  };
}

export function fitViewport(
  screenWidth: number,
  screenHeight: number,
): Viewport {
  return { centerX: 0.5, centerY: 0.5, zoom: 1, screenWidth, screenHeight };
}

/** Image pixel under a screen point. */
export function screenToImage(
  v: Viewport,
  d: DziDescriptor,
  sx: number,
  sy: number,
): { x: number; y: number } {
  const s = scaleOf(v, d);
  return {
    x: v.centerX * d.width + (sx - v.screenWidth / 2) / s,
    y: v.centerY * d.height + (sy - v.screenHeight / 2) / s,
  };
}

export function imageToScreen(
  v: Viewport,
  d: DziDescriptor,
  ix: number,
  iy: number,
): { x: number; y: number } {
  const s = scaleOf(v, d);
  return {
    x: (ix - v.centerX * d.width) * s + v.screenWidth / 2,
    y: (iy - v.centerY * d.height) * s + v.screenHeight / 2,
  };
}

/** Visible image rectangle in full-resolution pixels (unclamped). */
export function visibleRect(
  v: Viewport,
  d: DziDescriptor,
): { x0: number; y0: number; x1: number; y1: number } {
  const topLeft = screenToImage(v, d, 0, 0);
  const bottomRight = screenToImage(v, d, v.screenWidth, v.screenHeight);
  return { x0: topLeft.x, y0: topLeft.y, x1: bottomRight.x, y1: bottomRight.y };
}

/** Zoom by `factor` keeping the image point under the cursor fixed. */
export function zoomAboutCursor(
  v: Viewport,
  d: DziDescriptor,
  cursorX: number,
  cursorY: number,
  factor: number,
): Viewport {
  const fixed = screenToImage(v, d, cursorX, cursorY);
  const zoom = Math.min(MAX_ZOOM, Math.max(MIN_ZOOM, v.zoom * factor));
  const s = zoom * fitScale(v, d);
  return clampViewport({
    ...v,
    zoom,
    centerX: (fixed.x - (cursorX - v.screenWidth / 2) / s) / d.width,
    centerY: (fixed.y - (cursorY - v.screenHeight / 2) / s) / d.height,
  });
}

/** Drag the image by a screen-space delta. */
export function pan(
  v: Viewport,
  d: DziDescriptor,
  dxScreen: number,
  dyScreen: number,
): Viewport {
  const s = scaleOf(v, d);
  return clampViewport({
    ...v,
    centerX: v.centerX - dxScreen / (s * d.width),
    centerY: v.centerY - dyScreen / (s * d.height),
  });
}

export function doubleClickZoom(
  v: Viewport,
  d: DziDescriptor,
  cursorX: number,
  cursorY: number,
): Viewport {
  return zoomAboutCursor(v, d, cursorX, cursorY, 2);
}
