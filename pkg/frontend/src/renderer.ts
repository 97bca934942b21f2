/**
 * Particle frame rendering.
 *
 * Drawing goes through a minimal raster interface so the same code path
 * drives a real CanvasRenderingContext2D in the browser and a deterministic
 * software rasterizer in tests (golden-image checks). Particles are point
 * sprites sized by zoom; draw cost is linear in particle count.
 */

import { Camera } from "./camera.js";
import { Frame } from "./protocol.js";

export interface Raster {
  readonly width: number;
  readonly height: number;
  clear(r: number, g: number, b: number): void;
  fillRect(x: number, y: number, w: number, h: number, r: number, g: number, b: number): void;
}

/** Deterministic in-memory RGBA rasterizer (tests, thumbnails). */
export class SoftwareRaster implements Raster {
  readonly pixels: Uint8ClampedArray;

  constructor(
    readonly width: number,
    readonly height: number,
  ) {
    this.pixels = new Uint8ClampedArray(width * height * 4);
  }

  clear(r: number, g: number, b: number): void {
    for (let i = 0; i < this.pixels.length; i += 4) {
      this.pixels[i] = r;
      this.pixels[i + 1] = g;
      this.pixels[i + 2] = b;
      this.pixels[i + 3] = 255;
    }
  }

  fillRect(x: number, y: number, w: number, h: number, r: number, g: number, b: number): void {
    const x0 = Math.max(0, Math.round(x));
    const y0 = Math.max(0, Math.round(y));
    const x1 = Math.min(this.width, Math.round(x + w));
    const y1 = Math.min(this.height, Math.round(y + h));
    for (let py = y0; py < y1; py++) {
      let k = (py * this.width + x0) * 4;
      for (let px = x0; px < x1; px++) {
        this.pixels[k] = r;
        this.pixels[k + 1] = g;
        this.pixels[k + 2] = b;
        this.pixels[k + 3] = 255;
        k += 4;
      }
    }
  }
}

/** Adapter for a real canvas 2D context. */
export class CanvasRaster implements Raster {
  constructor(private readonly ctx: CanvasRenderingContext2D) {}

  get width(): number {
    return this.ctx.canvas.width;
  }

  get height(): number {
    return this.ctx.canvas.height;
  }

  clear(r: number, g: number, b: number): void {
    this.ctx.fillStyle = `rgb(${r},${g},${b})`;
    this.ctx.fillRect(0, 0, this.width, this.height);
  }

  fillRect(x: number, y: number, w: number, h: number, r: number, g: number, b: number): void {
    this.ctx.fillStyle = `rgb(${r},${g},${b})`;
    this.ctx.fillRect(x, y, w, h);
  }
}

export function spriteSize(zoom: number): number {
  return Math.max(1, Math.min(6, Math.round(zoom * 2)));
}

/**
 * Draw every particle of a 2D-projected frame under the camera transform.
 * 3D frames are projected by dropping the z axis.
 */
export function renderFrame(frame: Frame, extent: number[], camera: Camera, raster: Raster): void {
  raster.clear(8, 8, 16);
  const dim = extent.length;
  const size = spriteSize(camera.state.zoom);
  const half = size / 2;
  for (let i = 0; i < frame.count; i++) {
    const wx = frame.positions[i * dim] * extent[0];
    const wy = frame.positions[i * dim + 1] * extent[1];
    const [cx, cy] = camera.worldToCanvas(wx, wy);
    if (cx < -size || cy < -size || cx > raster.width + size || cy > raster.height + size) {
      continue;
    }
    raster.fillRect(
      cx - half,
      cy - half,
      size,
      size,
      frame.colors[i * 3],
      frame.colors[i * 3 + 1],
      frame.colors[i * 3 + 2],
    );
  }
}
