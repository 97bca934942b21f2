/**
 * Pan/zoom camera between world coordinates and canvas pixels.
 * The transform is affine and always invertible (zoom > 0 enforced).
 */

export interface CameraState {
  /** world point at the canvas center */
  centerX: number;
  centerY: number;
  /** pixels per world unit */
  zoom: number;
}

export class Camera {
  state: CameraState;

  constructor(
    public canvasWidth: number,
    public canvasHeight: number,
    state?: Partial<CameraState>,
  ) {
    this.state = { centerX: 0, centerY: 0, zoom: 1, ...state };
    if (this.state.zoom <= 0) throw new Error("zoom must be > 0");
  }

  static fitWorld(canvasWidth: number, canvasHeight: number, extent: number[]): Camera {
    const zoom = Math.min(canvasWidth / extent[0], canvasHeight / extent[1]);
    return new Camera(canvasWidth, canvasHeight, {
      centerX: extent[0] / 2,
      centerY: extent[1] / 2,
      zoom,
    });
  }

  worldToCanvas(wx: number, wy: number): [number, number] {
    const { centerX, centerY, zoom } = this.state;
    return [
      (wx - centerX) * zoom + this.canvasWidth / 2,
      (wy - centerY) * zoom + this.canvasHeight / 2,
    ];
  }

  canvasToWorld(px: number, py: number): [number, number] {
    const { centerX, centerY, zoom } = this.state;
    return [
      (px - this.canvasWidth / 2) / zoom + centerX,
      (py - this.canvasHeight / 2) / zoom + centerY,
    ];
  }

  pan(dxPixels: number, dyPixels: number): void {
    this.state.centerX -= dxPixels / this.state.zoom;
    this.state.centerY -= dyPixels / this.state.zoom;
  }

  zoomAt(px: number, py: number, factor: number): void {
    if (factor <= 0) throw new Error("zoom factor must be > 0");
    const [wx, wy] = this.canvasToWorld(px, py);
    this.state.zoom *= factor;
    // keep the anchor point fixed on screen
    const [nx, ny] = this.worldToCanvas(wx, wy);
    this.pan(px - nx, py - ny);
  }
}
