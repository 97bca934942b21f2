/**
 * One view = one bound live session plus camera and playback state.
 * The view is stateless with respect to simulation truth: rebinding to the
 * same session reproduces the same picture from the server's frames.
 */

import { Camera } from "./camera.js";
import { SessionStatus } from "./protocol.js";

export type PlaybackMode = "live" | "paused";

export class ViewState {
  camera: Camera;
  playback: PlaybackMode = "live";
  session: SessionStatus | null = null;
  selectedCandidates = new Set<number>();

  constructor(canvasWidth: number, canvasHeight: number) {
    this.camera = new Camera(canvasWidth, canvasHeight, { zoom: 1 });
  }

  bind(session: SessionStatus): void {
    if (this.session && this.session.id !== session.id) {
      this.selectedCandidates.clear();
    }
    this.session = session;
    this.camera = Camera.fitWorld(
      this.camera.canvasWidth,
      this.camera.canvasHeight,
      session.extent,
    );
  }
}
