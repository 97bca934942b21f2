/**
 * Interactive-evolution panel state machine.
 *
 * Holds the candidate grid and maps user gestures to service commands:
 * clicking favorites then "next generation" -> iec_select; dragging
 * candidate A onto B -> iec_mix; the mutate button -> iec_mutate; dragging
 * a candidate onto the main canvas -> inject at the drop point converted to
 * world coordinates. Server rejections surface through lastError without
 * losing panel state.
 */

import { Camera } from "./camera.js";
import { Candidate, SessionClient } from "./protocol.js";

export class IecPanel {
  candidates: Candidate[] = [];
  selected = new Set<number>();
  generation = 0;
  lastError: string | null = null;

  constructor(
    private readonly client: SessionClient,
    private readonly sessionId: string,
  ) {}

  private async guard<T>(action: () => Promise<T>): Promise<T | null> {
    try {
      this.lastError = null;
      return await action();
    } catch (error) {
      this.lastError = error instanceof Error ? error.message : String(error);
      return null;
    }
  }

  async refresh(): Promise<void> {
    await this.guard(async () => {
      const out = await this.client.command(this.sessionId, { command: "iec_propose" });
      this.candidates = out.candidates;
      this.generation = out.generation;
      this.selected.clear();
    });
  }

  toggleSelect(candidateId: number): void {
    if (this.selected.has(candidateId)) {
      this.selected.delete(candidateId);
    } else {
      this.selected.add(candidateId);
    }
  }

  async nextGeneration(): Promise<void> {
    if (this.selected.size === 0) {
      this.lastError = "select at least one candidate";
      return;
    }
    await this.guard(async () => {
      const out = await this.client.command(this.sessionId, {
        command: "iec_select",
        ids: [...this.selected].sort((a, b) => a - b),
      });
      this.candidates = out.candidates;
      this.generation = out.generation;
      this.selected.clear();
    });
  }

  /** Drag candidate A onto candidate B. */
  async dropOnCandidate(sourceId: number, targetId: number): Promise<void> {
    await this.guard(async () => {
      const out = await this.client.command(this.sessionId, {
        command: "iec_mix",
        a: sourceId,
        b: targetId,
      });
      this.candidates.push(out.candidate);
    });
  }

  async mutate(candidateId: number): Promise<void> {
    await this.guard(async () => {
      const out = await this.client.command(this.sessionId, {
        command: "iec_mutate",
        id: candidateId,
      });
      this.candidates.push(out.candidate);
    });
  }

  /** Drag a candidate onto the main canvas at pixel (px, py). */
  async dropOnWorld(candidateId: number, px: number, py: number, camera: Camera): Promise<void> {
    const [wx, wy] = camera.canvasToWorld(px, py);
    await this.guard(() =>
      this.client.command(this.sessionId, {
        command: "inject",
        id: candidateId,
        position: [wx, wy],
      }),
    );
  }
}
