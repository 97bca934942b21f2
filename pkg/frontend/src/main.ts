/**
 * Browser studio wiring: session connection, canvas loop, playback
 * controls, recipe editor, and the interactive-evolution panel.
 * No physics runs client-side; every action is a documented service
 * command and every pixel comes from server frames.
 */

import { Camera } from "./camera.js";
import { IecPanel } from "./iecPanel.js";
import { decodeFrame, Frame, SessionClient } from "./protocol.js";
import { CanvasRaster, renderFrame } from "./renderer.js";
import { validateRecipe } from "./recipeEditor.js";
import { ViewState } from "./viewState.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

export async function startStudio(serverUrl: string): Promise<void> {
  const canvas = el<HTMLCanvasElement>("world-canvas");
  const ctx = canvas.getContext("2d");
  if (!ctx) throw new Error("2d context unavailable");
  const raster = new CanvasRaster(ctx);
  const statusBar = el<HTMLElement>("status-bar");
  const client = new SessionClient(serverUrl);
  const view = new ViewState(canvas.width, canvas.height);

  const session = await client.createSession({
    paused: false,
    iec: { population: 9 },
  });
  view.bind(session);
  const panel = new IecPanel(client, session.id);
  await panel.refresh();
  renderPanel();

  let latest: Frame | null = null;
  const socket = new WebSocket(client.streamUrl(session.id, 5));
  socket.binaryType = "arraybuffer";
  socket.onmessage = (event) => {
    try {
      latest = decodeFrame(event.data as ArrayBuffer, session.dimensionality);
    } catch (error) {
      statusBar.textContent = `frame skipped: ${error}`;
    }
  };
  socket.onclose = () => {
    statusBar.textContent = "stream closed";
  };

  function drawLoop() {
    if (latest && view.session) {
      renderFrame(latest, view.session.extent, view.camera, raster);
      statusBar.textContent =
        `session ${view.session.id} step ${latest.step} particles ${latest.count}` +
        (panel.lastError ? ` | ${panel.lastError}` : "");
    }
    requestAnimationFrame(drawLoop);
  }
  requestAnimationFrame(drawLoop);

  el<HTMLButtonElement>("btn-pause").onclick = () =>
    client.command(session.id, { command: "pause" });
  el<HTMLButtonElement>("btn-resume").onclick = () =>
    client.command(session.id, { command: "resume" });
  el<HTMLButtonElement>("btn-step").onclick = () =>
    client.command(session.id, { command: "step", steps: 1 });

  // pan/zoom
  let dragging = false;
  let lastX = 0;
  let lastY = 0;
  canvas.onmousedown = (e) => {
    dragging = true;
    lastX = e.offsetX;
    lastY = e.offsetY;
  };
  canvas.onmouseup = () => (dragging = false);
  canvas.onmousemove = (e) => {
    if (dragging) {
      view.camera.pan(e.offsetX - lastX, e.offsetY - lastY);
      lastX = e.offsetX;
      lastY = e.offsetY;
    }
  };
  canvas.onwheel = (e) => {
    e.preventDefault();
    view.camera.zoomAt(e.offsetX, e.offsetY, e.deltaY < 0 ? 1.15 : 1 / 1.15);
  };
  canvas.ondragover = (e) => e.preventDefault();
  canvas.ondrop = async (e) => {
    e.preventDefault();
    const cid = Number(e.dataTransfer?.getData("text/candidate"));
    if (Number.isFinite(cid)) {
      await panel.dropOnWorld(cid, e.offsetX, e.offsetY, view.camera);
    }
  };

  // recipe editor with live validation
  const editor = el<HTMLTextAreaElement>("recipe-editor");
  const feedback = el<HTMLElement>("recipe-feedback");
  editor.oninput = () => {
    const result = validateRecipe(editor.value);
    feedback.className = result.ok ? "ok" : "error";
    feedback.textContent = result.ok
      ? `valid recipe: ${result.totalCount} particles, ${result.entries.length} types`
      : result.issues
          .map((issue) => `line ${issue.line}:${issue.column} ${issue.message}`)
          .join("; ");
  };
  el<HTMLButtonElement>("btn-spawn").onclick = async () => {
    const result = validateRecipe(editor.value);
    if (!result.ok || !view.session) return;
    const [wx, wy] = view.camera.canvasToWorld(canvas.width / 2, canvas.height / 2);
    await client.command(session.id, {
      command: "inject",
      recipe: editor.value,
      position: [wx, wy],
    });
  };

  function renderPanel() {
    const grid = el<HTMLElement>("iec-grid");
    grid.innerHTML = "";
    for (const candidate of panel.candidates) {
      const cell = document.createElement("div");
      cell.className = panel.selected.has(candidate.id) ? "candidate selected" : "candidate";
      cell.draggable = true;
      cell.textContent = `#${candidate.id}`;
      cell.title = candidate.recipe;
      cell.onclick = () => {
        panel.toggleSelect(candidate.id);
        renderPanel();
      };
      cell.ondragstart = (e) =>
        e.dataTransfer?.setData("text/candidate", String(candidate.id));
      cell.ondragover = (e) => e.preventDefault();
      cell.ondrop = async (e) => {
        e.preventDefault();
        const source = Number(e.dataTransfer?.getData("text/candidate"));
        if (Number.isFinite(source) && source !== candidate.id) {
          await panel.dropOnCandidate(source, candidate.id);
          renderPanel();
        }
      };
      const mutate = document.createElement("button");
      mutate.textContent = "mutate";
      mutate.onclick = async (e) => {
        e.stopPropagation();
        await panel.mutate(candidate.id);
        renderPanel();
      };
      cell.appendChild(mutate);
      grid.appendChild(cell);
    }
  }

  el<HTMLButtonElement>("btn-next-gen").onclick = async () => {
    await panel.nextGeneration();
    renderPanel();
  };
}
