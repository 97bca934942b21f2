"""Session server: live simulations over HTTP + WebSocket.

Each session owns one world and one simulation thread (single writer).
Commands are queued and drained at step boundaries, so they are linearized;
a command's HTTP response returns after its effect is applied. Frame
subscribers get binary frames (frames.py layout) through bounded queues:
a slow consumer drops frames, it never stalls the simulation loop.

Interactive evolution: a session holds a candidate population of recipes
(default 9). propose returns candidates with short thumbnail replays
(capped particle count, fixed step budget); select keeps the chosen
candidates and refills the population with mutated/mixed offspring; mix and
mutate append candidates (the active-user operations); inject spawns a
recipe into the live world. Every interactive command lands in the session
event log for experiment reconstruction.
"""

from __future__ import annotations

import base64
import queue
import threading
import time
import uuid
from dataclasses import dataclass, field

import numpy as np
from fastapi import FastAPI, HTTPException, WebSocket, WebSocketDisconnect
from fastapi.responses import Response

from .engine import World, run as engine_run, spawn, step as engine_step
from .errors import ConfigurationError
from .frames import encode_world_frame
from .morphogenesis import SwarmClass
from .recipe import (
    KineticParams,
    MutationConfig,
    Recipe,
    RecipeError,
    mix_recipes,
    mutate_recipe,
    parse_recipe,
    random_recipe,
    serialize_recipe,
)
from .rng import make_rng, stream_key
from .runconfig import RunConfig, parse_config
from .snapshots import state_hash
from .engine import WorldConfig, new_world

THUMBNAIL_MAX_PARTICLES = 150
THUMBNAIL_STEPS = 300
THUMBNAIL_DECIMATION = 10
DEFAULT_POPULATION = 9
MAX_POPULATION = 16


@dataclass
class Candidate:
    candidate_id: int
    recipe: Recipe
    thumbnail: list[str] | None = None  # base64 frame records


@dataclass
class _Command:
    payload: dict
    done: threading.Event = field(default_factory=threading.Event)
    result: dict | None = None
    error: str | None = None


def _capped_recipe(recipe: Recipe, cap: int) -> Recipe:
    total = recipe.total_count
    if total <= cap:
        return recipe
    scale = cap / total
    entries = []
    for count, params in recipe.entries:
        entries.append((max(1, int(round(count * scale))), params))
    return Recipe(tuple(entries))


class Session:
    def __init__(self, session_id: str, config: RunConfig, paused: bool, iec: dict | None):
        self.id = session_id
        self.config = config
        self.world: World = config.build_world()
        self.lock = threading.RLock()
        self.running = not paused
        self.decimation = 10
        self.subscribers: list[queue.Queue] = []
        self.commands: "queue.Queue[_Command]" = queue.Queue()
        self.events: list[dict] = []
        self._event_seq = 0
        self._stop = threading.Event()
        self._steps_remaining = 0  # for step_n
        self.iec_population: list[Candidate] = []
        self._next_candidate = 0
        self._generation = 0
        if iec:
            self._init_iec(iec)
        self.thread = threading.Thread(target=self._loop, name=f"session-{session_id}", daemon=True)
        self.thread.start()

    # --- interactive evolution -------------------------------------------
    def _init_iec(self, iec: dict):
        size = int(iec.get("population", DEFAULT_POPULATION))
        if not 1 <= size <= MAX_POPULATION:
            raise ConfigurationError(f"IEC population must be 1..{MAX_POPULATION}")
        recipes = [parse_recipe(t) for t in iec.get("recipes", [])]
        rng = make_rng(stream_key(self.world.config.seed, 3001, 0))
        while len(recipes) < size:
            recipes.append(random_recipe(rng, total_count=60))
        for r in recipes[:size]:
            self._add_candidate(r)

    def _add_candidate(self, recipe: Recipe) -> Candidate:
        if len(self.iec_population) >= MAX_POPULATION:
            raise ConfigurationError(f"candidate population limited to {MAX_POPULATION}")
        cand = Candidate(candidate_id=self._next_candidate, recipe=recipe)
        self._next_candidate += 1
        self.iec_population.append(cand)
        return cand

    def _candidate(self, cid: int) -> Candidate:
        for c in self.iec_population:
            if c.candidate_id == cid:
                return c
        raise ConfigurationError(f"unknown candidate id {cid}")

    def _thumbnail(self, cand: Candidate) -> list[str]:
        if cand.thumbnail is not None:
            return cand.thumbnail
        recipe = _capped_recipe(cand.recipe, THUMBNAIL_MAX_PARTICLES)
        cfg = WorldConfig(
            seed=stream_key(self.world.config.seed, 3002, cand.candidate_id),
            extent=(300.0, 300.0),
            swarm_class=SwarmClass.HETEROGENEOUS,
        )
        w = new_world(cfg)
        spawn(w, recipe, (150.0, 150.0), 60.0)
        frames = [base64.b64encode(encode_world_frame(w)).decode("ascii")]
        for _ in range(THUMBNAIL_STEPS):
            engine_step(w)
            if w.step_count % THUMBNAIL_DECIMATION == 0:
                frames.append(base64.b64encode(encode_world_frame(w)).decode("ascii"))
        cand.thumbnail = frames
        return frames

    # --- simulation loop ---------------------------------------------------
    def _loop(self):
        while not self._stop.is_set():
            cmd_executed = self._drain_commands()
            advance = self.running or self._steps_remaining > 0
            if advance:
                with self.lock:
                    engine_step(self.world)
                    if self.config.perturbations:
                        from .evolution import apply_perturbations

                        apply_perturbations(self.world, self.config.perturbations)
                    if self._steps_remaining > 0:
                        self._steps_remaining -= 1
                        if self._steps_remaining == 0:
                            self.running = False
                    frame = None
                    if self.world.step_count % self.decimation == 0:
                        frame = encode_world_frame(self.world)
                if frame is not None:
                    self._broadcast(frame)
            elif not cmd_executed:
                time.sleep(0.002)

    def _broadcast(self, frame: bytes):
        for q, notify in list(self.subscribers):
            try:
                q.put_nowait(frame)
            except queue.Full:
                try:
                    q.get_nowait()  # drop the oldest frame, never block
                except queue.Empty:
                    pass
                try:
                    q.put_nowait(frame)
                except queue.Full:
                    pass
            if notify is not None:
                try:
                    notify()
                except RuntimeError:
                    pass  # consumer's event loop is gone; it will unsubscribe

    def _drain_commands(self) -> bool:
        executed = False
        while True:
            try:
                cmd = self.commands.get_nowait()
            except queue.Empty:
                return executed
            executed = True
            try:
                cmd.result = self._execute(cmd.payload)
            except (ConfigurationError, RecipeError) as exc:
                cmd.error = str(exc)
            except Exception as exc:  # surfaces to the HTTP caller
                cmd.error = f"internal error: {exc}"
            finally:
                cmd.done.set()

    def _log_event(self, command: str, detail: dict):
        with self.lock:
            self.events.append(
                {
                    "seq": self._event_seq,
                    "step": self.world.step_count,
                    "command": command,
                    **detail,
                }
            )
            self._event_seq += 1

    def _execute(self, payload: dict) -> dict:
        command = payload.get("command")
        if command == "pause":
            self.running = False
            self._steps_remaining = 0
            self._log_event("pause", {})
            return {"status": "paused"}
        if command == "resume":
            self.running = True
            self._log_event("resume", {})
            return {"status": "running"}
        if command == "step":
            k = int(payload.get("steps", 1))
            if k < 0:
                raise ConfigurationError("steps must be >= 0")
            self.running = False
            with self.lock:
                for _ in range(k):
                    engine_step(self.world)
            self._log_event("step", {"steps": k})
            return {"step_count": self.world.step_count}
        if command == "set_decimation":
            value = int(payload.get("decimation", 10))
            if value < 1:
                raise ConfigurationError("decimation must be >= 1")
            self.decimation = value
            return {"decimation": value}
        if command == "inject":
            return self._cmd_inject(payload)
        if command == "iec_propose":
            cands = [
                {
                    "id": c.candidate_id,
                    "recipe": serialize_recipe(c.recipe),
                    "thumbnail": self._thumbnail(c),
                }
                for c in self.iec_population
            ]
            self._log_event("iec_propose", {"candidates": [c.candidate_id for c in self.iec_population]})
            return {"candidates": cands, "generation": self._generation}
        if command == "iec_select":
            return self._cmd_select(payload)
        if command == "iec_mix":
            a = self._candidate(int(payload["a"]))
            b = self._candidate(int(payload["b"]))
            rng = make_rng(stream_key(self.world.config.seed, 3003, self._next_candidate))
            child = self._add_candidate(mix_recipes(a.recipe, b.recipe, rng))
            self._log_event("iec_mix", {"a": a.candidate_id, "b": b.candidate_id,
                                        "child": child.candidate_id})
            return {"candidate": {"id": child.candidate_id, "recipe": serialize_recipe(child.recipe)}}
        if command == "iec_mutate":
            src = self._candidate(int(payload["id"]))
            rng = make_rng(stream_key(self.world.config.seed, 3004, self._next_candidate))
            child = self._add_candidate(
                mutate_recipe(src.recipe, self.world.config.mutation, rng)
            )
            self._log_event("iec_mutate", {"source": src.candidate_id,
                                           "child": child.candidate_id})
            return {"candidate": {"id": child.candidate_id, "recipe": serialize_recipe(child.recipe)}}
        raise ConfigurationError(f"unknown command {command!r}")

    def _cmd_inject(self, payload: dict) -> dict:
        if "id" in payload:
            recipe = self._candidate(int(payload["id"])).recipe
        elif "recipe" in payload:
            recipe = parse_recipe(payload["recipe"])
        else:
            raise ConfigurationError("inject needs 'recipe' text or a candidate 'id'")
        position = payload.get("position")
        if position is None or len(position) != self.world.config.dimensionality:
            raise ConfigurationError("inject needs a world-dimensional 'position'")
        radius = float(payload.get("radius", 10.0))
        with self.lock:
            spawn(self.world, recipe, tuple(float(x) for x in position), radius)
        self._log_event(
            "inject",
            {"position": [float(x) for x in position], "count": recipe.total_count},
        )
        return {"n_particles": self.world.n_particles}

    def _cmd_select(self, payload: dict) -> dict:
        ids = [int(x) for x in payload.get("ids", [])]
        if not ids:
            raise ConfigurationError("iec_select needs non-empty 'ids'")
        selected = [self._candidate(c) for c in ids]
        size = len(self.iec_population)
        rng = make_rng(stream_key(self.world.config.seed, 3005, self._generation))
        next_recipes = [c.recipe for c in selected]
        k = 0
        while len(next_recipes) < size:
            if k % 2 == 0 or len(selected) < 2:
                parent = selected[k % len(selected)]
                next_recipes.append(
                    mutate_recipe(parent.recipe, self.world.config.mutation, rng)
                )
            else:
                a = selected[k % len(selected)]
                b = selected[(k + 1) % len(selected)]
                next_recipes.append(mix_recipes(a.recipe, b.recipe, rng))
            k += 1
        self.iec_population = []
        for r in next_recipes:
            self._add_candidate(r)
        self._generation += 1
        self._log_event("iec_select", {"ids": ids, "generation": self._generation})
        return {
            "generation": self._generation,
            "candidates": [
                {"id": c.candidate_id, "recipe": serialize_recipe(c.recipe)}
                for c in self.iec_population
            ],
        }

    # --- external API -------------------------------------------------------
    def submit(self, payload: dict, timeout: float = 30.0) -> dict:
        cmd = _Command(payload=payload)
        self.commands.put(cmd)
        if not cmd.done.wait(timeout):
            raise ConfigurationError("command timed out")
        if cmd.error is not None:
            raise ConfigurationError(cmd.error)
        return cmd.result

    def status(self) -> dict:
        with self.lock:
            return {
                "id": self.id,
                "status": "running" if self.running or self._steps_remaining else "paused",
                "step_count": self.world.step_count,
                "n_particles": self.world.n_particles,
                "dimensionality": self.world.config.dimensionality,
                "extent": list(self.world.config.extent),
                "state_hash": f"{state_hash(self.world):016x}",
                "iec_population": [c.candidate_id for c in self.iec_population],
            }

    def subscribe(self, notify=None) -> queue.Queue:
        """Register a frame consumer. ``notify`` is an optional zero-argument
        callable invoked (cheaply, from the simulation thread) after a frame
        is offered; async consumers use it to wake without polling."""
        q = queue.Queue(maxsize=8)
        self.subscribers.append((q, notify))
        return q

    def unsubscribe(self, q: queue.Queue):
        self.subscribers = [(sq, n) for sq, n in self.subscribers if sq is not q]

    def destroy(self):
        self._stop.set()
        self.thread.join(timeout=5)
        for q in list(self.subscribers):
            self.unsubscribe(q)


DEFAULT_SESSION_RECIPE = Recipe(
    ((40, KineticParams(60, 3, 6, 0.5, 0.6, 15, 0.05, 0.3)),)
)


def _default_run_config(doc: dict) -> RunConfig:
    world = WorldConfig(seed=int(doc.get("seed", 0)), extent=(500.0, 500.0))
    from .runconfig import SpawnSpec

    return RunConfig(
        world=world,
        spawns=[SpawnSpec(recipe=DEFAULT_SESSION_RECIPE, center=(250.0, 250.0), radius=60.0)],
        n_steps=0,
    )


def create_app() -> FastAPI:
    app = FastAPI(title="swarm session server")
    sessions: dict[str, Session] = {}
    registry_lock = threading.Lock()

    def get_session(session_id: str) -> Session:
        with registry_lock:
            session = sessions.get(session_id)
        if session is None:
            raise HTTPException(status_code=404, detail=f"unknown session {session_id}")
        return session

    @app.post("/sessions")
    def create_session(doc: dict | None = None):
        doc = doc or {}
        try:
            if "config" in doc:
                config = parse_config(doc["config"])
            else:
                config = _default_run_config(doc)
            session = Session(
                session_id=uuid.uuid4().hex[:12],
                config=config,
                paused=bool(doc.get("paused", False)),
                iec=doc.get("iec"),
            )
        except (ConfigurationError, RecipeError) as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        with registry_lock:
            sessions[session.id] = session
        return session.status()

    @app.get("/sessions/{session_id}")
    def session_status(session_id: str):
        return get_session(session_id).status()

    @app.get("/sessions/{session_id}/events")
    def session_events(session_id: str):
        session = get_session(session_id)
        with session.lock:
            return {"events": list(session.events)}

    @app.post("/sessions/{session_id}/commands")
    def session_command(session_id: str, payload: dict):
        session = get_session(session_id)
        try:
            return session.submit(payload)
        except (ConfigurationError, RecipeError) as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc

    @app.delete("/sessions/{session_id}")
    def destroy_session(session_id: str):
        session = get_session(session_id)
        with registry_lock:
            sessions.pop(session_id, None)
        session.destroy()
        return Response(status_code=204)

    @app.websocket("/sessions/{session_id}/stream")
    async def stream(websocket: WebSocket, session_id: str):
        import asyncio

        with registry_lock:
            session = sessions.get(session_id)
        if session is None:
            await websocket.close(code=4404)
            return
        decimation = websocket.query_params.get("decimation")
        if decimation is not None:
            session.submit({"command": "set_decimation", "decimation": int(decimation)})
        await websocket.accept()
        loop = asyncio.get_running_loop()
        wakeup = asyncio.Event()
        q = session.subscribe(notify=lambda: loop.call_soon_threadsafe(wakeup.set))
        try:
            while True:
                try:
                    frame = q.get_nowait()
                except queue.Empty:
                    try:
                        await asyncio.wait_for(wakeup.wait(), timeout=0.5)
                    except asyncio.TimeoutError:
                        if session._stop.is_set():
                            break
                        continue
                    wakeup.clear()
                    continue
                await websocket.send_bytes(frame)
        except (WebSocketDisconnect, RuntimeError):
            pass
        finally:
            session.unsubscribe(q)

    return app


app = create_app()
