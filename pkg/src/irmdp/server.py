"""JSON-over-HTTP service hosting elicitation sessions, for both simulated
users and live human answering (the browser client consumes this API).

Routes:
    POST   /api/sessions             create (generator spec or inline instance)
    GET    /api/sessions/{id}        full session view
    POST   /api/sessions/{id}/answer apply {response, query_index?}
    POST   /api/sessions/{id}/stop   mark terminal (idempotent)
    DELETE /api/sessions/{id}

Sessions run the same state machine as run_elicitation, so the service's
transitions replay it exactly.  Every transition is snapshotted to the state
directory; human sessions never expose true-regret data.
"""

from __future__ import annotations

import json
import os
import threading
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np

from .domains import AutonomicSpec, RandomMdpSpec, gen_autonomic, gen_random
from .elicitation import (
    ElicitationSession,
    SessionTerminated,
    SimulatedUser,
    simulate_response,
)
from .formats import (
    FormatError,
    instance_from_json,
    session_from_json,
    session_to_json,
)
from .rewards import QueryResponse


class ApiError(Exception):
    def __init__(self, status, message):
        self.status = status
        self.message = message
        super().__init__(message)


@dataclass
class SessionRecord:
    id: str
    session: ElicitationSession
    mode: str  # "simulated" | "human"
    created: str
    updated: str
    lock: threading.Lock = field(default_factory=threading.Lock, repr=False)


def _now():
    return datetime.now(timezone.utc).isoformat()


def _build_instance(body):
    if "instance" in body:
        try:
            return instance_from_json(body["instance"])
        except FormatError as exc:
            raise ApiError(422, str(exc))
    gen = body.get("generator")
    if not isinstance(gen, dict):
        raise ApiError(422, "body needs either 'instance' or 'generator'")
    kind = gen.get("type", "random")
    params = {k: v for k, v in gen.items() if k != "type"}
    try:
        if kind == "random":
            return gen_random(RandomMdpSpec(**params))
        if kind == "autonomic":
            spec = AutonomicSpec(**params)
            return gen_autonomic(spec)
    except (TypeError, ValueError) as exc:
        raise ApiError(422, f"generator: {exc}")
    raise ApiError(422, f"generator.type: unknown kind {kind!r}")


class SessionStore:
    """Thread-safe session registry with JSON persistence per transition."""

    def __init__(self, state_dir=None):
        self.state_dir = state_dir
        self._records = {}
        self._lock = threading.Lock()
        if state_dir:
            os.makedirs(state_dir, exist_ok=True)
            for name in sorted(os.listdir(state_dir)):
                if name.endswith(".json"):
                    self._load(os.path.join(state_dir, name))

    def _load(self, path):
        with open(path) as fh:
            obj = json.load(fh)
        record = SessionRecord(
            id=obj["id"],
            session=session_from_json(obj["session"]),
            mode=obj["mode"],
            created=obj["created"],
            updated=obj["updated"],
        )
        self._records[record.id] = record

    def persist(self, record):
        if not self.state_dir:
            return
        payload = {
            "id": record.id,
            "mode": record.mode,
            "created": record.created,
            "updated": record.updated,
            "session": session_to_json(record.session),
        }
        path = os.path.join(self.state_dir, f"{record.id}.json")
        tmp = path + ".tmp"
        with open(tmp, "w") as fh:
            json.dump(payload, fh)
        os.replace(tmp, path)

    def create(self, body) -> SessionRecord:
        mode = body.get("mode", "simulated")
        if mode not in ("simulated", "human"):
            raise ApiError(422, "mode: expected 'simulated' or 'human'")
        mdp, polytope, r_true = _build_instance(body)
        user = None
        if mode == "simulated":
            if r_true is None:
                raise ApiError(422, "simulated mode needs an instance with r_true")
            user = SimulatedUser(
                r_true=np.asarray(r_true, dtype=float).reshape(mdp.n, mdp.k),
                epsilon=float(body.get("user_epsilon", 0.0)),
            )
        try:
            session = ElicitationSession(
                mdp,
                polytope,
                criterion=body.get("criterion", "mmr"),
                strategy=body.get("strategy", "cs"),
                solver_mode=body.get("solver_mode", "relaxed"),
                metric_mode=body.get("metric_mode", "exact"),
                tau=body.get("tau"),
                tau_fraction=body.get("tau_fraction"),
                budget=body.get("budget"),
                user=user,
            )
        except (ValueError, TypeError) as exc:
            raise ApiError(422, str(exc))
        record = SessionRecord(
            id=uuid.uuid4().hex[:12], session=session, mode=mode, created=_now(), updated=_now()
        )
        with record.lock:
            session.advance()
            with self._lock:
                self._records[record.id] = record
            self.persist(record)
        return record

    def get(self, sid) -> SessionRecord:
        with self._lock:
            record = self._records.get(sid)
        if record is None:
            raise ApiError(404, f"unknown session {sid!r}")
        return record

    def delete(self, sid):
        with self._lock:
            record = self._records.pop(sid, None)
        if record is None:
            raise ApiError(404, f"unknown session {sid!r}")
        if self.state_dir:
            path = os.path.join(self.state_dir, f"{sid}.json")
            if os.path.exists(path):
                os.remove(path)

    def answer(self, sid, body) -> SessionRecord:
        record = self.get(sid)
        with record.lock:
            session = record.session
            if session.terminated or session.pending_query is None:
                raise ApiError(409, "session is terminal; no query to answer")
            if "query_index" in body:
                if not isinstance(body["query_index"], int):
                    raise ApiError(422, "query_index: expected an integer")
                if body["query_index"] != len(session.query_log):
                    raise ApiError(
                        409,
                        f"query {body['query_index']} already answered; "
                        f"current query index is {len(session.query_log)}",
                    )
            try:
                resp = QueryResponse(body.get("response"))
            except ValueError:
                raise ApiError(422, "response: expected 'yes', 'no' or 'unsure'")
            try:
                session.answer(resp)
            except SessionTerminated:
                raise ApiError(409, "session is terminal")
            session.advance()
            record.updated = _now()
            self.persist(record)
        return record

    def stop(self, sid) -> SessionRecord:
        record = self.get(sid)
        with record.lock:
            record.session.stop()
            record.updated = _now()
            self.persist(record)
        return record


def session_view(record: SessionRecord) -> dict:
    """Full state of a session as served to clients; human sessions omit
    true-regret values."""
    s = record.session
    include_true = record.mode == "simulated"
    trace = []
    for m in s.trace:
        row = {
            "query_index": m.query_index,
            "mmr": m.max_regret,
            "maximin_value": m.maximin_value,
            "chi": m.chi,
            "distinct_pairs": m.distinct_pairs,
            "elapsed_ms": m.elapsed_ms,
        }
        if include_true and m.true_regret is not None:
            row["true_regret"] = m.true_regret
        trace.append(row)
    q = s.pending_query
    policy = None
    if s.current_f is not None:
        from .mdp import policy_of_occupancy

        policy = policy_of_occupancy(s.mdp, s.current_f).matrix.tolist()
    return {
        "id": record.id,
        "mode": record.mode,
        "criterion": s.criterion.value,
        "strategy": s.strategy.value,
        "solver_mode": s.solver_mode,
        "n": s.mdp.n,
        "k": s.mdp.k,
        "terminal": bool(s.terminated),
        "terminated_reason": s.terminated,
        "certified": s.certified,
        "current_query": None
        if q is None
        else {"s": q.s, "a": q.a, "b": q.b, "epsilon": q.epsilon, "query_index": len(s.query_log)},
        "intervals": {"lo": s.polytope.lo.tolist(), "hi": s.polytope.hi.tolist()},
        "initial_intervals": {
            "lo": s.initial_polytope.lo.tolist(),
            "hi": s.initial_polytope.hi.tolist(),
        },
        "queried_pairs": sorted(list(s.queried_pairs)),
        "query_count": len(s.query_log),
        "budget": s.budget,
        "tau": s.tau,
        "trace": trace,
        "policy": policy,
        "occupancy": None if s.current_f is None else list(map(float, s.current_f)),
    }


class _Handler(BaseHTTPRequestHandler):
    store: SessionStore = None
    static_dir: str = None
    auto_simulate: bool = False

    # -- plumbing ----------------------------------------------------------

    def log_message(self, fmt, *args):  # quiet by default
        pass

    def _send_json(self, status, payload):
        body = json.dumps(payload).encode()
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(body)

    def _read_body(self):
        length = int(self.headers.get("Content-Length") or 0)
        raw = self.rfile.read(length) if length else b"{}"
        try:
            body = json.loads(raw or b"{}")
        except json.JSONDecodeError as exc:
            raise ApiError(422, f"malformed JSON body: {exc}")
        if not isinstance(body, dict):
            raise ApiError(422, "body must be a JSON object")
        return body

    def _route(self):
        parts = [p for p in self.path.split("?")[0].split("/") if p]
        return parts

    # -- verbs ---------------------------------------------------------------

    def do_POST(self):
        try:
            parts = self._route()
            if parts[:2] == ["api", "sessions"] and len(parts) == 2:
                record = self.store.create(self._read_body())
                return self._send_json(201, session_view(record))
            if parts[:2] == ["api", "sessions"] and len(parts) == 4 and parts[3] == "answer":
                record = self.store.answer(parts[2], self._read_body())
                return self._send_json(200, session_view(record))
            if parts[:2] == ["api", "sessions"] and len(parts) == 4 and parts[3] == "stop":
                record = self.store.stop(parts[2])
                return self._send_json(200, session_view(record))
            raise ApiError(404, f"no such route {self.path}")
        except ApiError as exc:
            self._send_json(exc.status, {"error": exc.message})

    def do_GET(self):
        try:
            parts = self._route()
            if parts[:2] == ["api", "sessions"] and len(parts) == 3:
                return self._send_json(200, session_view(self.store.get(parts[2])))
            if parts == ["api", "sessions"]:
                with self.store._lock:
                    ids = sorted(self.store._records)
                return self._send_json(200, {"sessions": ids})
            return self._serve_static(parts)
        except ApiError as exc:
            self._send_json(exc.status, {"error": exc.message})

    def do_DELETE(self):
        try:
            parts = self._route()
            if parts[:2] == ["api", "sessions"] and len(parts) == 3:
                self.store.delete(parts[2])
                return self._send_json(204, {})
            raise ApiError(404, f"no such route {self.path}")
        except ApiError as exc:
            self._send_json(exc.status, {"error": exc.message})

    # -- static assets -----------------------------------------------------

    def _serve_static(self, parts):
        if not self.static_dir:
            raise ApiError(404, f"no such route {self.path}")
        rel = "/".join(parts) or "index.html"
        path = os.path.realpath(os.path.join(self.static_dir, rel))
        root = os.path.realpath(self.static_dir)
        if not path.startswith(root + os.sep) and path != root:
            raise ApiError(404, "not found")
        if os.path.isdir(path):
            path = os.path.join(path, "index.html")
        if not os.path.isfile(path):
            raise ApiError(404, f"no such file {rel}")
        import mimetypes

        ctype = mimetypes.guess_type(path)[0] or "application/octet-stream"
        with open(path, "rb") as fh:
            data = fh.read()
        self.send_response(200)
        self.send_header("Content-Type", ctype)
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)


def make_server(host="127.0.0.1", port=8000, state_dir=None, static_dir=None):
    handler = type(
        "Handler",
        (_Handler,),
        {"store": SessionStore(state_dir=state_dir), "static_dir": static_dir},
    )
    return ThreadingHTTPServer((host, port), handler)


def answer_simulated(store: SessionStore, sid: str):
    """Answer the pending query of a simulated session from its hidden reward
    (test/demo helper mirroring what a scripted client would post)."""
    record = store.get(sid)
    q = record.session.pending_query
    if q is None:
        raise ApiError(409, "no pending query")
    resp = simulate_response(record.session.user, q)
    return store.answer(sid, {"response": resp.value, "query_index": len(record.session.query_log)})
