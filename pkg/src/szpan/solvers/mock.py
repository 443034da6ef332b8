"""In-process HTTP server that speaks the remote-solver protocol.

Used by the tests and by ``szpan solve-qubo --solver remote`` demos. The
canned behaviour is chosen at construction::

    with MockSolverServer("optimum") as server:
        solve_remote(q, server.url)

Behaviours: ``optimum`` (exact minimum via exhaustive search), ``sa``
(best simulated-annealing sample), ``corrupt`` (optimum with its energy
shifted by +1), ``empty``, ``malformed`` (non-JSON body), ``error``
(HTTP 500), or any callable ``QuboProblem, request_dict -> response_dict``.
"""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from ..qubo import QuboProblem
from .anneal import solve_sa
from .base import SolverConfig
from .exhaustive import solve_exhaustive


def _sample(assignment, e, occurrences=1) -> dict:
    return {"assignment": [int(x) for x in assignment], "energy": float(e), "occurrences": int(occurrences)}


def _optimum(q: QuboProblem, req: dict) -> dict:
    res = solve_exhaustive(q)
    return {"samples": [_sample(res.assignment, res.energy, req.get("num_reads", 1))]}


def _sa(q: QuboProblem, req: dict) -> dict:
    reads = max(1, min(int(req.get("num_reads") or 10), 50))
    res = solve_sa(q, SolverConfig(num_restarts=reads))
    return {"samples": [_sample(res.assignment, res.energy, reads)]}


def _corrupt(q: QuboProblem, req: dict) -> dict:
    body = _optimum(q, req)
    body["samples"][0]["energy"] += 1.0
    return body


BEHAVIOURS = {
    "optimum": _optimum,
    "sa": _sa,
    "corrupt": _corrupt,
    "empty": lambda q, req: {"samples": []},
}


class MockSolverServer:
    def __init__(self, behaviour="optimum", host: str = "127.0.0.1", port: int = 0):
        if not callable(behaviour) and behaviour not in (*BEHAVIOURS, "malformed", "error"):
            raise ValueError(f"unknown mock behaviour {behaviour!r}")
        self.behaviour = behaviour
        self.requests: list[dict] = []
        server = self

        class Handler(BaseHTTPRequestHandler):
            def log_message(self, *args):
                pass

            def do_POST(self):
                if self.path.rstrip("/") != "/solve":
                    self.send_error(404)
                    return
                length = int(self.headers.get("Content-Length", 0))
                try:
                    req = json.loads(self.rfile.read(length).decode())
                    q = QuboProblem.from_dict(req)
                except ValueError as exc:
                    self.send_error(400, str(exc))
                    return
                server.requests.append(req)
                if server.behaviour == "error":
                    self.send_error(500, "mock failure")
                    return
                if server.behaviour == "malformed":
                    body = b"this is not json"
                else:
                    fn = server.behaviour if callable(server.behaviour) else BEHAVIOURS[server.behaviour]
                    body = json.dumps(fn(q, req)).encode()
                self.send_response(200)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(body)))
                self.end_headers()
                self.wfile.write(body)

        self._httpd = ThreadingHTTPServer((host, port), Handler)
        self._thread = None

    @property
    def url(self) -> str:
        host, port = self._httpd.server_address[:2]
        return f"http://{host}:{port}"

    def start(self) -> "MockSolverServer":
        self._thread = threading.Thread(target=self._httpd.serve_forever, kwargs={"poll_interval": 0.05}, daemon=True)
        self._thread.start()
        return self

    def stop(self) -> None:
        self._httpd.shutdown()
        self._httpd.server_close()
        if self._thread is not None:
            self._thread.join()

    def __enter__(self):
        return self.start()

    def __exit__(self, *exc):
        self.stop()
