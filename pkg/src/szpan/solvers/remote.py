"""Client for a remote annealer speaking a small JSON protocol.

Request: ``POST <endpoint>/solve`` with the QUBO JSON object plus
``num_reads`` and ``time_limit_ms``. Response::

    {"samples": [{"assignment": [0, 1, ...], "energy": e, "occurrences": m}, ...]}

Every returned energy is recomputed locally before it is trusted.
"""

from __future__ import annotations

import json
import math
import time
import urllib.error
import urllib.request

import numpy as np

from ..qubo import QuboProblem, energy
from .base import SolveResult, SolverConfig, SolverError, checked_sample

VALIDATION_TOL = 1e-6


class RemoteSolverError(SolverError):
    """Base class for remote-solver failures."""


class RemoteConnectionError(RemoteSolverError):
    """The endpoint could not be reached or answered with an HTTP error."""


class MalformedResponseError(RemoteSolverError):
    """The response body does not follow the protocol."""


class NoSamplesError(RemoteSolverError):
    """The response was well formed but contained no samples."""


class EnergyValidationError(RemoteSolverError):
    """A returned energy disagrees with the local re-evaluation by more than 1e-6."""


def build_request(q: QuboProblem, num_reads: int, time_limit_ms: int | None) -> dict:
    body = q.to_dict()
    body["num_reads"] = int(num_reads)
    body["time_limit_ms"] = time_limit_ms
    return body


def parse_samples(q: QuboProblem, payload) -> list[tuple[np.ndarray, float, int]]:
    """Validate a decoded response; returns ``(assignment, reported_energy, occurrences)`` triples."""
    if not isinstance(payload, dict) or not isinstance(payload.get("samples"), list):
        raise MalformedResponseError("response must be an object with a 'samples' list")
    out = []
    for k, item in enumerate(payload["samples"]):
        try:
            a = np.asarray(item["assignment"])
            e = float(item["energy"])
            occ = int(item.get("occurrences", 1))
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedResponseError(f"sample {k}: {exc}") from exc
        if a.shape != (q.n,) or not np.isin(a, (0, 1)).all():
            raise MalformedResponseError(f"sample {k}: assignment is not a 0/1 vector of length {q.n}")
        out.append((a.astype(np.int8), e, occ))
    if not out:
        raise NoSamplesError("remote solver returned no samples")
    return out


def solve_remote(
    q: QuboProblem,
    endpoint: str,
    cfg: SolverConfig | None = None,
    num_reads: int = 100,
    timeout: float = 30.0,
) -> SolveResult:
    cfg = cfg or SolverConfig()
    t0 = time.perf_counter()
    time_limit_ms = None if cfg.time_budget is None else int(cfg.time_budget * 1000)
    body = json.dumps(build_request(q, num_reads, time_limit_ms)).encode()
    req = urllib.request.Request(
        endpoint.rstrip("/") + "/solve", data=body, headers={"Content-Type": "application/json"}, method="POST"
    )
    opener = urllib.request.build_opener(urllib.request.ProxyHandler({}))
    try:
        with opener.open(req, timeout=timeout) as resp:
            raw = resp.read()
    except urllib.error.HTTPError as exc:
        raise RemoteConnectionError(f"HTTP {exc.code} from {endpoint}") from exc
    except (urllib.error.URLError, OSError) as exc:
        raise RemoteConnectionError(f"cannot reach {endpoint}: {exc}") from exc
    try:
        payload = json.loads(raw.decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise MalformedResponseError(f"response is not JSON: {exc}") from exc
    samples = parse_samples(q, payload)

    checked = []
    for k, (a, reported, occ) in enumerate(samples):
        local = energy(q, a)
        if not math.isclose(local, reported, rel_tol=0.0, abs_tol=VALIDATION_TOL):
            raise EnergyValidationError(f"sample {k}: reported energy {reported!r}, local {local!r}")
        checked.append((local, k, a, occ))
    best = min(checked, key=lambda t: (t[0], t[1]))
    return SolveResult(
        checked_sample(q, best[2]),
        energy_history=[c[0] for c in checked],
        evaluations=sum(c[3] for c in checked),
        wall_time=time.perf_counter() - t0,
        info={"solver": "remote", "endpoint": endpoint, "num_samples": len(checked)},
    )

