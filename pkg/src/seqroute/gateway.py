"""Live dispatch daemon: newline-delimited JSON over TCP, stub executors.

The gateway accepts `{"id": str, "n": int, "m_true": int?}` frames, routes each
request with the configured policy and a live RTT estimator, executes on an
in-process edge stub or a remote cloud stub, and appends an auditable decision
log. The cloud stub is a separate server that sleeps for its modeled service
time plus an artificial RTT, and reports the service portion back so the
gateway can recover the round-trip time from timestamps.
"""
from __future__ import annotations

import csv
import json
import socket
import socketserver
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

from .models import DeviceProfile, exec_time, predict_len
from .netsim import BandwidthModel, TxEstimator, current_tx_estimate, observe_roundtrip
from .policy import (PolicyConfig, PolicyKind, Target, naive_decide,
                     predictive_decide, static_decide)
from .sim import RECORD_CSV_HEADER

GATEWAY_LOG_HEADER = RECORD_CSV_HEADER + ["n", "rtt_estimate_ms"]

MIN_MEASURED_RTT_MS = 1e-3  # sub-microsecond round trips are clock noise


@dataclass(frozen=True)
class CloudStubConfig:
    host: str
    port: int
    profile: DeviceProfile
    artificial_rtt_ms: float = 0.0

    def __post_init__(self):
        if self.artificial_rtt_ms < 0:
            raise ValueError("artificial_rtt_ms must be >= 0")


@dataclass(frozen=True)
class GatewayConfig:
    host: str
    port: int
    policy: PolicyConfig
    bandwidth: BandwidthModel
    estimator_init: TxEstimator
    cloud_host: str = ""
    cloud_port: int = 0
    log_path: str | None = None


class _Coordinator:
    """Single owner of the estimator, counters, and the decision log."""

    def __init__(self, cfg: GatewayConfig):
        self._lock = threading.Lock()
        self._est = cfg.estimator_init
        self._edge_count = 0
        self._cloud_count = 0
        self._total_charged_ms = 0.0
        self._seq = 0
        self._t0 = time.monotonic()
        self._log_fh = None
        self._log_writer = None
        if cfg.log_path:
            self._log_fh = Path(cfg.log_path).open("w", newline="\n",
                                                   encoding="utf-8")
            self._log_writer = csv.writer(self._log_fh, lineterminator="\n")
            self._log_writer.writerow(GATEWAY_LOG_HEADER)
            self._log_fh.flush()

    def rtt_estimate(self) -> float:
        with self._lock:
            est = self._est
        return est.last_rtt if est.last_rtt is not None else est.initial_rtt

    def next_seq(self) -> int:
        with self._lock:
            seq = self._seq
            self._seq += 1
        return seq

    def observe(self, measured_rtt_ms: float) -> None:
        now = time.monotonic() - self._t0
        with self._lock:
            self._est = observe_roundtrip(self._est, measured_rtt_ms, now)

    def record(self, seq, n, decision, realized_edge, realized_cloud, realized_tx,
               charged, rtt_estimate) -> None:
        clock_s = time.monotonic() - self._t0
        with self._lock:
            if decision.target is Target.EDGE:
                self._edge_count += 1
            else:
                self._cloud_count += 1
            self._total_charged_ms += charged
            if self._log_writer is not None:
                self._log_writer.writerow(
                    [seq, decision.target.value, repr(decision.est_edge),
                     repr(decision.est_cloud_total), repr(realized_edge),
                     repr(realized_cloud), repr(realized_tx), repr(charged),
                     repr(clock_s), n, repr(rtt_estimate)])
                self._log_fh.flush()

    def stats(self) -> dict:
        with self._lock:
            est = self._est
            return {
                "edge_count": self._edge_count,
                "cloud_count": self._cloud_count,
                "requests": self._edge_count + self._cloud_count,
                "total_charged_ms": self._total_charged_ms,
                "rtt_estimate_ms": (est.last_rtt if est.last_rtt is not None
                                    else est.initial_rtt),
            }

    def close(self) -> None:
        with self._lock:
            if self._log_fh is not None:
                self._log_fh.close()
                self._log_fh = None
                self._log_writer = None


def _decide(policy: PolicyConfig, n: int, t_tx_est: float):
    if policy.kind is PolicyKind.PREDICTIVE:
        return predictive_decide(policy, n, t_tx_est)
    if policy.kind is PolicyKind.NAIVE:
        return naive_decide(policy, n, t_tx_est)
    if policy.kind in (PolicyKind.STATIC_EDGE, PolicyKind.STATIC_CLOUD):
        return static_decide(policy, n, t_tx_est)
    raise ValueError(f"gateway cannot serve policy kind {policy.kind}")


class GatewayServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, cfg: GatewayConfig):
        self.cfg = cfg
        self.coordinator = _Coordinator(cfg)
        super().__init__((cfg.host, cfg.port), _GatewayHandler)

    def stats(self) -> dict:
        return self.coordinator.stats()

    def server_close(self):
        super().server_close()
        self.coordinator.close()


class _GatewayHandler(socketserver.StreamRequestHandler):
    def handle(self):
        for raw in self.rfile:
            try:
                reply = self._handle_frame(raw)
            except Exception as exc:  # connection stays open after bad frames
                reply = {"error": f"{type(exc).__name__}: {exc}"}
            self.wfile.write(json.dumps(reply).encode("utf-8") + b"\n")
            self.wfile.flush()

    def _handle_frame(self, raw: bytes) -> dict:
        try:
            frame = json.loads(raw.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            return {"error": f"malformed frame: {exc}"}
        if not isinstance(frame, dict) or "n" not in frame or "id" not in frame:
            return {"id": frame.get("id") if isinstance(frame, dict) else None,
                    "error": "frame must carry 'id' and 'n'"}
        try:
            n = int(frame["n"])
        except (TypeError, ValueError):
            return {"id": frame["id"], "error": "'n' must be an integer"}
        if n < 1:
            return {"id": frame["id"], "error": "'n' must be >= 1"}
        m_true = frame.get("m_true")
        if m_true is not None:
            m_true = int(m_true)
            if m_true < 1:
                return {"id": frame["id"], "error": "'m_true' must be >= 1"}

        server: GatewayServer = self.server
        cfg = server.cfg
        coord = server.coordinator
        policy = cfg.policy
        m_hat = predict_len(policy.length_model, n)
        est_snapshot = TxEstimator(ewma_alpha=1.0, initial_rtt=coord.rtt_estimate())
        t_tx_est = current_tx_estimate(est_snapshot, cfg.bandwidth, n, m_hat)
        decision = _decide(policy, n, t_tx_est)
        seq = coord.next_seq()
        m_exec = m_true if m_true is not None else max(1, round(m_hat))

        flagged_unreachable = False
        realized_edge = 0.0
        realized_cloud = 0.0
        realized_tx = 0.0
        if decision.target is Target.CLOUD:
            try:
                charged, service_ms = _call_cloud(cfg, frame["id"], n, m_exec)
                realized_cloud = service_ms
                realized_tx = max(charged - service_ms, MIN_MEASURED_RTT_MS)
                coord.observe(realized_tx)
            except OSError:
                flagged_unreachable = True
                charged = _run_edge(policy.edge, n, m_exec)
                realized_edge = charged
        else:
            charged = _run_edge(policy.edge, n, m_exec)
            realized_edge = charged

        coord.record(seq, n, decision, realized_edge, realized_cloud, realized_tx,
                     charged, est_snapshot.initial_rtt)
        reply = {
            "id": frame["id"],
            "target": decision.target.value,
            "est_edge_ms": decision.est_edge,
            "est_cloud_ms": decision.est_cloud_total,
            "charged_ms": charged,
            "rtt_estimate_ms": est_snapshot.initial_rtt,
        }
        if flagged_unreachable:
            reply["cloud_unreachable"] = True
        return reply


def _run_edge(profile: DeviceProfile, n: int, m: int) -> float:
    """Sleep for the modeled edge duration; returns wall-clock ms."""
    start = time.monotonic()
    time.sleep(exec_time(profile, n, m) / 1000.0)
    return (time.monotonic() - start) * 1000.0


def _call_cloud(cfg: GatewayConfig, req_id, n: int, m: int) -> tuple[float, float]:
    """Round trip to the cloud stub; returns (wall ms, stub-reported service ms)."""
    start = time.monotonic()
    with socket.create_connection((cfg.cloud_host, cfg.cloud_port), timeout=10) as sk:
        sk.sendall(json.dumps({"id": req_id, "n": n, "m": m}).encode("utf-8") + b"\n")
        fh = sk.makefile("rb")
        line = fh.readline()
    elapsed_ms = (time.monotonic() - start) * 1000.0
    reply = json.loads(line.decode("utf-8"))
    return elapsed_ms, float(reply["service_ms"])


class CloudStubServer(socketserver.ThreadingTCPServer):
    """Stand-in cloud executor: sleeps service + artificial RTT, reports service."""

    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, cfg: CloudStubConfig):
        self.cfg = cfg
        super().__init__((cfg.host, cfg.port), _CloudStubHandler)


class _CloudStubHandler(socketserver.StreamRequestHandler):
    def handle(self):
        for raw in self.rfile:
            cfg: CloudStubConfig = self.server.cfg
            try:
                frame = json.loads(raw.decode("utf-8"))
                service_ms = exec_time(cfg.profile, int(frame["n"]),
                                       int(frame["m"]))
            except Exception as exc:
                reply = {"error": f"{type(exc).__name__}: {exc}"}
            else:
                time.sleep((service_ms + cfg.artificial_rtt_ms) / 1000.0)
                reply = {"id": frame.get("id"), "service_ms": service_ms}
            self.wfile.write(json.dumps(reply).encode("utf-8") + b"\n")
            self.wfile.flush()


def start_in_thread(server: socketserver.TCPServer) -> threading.Thread:
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    return thread


def replay_decisions(log_path: str | Path, policy: PolicyConfig,
                     bandwidth: BandwidthModel) -> tuple[int, int]:
    """Re-run the policy offline on (n, logged rtt estimate); count matches."""
    matches = 0
    total = 0
    with Path(log_path).open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            n = int(row["n"])
            rtt = float(row["rtt_estimate_ms"])
            m_hat = (float(policy.m_avg) if policy.kind is PolicyKind.NAIVE
                     else predict_len(policy.length_model, n))
            est = TxEstimator(ewma_alpha=1.0, initial_rtt=rtt)
            t_tx = current_tx_estimate(est, bandwidth, n, m_hat)
            decision = _decide(policy, n, t_tx)
            total += 1
            if decision.target.value == row["decision"]:
                matches += 1
    return matches, total
