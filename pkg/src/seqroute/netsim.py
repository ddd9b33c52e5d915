"""RTT trace replay, transmission-cost model, and the gateway's RTT estimator."""
from __future__ import annotations

import bisect
import csv
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import EmptyFile, ParseError


@dataclass(frozen=True)
class RttTrace:
    """Timestamped RTT samples replayed as a step function of simulation time."""

    offsets: tuple[float, ...]  # seconds from trace start, strictly increasing
    rtts: tuple[float, ...]  # ms
    trace_id: str = ""

    def __post_init__(self):
        if not self.offsets or len(self.offsets) != len(self.rtts):
            raise ValueError("trace must be non-empty with matched columns")
        if any(b <= a for a, b in zip(self.offsets, self.offsets[1:])):
            raise ValueError("trace offsets must be strictly increasing")
        if any(r <= 0 for r in self.rtts):
            raise ValueError("all rtt samples must be > 0")

    @classmethod
    def constant(cls, rtt_ms: float, trace_id: str = "constant") -> "RttTrace":
        return cls(offsets=(0.0,), rtts=(rtt_ms,), trace_id=trace_id)


@dataclass(frozen=True)
class BandwidthModel:
    mbps: float = 100.0
    bytes_per_token: int = 2

    def __post_init__(self):
        if self.mbps <= 0:
            raise ValueError("mbps must be > 0")
        if self.bytes_per_token < 1:
            raise ValueError("bytes_per_token must be >= 1")


@dataclass(frozen=True)
class TxEstimator:
    """Gateway belief about the current RTT, updated from timestamped round trips."""

    ewma_alpha: float = 1.0
    initial_rtt: float = 50.0  # prior before any observation, ms
    last_rtt: float | None = None
    last_update: float | None = None

    def __post_init__(self):
        if not (0.0 < self.ewma_alpha <= 1.0):
            raise ValueError("ewma_alpha must be in (0, 1]")
        if self.last_rtt is not None and self.last_rtt <= 0:
            raise ValueError("last_rtt must be > 0 when present")


def rtt_at(trace: RttTrace, t: float) -> float:
    """RTT of the latest sample at or before t; clamps at both trace ends."""
    i = bisect.bisect_right(trace.offsets, t) - 1
    return trace.rtts[max(i, 0)]


def observe_roundtrip(est: TxEstimator, measured_rtt: float, now: float) -> TxEstimator:
    if measured_rtt <= 0:
        raise ValueError("measured_rtt must be > 0")
    prev = est.last_rtt if est.last_rtt is not None else measured_rtt
    smoothed = est.ewma_alpha * measured_rtt + (1.0 - est.ewma_alpha) * prev
    return replace(est, last_rtt=smoothed, last_update=now)


def payload_ms(bw: BandwidthModel, n: float, m: float) -> float:
    """Serialization delay of (n+m) tokens at bw; tiny by design at 100 Mbps."""
    return (n + m) * bw.bytes_per_token * 8.0 / (bw.mbps * 1000.0)


def current_tx_estimate(est: TxEstimator, bw: BandwidthModel,
                        n: float, m_hat: float) -> float:
    rtt = est.last_rtt if est.last_rtt is not None else est.initial_rtt
    return rtt + payload_ms(bw, n, m_hat)


def realized_tx(trace: RttTrace, bw: BandwidthModel, t: float,
                n: float, m: float) -> float:
    """Ground-truth transmission cost charged when offloading at time t."""
    return rtt_at(trace, t) + payload_ms(bw, n, m)


_TRACE_PRESETS = {
    # (base rtt ms, swing amplitude ms): cp1 emulates a slow, variable link,
    # cp2 a faster one
    "cp1": (80.0, 40.0),
    "cp2": (30.0, 10.0),
}


def synth_trace(kind: str, duration_s: float = 3600.0, step_s: float = 10.0,
                seed: int = 0, base_rtt: float | None = None,
                amplitude: float | None = None) -> RttTrace:
    """Deterministic synthetic connection profile: slow swing plus jitter."""
    if kind in _TRACE_PRESETS:
        preset_base, preset_amp = _TRACE_PRESETS[kind]
    elif kind == "flat":
        preset_base, preset_amp = 50.0, 0.0
    else:
        raise ValueError(f"unknown trace kind {kind!r}")
    base = base_rtt if base_rtt is not None else preset_base
    amp = amplitude if amplitude is not None else preset_amp
    rng = np.random.default_rng(seed)
    ts = np.arange(0.0, duration_s, step_s)
    swing = amp * np.sin(2.0 * np.pi * ts / max(duration_s / 3.0, 1.0))
    jitter = rng.normal(0.0, amp / 4.0, size=ts.size) if amp > 0 else 0.0
    rtts = np.maximum(base + swing + jitter, 1.0)
    return RttTrace(offsets=tuple(float(t) for t in ts),
                    rtts=tuple(float(r) for r in rtts), trace_id=kind)


def load_trace(path: str | Path, trace_id: str = "") -> RttTrace:
    """Read a trace CSV with header `t_offset_s,rtt_ms`."""
    path = Path(path)
    offsets, rtts = [], []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise EmptyFile(f"{path}: empty trace file")
        if [h.strip() for h in header] != ["t_offset_s", "rtt_ms"]:
            raise ParseError(1, f"{path}: expected header t_offset_s,rtt_ms")
        for rowno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 2:
                raise ParseError(rowno, f"{path}: expected 2 columns, got {len(row)}")
            try:
                offsets.append(float(row[0]))
                rtts.append(float(row[1]))
            except ValueError as exc:
                raise ParseError(rowno, f"{path}: {exc}") from exc
    if not offsets:
        raise EmptyFile(f"{path}: trace has no samples")
    return RttTrace(offsets=tuple(offsets), rtts=tuple(rtts),
                    trace_id=trace_id or path.stem)


def save_trace(trace: RttTrace, path: str | Path) -> None:
    path = Path(path)
    with path.open("w", newline="\n", encoding="utf-8") as fh:
        fh.write("t_offset_s,rtt_ms\n")
        for t, r in zip(trace.offsets, trace.rtts):
            fh.write(f"{t!r},{r!r}\n")
