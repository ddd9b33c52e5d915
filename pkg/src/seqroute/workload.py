"""Corpus ingestion, synthetic workload generation, and latency realization."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import EmptyCorpus, EmptyFile, ParseError
from .models import DeviceProfile, LatencySample, exec_time


@dataclass(frozen=True)
class Request:
    id: int
    n: int
    m_true: int

    def __post_init__(self):
        if self.n < 1 or self.m_true < 1:
            raise ValueError("request lengths must be >= 1")


@dataclass(frozen=True)
class Corpus:
    requests: tuple[Request, ...]
    language_pair: str = ""

    @property
    def m_avg(self) -> float:
        return sum(r.m_true for r in self.requests) / len(self.requests)


@dataclass(frozen=True)
class DeviceOracle:
    """Hidden ground-truth device: realized times scatter around its plane."""

    true_profile: DeviceProfile
    noise_sd: float = 0.0  # ms, Gaussian, floored at 5% of the noiseless time
    seed: int = 0

    def __post_init__(self):
        if self.noise_sd < 0:
            raise ValueError("noise_sd must be >= 0")


@dataclass(frozen=True)
class SynthSpec:
    """Synthetic corpus: draw n, then m_true = round(gamma*n + delta + noise)."""

    count: int
    n_dist: tuple  # ("uniform", lo, hi) or ("lognormal", mu, sigma)
    gamma: float
    delta: float
    length_noise_sd: float = 0.0  # tokens
    max_len: int = 100  # lognormal truncation bound
    seed: int = 0

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("count must be >= 1")
        if self.n_dist[0] not in ("uniform", "lognormal"):
            raise ValueError(f"unknown n distribution {self.n_dist[0]!r}")


def synth_corpus(spec: SynthSpec, language_pair: str = "synthetic") -> Corpus:
    rng = np.random.default_rng(spec.seed)
    kind = spec.n_dist[0]
    if kind == "uniform":
        lo, hi = int(spec.n_dist[1]), int(spec.n_dist[2])
        ns = rng.integers(lo, hi + 1, size=spec.count)
    else:
        mu, sigma = float(spec.n_dist[1]), float(spec.n_dist[2])
        ns = np.clip(np.rint(rng.lognormal(mu, sigma, size=spec.count)),
                     1, spec.max_len).astype(int)
    noise = (rng.normal(0.0, spec.length_noise_sd, size=spec.count)
             if spec.length_noise_sd > 0 else np.zeros(spec.count))
    ms = np.maximum(np.rint(spec.gamma * ns + spec.delta + noise), 1).astype(int)
    requests = tuple(Request(id=i, n=int(n), m_true=int(m))
                     for i, (n, m) in enumerate(zip(ns, ms)))
    return Corpus(requests=requests, language_pair=language_pair)


def realize_latency(oracle: DeviceOracle, req: Request) -> float:
    """Realized execution time in ms; deterministic given (oracle.seed, req.id)."""
    base = exec_time(oracle.true_profile, req.n, req.m_true)
    if oracle.noise_sd == 0.0:
        return base
    rng = np.random.default_rng([oracle.seed, req.id])
    noise = rng.normal(0.0, oracle.noise_sd)
    return max(base + noise, 0.05 * base)


def load_corpus(path: str | Path, language_pair: str = "") -> Corpus:
    """Read a length-pair TSV with header `n\\tm_real` into a request corpus."""
    path = Path(path)
    requests = []
    with path.open(encoding="utf-8") as fh:
        header = fh.readline()
        if not header:
            raise EmptyFile(f"{path}: empty file")
        if header.rstrip("\n") != "n\tm_real":
            raise ParseError(1, f"{path}: expected header 'n\\tm_real'")
        for rowno, line in enumerate(fh, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            cols = line.split("\t")
            if len(cols) != 2:
                raise ParseError(rowno, f"{path}: expected 2 columns, got {len(cols)}")
            try:
                n, m = int(cols[0]), int(cols[1])
            except ValueError:
                raise ParseError(rowno, f"{path}: non-integer length {cols!r}")
            try:
                requests.append(Request(id=len(requests), n=n, m_true=m))
            except ValueError as exc:
                raise ParseError(rowno, f"{path}: {exc}") from exc
    if not requests:
        raise EmptyCorpus(f"{path}: no data rows")
    return Corpus(requests=tuple(requests),
                  language_pair=language_pair or path.stem)


def save_corpus(corpus: Corpus, path: str | Path) -> None:
    path = Path(path)
    with path.open("w", newline="\n", encoding="utf-8") as fh:
        fh.write("n\tm_real\n")
        for r in corpus.requests:
            fh.write(f"{r.n}\t{r.m_true}\n")


def load_measurements(path: str | Path) -> list[LatencySample]:
    """Read a latency-sample CSV with header `n,m,t_ms`."""
    path = Path(path)
    samples = []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise EmptyFile(f"{path}: empty file")
        if [h.strip() for h in header] != ["n", "m", "t_ms"]:
            raise ParseError(1, f"{path}: expected header n,m,t_ms")
        for rowno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 3:
                raise ParseError(rowno, f"{path}: expected 3 columns, got {len(row)}")
            try:
                n, m, t = int(row[0]), int(row[1]), float(row[2])
            except ValueError:
                raise ParseError(rowno, f"{path}: malformed row {row!r}")
            try:
                samples.append(LatencySample(n=n, m=m, t=t))
            except ValueError as exc:
                raise ParseError(rowno, f"{path}: {exc}") from exc
    if not samples:
        raise EmptyFile(f"{path}: no data rows")
    return samples


def save_measurements(samples: list[LatencySample], path: str | Path) -> None:
    path = Path(path)
    with path.open("w", newline="\n", encoding="utf-8") as fh:
        fh.write("n,m,t_ms\n")
        for s in samples:
            fh.write(f"{s.n},{s.m},{s.t!r}\n")
