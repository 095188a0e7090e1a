"""Seeded experiment drivers and file emission.

Every driver is a pure function of (config, seed): per-sample RNG streams are
derived as seed xor sample index, so batching or parallel fan-out cannot
change the output.  The growth and limsup drivers are qualitative by design;
the asymptotic statements they probe are about almost-every theta and desk
scale can only show majority-of-samples behavior.
"""

from __future__ import annotations

import dataclasses
import json
import math
import random
import subprocess
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.integrate import quad

from . import __version__
from .cf import (
    CFExpansion,
    cf_value,
    format_theta_spec,
    gap_trajectory,
    parse_theta_spec,
    sample_theta,
)
from .orbit import discrepancy_profile, encode_orbit
from .substitution import (
    A,
    build_rule,
    lengths_by_level,
    stats_by_level,
)

__all__ = [
    "EmitError",
    "ExperimentConfig",
    "IteratedLogFamily",
    "GrowthRecord",
    "TrimmedRecord",
    "BoundedPQRecord",
    "LimsupRecord",
    "run_growth_experiment",
    "run_trimmed_sums",
    "run_bounded_pq_check",
    "run_limsup_probe",
    "emit",
    "read_csv",
    "tool_version",
]


class EmitError(RuntimeError):
    """Refusing to write an output file (empty table, bad format, I/O)."""


def tool_version() -> str:
    """Package version, with the git revision appended when available."""
    root = Path(__file__).resolve().parents[2]
    try:
        described = subprocess.run(
            ["git", "-C", str(root), "describe", "--always", "--dirty"],
            capture_output=True,
            text=True,
            timeout=5,
        )
        if described.returncode == 0 and described.stdout.strip():
            return f"{__version__}+g{described.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


@dataclass(frozen=True)
class ExperimentConfig:
    """Shared knob set; drivers read the fields they need and echo them all."""

    theta_spec: str | None = None
    depth: int = 30
    orbit_length: int = 1_000_000
    samples: int = 30
    seed: int = 0
    k: int = 2
    epsilon: float = 0.0

    def to_meta(self) -> dict:
        meta = {f.name: getattr(self, f.name) for f in dataclasses.fields(self)}
        meta = {k: v for k, v in meta.items() if v is not None}
        meta["version"] = tool_version()
        return meta


def _theta_for(cfg: ExperimentConfig, rng: random.Random, min_quotients: int) -> CFExpansion:
    if cfg.theta_spec is not None:
        return parse_theta_spec(cfg.theta_spec)
    bits = max(192, int(min_quotients * 1.72) + 64)
    return sample_theta(rng, bits=bits, min_quotients=min_quotients)


# ---------------------------------------------------------------------------
# the iterated-logarithm threshold family


@dataclass(frozen=True)
class IteratedLogFamily:
    """f(x) = x log x ... log^(k-1) x, the last factor raised to 1 + epsilon.

    epsilon = 0 makes the reciprocal series divergent, epsilon > 0 summable.
    The cutoff is the smallest argument at which every iterated log exceeds
    one; f refuses arguments at or below it.
    """

    k: int
    epsilon: float = 0.0

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("need k >= 1")
        if self.epsilon < 0:
            raise ValueError("epsilon must be nonnegative")
        if self.k == 1 and self.epsilon:
            raise ValueError("k = 1 has no log factor to raise; use k >= 2")

    @property
    def cutoff(self) -> float:
        c = 1.0
        for _ in range(self.k - 1):
            c = math.exp(c)
        return c

    def f(self, x: float) -> float:
        if x <= self.cutoff:
            raise ValueError(f"f undefined at {x} (cutoff {self.cutoff:.6g})")
        val = x
        t = x
        for j in range(1, self.k):
            t = math.log(t)
            val *= t ** (1.0 + self.epsilon) if j == self.k - 1 else t
        return val

    def F(self, t: float) -> float:
        """Cumulative integral of f from the cutoff, adaptive to 1e-8."""
        if t <= self.cutoff:
            return 0.0
        val, _ = quad(self.f, self.cutoff * (1 + 1e-12), t, epsrel=1e-8, limit=200)
        return val


# ---------------------------------------------------------------------------
# growth experiment (per-level rho against the threshold family)


@dataclass(frozen=True)
class GrowthRecord:
    n: int
    rho_omega: int
    halfsum: int
    f_of_n: float
    F_of_n: float
    len_omega: int
    log_len: float


def run_growth_experiment(
    cfg: ExperimentConfig, family: IteratedLogFamily
) -> list[GrowthRecord]:
    """Per-level spread, half-sum, lengths, and the family values at n.

    Levels below the family cutoff report nan for f and F.  The theta comes
    from cfg.theta_spec, or is sampled from cfg.seed when absent.
    """
    rng = random.Random(cfg.seed)
    theta = _theta_for(cfg, rng, min_quotients=2 * cfg.depth + 8)
    traj = gap_trajectory(theta, cfg.depth)
    rules = [build_rule(step.cf) for step in traj.steps[: cfg.depth]]
    levels = stats_by_level(rules)
    lens = lengths_by_level(rules)
    half = 0
    records = []
    for n in range(1, cfg.depth + 1):
        half += traj.steps[n - 1].e // 2
        try:
            f_n = family.f(float(n))
            big_f_n = family.F(float(n))
        except ValueError:
            f_n, big_f_n = math.nan, math.nan
        records.append(
            GrowthRecord(
                n=n,
                rho_omega=levels[n][A].rho,
                halfsum=half,
                f_of_n=f_n,
                F_of_n=big_f_n,
                len_omega=lens[n][0],
                log_len=math.log(lens[n][0]),
            )
        )
    return records


# ---------------------------------------------------------------------------
# trimmed sums


@dataclass(frozen=True)
class TrimmedRecord:
    sample_id: int
    n: int
    halfsum: int
    halfmax: int
    ratio: float


def run_trimmed_sums(
    cfg: ExperimentConfig, checkpoints: Sequence[int] = (25, 50, 100, 200)
) -> tuple[list[TrimmedRecord], dict]:
    """Half-sums with the single largest term removed, scaled by n log n."""
    if cfg.samples < 30:
        raise ValueError("need at least 30 samples")
    if cfg.depth < 200:
        raise ValueError("need depth >= 200")
    marks = sorted(set(c for c in checkpoints if c <= cfg.depth))
    records = []
    for sid in range(cfg.samples):
        rng = random.Random(cfg.seed ^ sid)
        theta = _theta_for(cfg, rng, min_quotients=2 * cfg.depth + 8)
        traj = gap_trajectory(theta, cfg.depth)
        half = 0
        halfmax = 0
        marks_left = list(marks)
        for i, step in enumerate(traj.steps[: cfg.depth], start=1):
            half += step.e // 2
            halfmax = max(halfmax, step.e // 2)
            if marks_left and i == marks_left[0]:
                marks_left.pop(0)
                records.append(
                    TrimmedRecord(
                        sample_id=sid,
                        n=i,
                        halfsum=half,
                        halfmax=halfmax,
                        ratio=(half - halfmax) / (i * math.log(i)),
                    )
                )
    medians = {
        n: float(np.median([r.ratio for r in records if r.n == n])) for n in marks
    }
    return records, {"median_ratio": medians}


# ---------------------------------------------------------------------------
# bounded-partial-quotient log growth


@dataclass(frozen=True)
class BoundedPQRecord:
    N: int
    rho: int
    log_N: float
    ratio: float


def run_bounded_pq_check(
    cfg: ExperimentConfig, x0: Fraction = Fraction(0)
) -> tuple[list[BoundedPQRecord], dict]:
    """Direct-orbit spread over log N for a bounded-quotient rotation.

    Defaults to the all-twos expansion when cfg carries no theta.  Checkpoints
    run through the decades up to cfg.orbit_length.
    """
    spec = cfg.theta_spec if cfg.theta_spec is not None else "cfper:[][2]"
    theta = parse_theta_spec(spec)
    if theta.is_finite:
        raise ValueError("needs an eventually periodic expansion")
    value = cf_value(theta)
    if not value < Fraction(1, 2):
        raise ValueError("orbit driver needs theta < 1/2")
    marks = []
    stop = max(1000, cfg.orbit_length)
    mark = 1000
    while mark <= stop:
        marks.append(mark)
        mark *= 10
    enc = encode_orbit(x0, value, marks[-1])
    prof = discrepancy_profile(enc)
    records = [
        BoundedPQRecord(
            N=N,
            rho=prof.rho_at(N),
            log_N=math.log(N),
            ratio=prof.rho_at(N) / math.log(N),
        )
        for N in marks
    ]
    ratios = [r.ratio for r in records]
    return records, {
        "theta_spec": format_theta_spec(theta),
        "ratio_band": (min(ratios), max(ratios)),
        "monotone": bool(
            np.all(np.diff([prof.rho_at(N) for N in marks]) >= 0)
        ),
    }


# ---------------------------------------------------------------------------
# limsup probe


@dataclass(frozen=True)
class LimsupRecord:
    sample_id: int
    best_n: int
    best_ratio: float
    increased_final_third: bool


def run_limsup_probe(cfg: ExperimentConfig) -> tuple[list[LimsupRecord], dict]:
    """Running max of rho over n log n per sample; does it still climb late?

    The level index stands in for log of the orbit length (they are
    comparable by the length cocycle), so the scaled spread is
    rho(level n) / (n log n).
    """
    records = []
    for sid in range(cfg.samples):
        rng = random.Random(cfg.seed ^ sid)
        theta = _theta_for(cfg, rng, min_quotients=2 * cfg.depth + 8)
        traj = gap_trajectory(theta, cfg.depth)
        rules = [build_rule(step.cf) for step in traj.steps[: cfg.depth]]
        levels = stats_by_level(rules)
        best = -math.inf
        best_n = 0
        for n in range(2, cfg.depth + 1):
            ratio = levels[n][A].rho / (n * math.log(n))
            if ratio > best:
                best, best_n = ratio, n
        records.append(
            LimsupRecord(
                sample_id=sid,
                best_n=best_n,
                best_ratio=best,
                increased_final_third=best_n > (2 * cfg.depth) // 3,
            )
        )
    frac = sum(r.increased_final_third for r in records) / len(records)
    return records, {"fraction_still_climbing": frac}


# ---------------------------------------------------------------------------
# emission

_FORMATS = ("csv", "json", "plot")


def _cell(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _json_value(value):
    # big integers do not survive 64-bit consumers; ship them as strings
    if isinstance(value, bool):
        return value
    if isinstance(value, int):
        return str(value)
    return value


def emit(
    records: Sequence,
    fmt: str,
    path: str | Path,
    meta: dict | None = None,
    plot_fields: tuple[str, str] | None = None,
) -> Path:
    """Write records to path as csv, json, or two-column plot data.

    CSV puts the echoed meta in '#'-prefixed comment lines, then a header
    naming the record fields.  Identical (records, meta) yield identical
    bytes.  An empty table is an error and writes nothing.
    """
    if fmt not in _FORMATS:
        raise EmitError(f"unknown format {fmt!r}; choose from {_FORMATS}")
    if not records:
        raise EmitError("refusing to write an empty table")
    path = Path(path)
    names = [f.name for f in dataclasses.fields(records[0])]
    meta = dict(meta or {})
    meta.setdefault("version", tool_version())
    try:
        if fmt == "csv":
            lines = [f"# {k}: {_cell(meta[k])}" for k in sorted(meta)]
            lines.append(",".join(names))
            for rec in records:
                lines.append(",".join(_cell(getattr(rec, nm)) for nm in names))
            path.write_text("\n".join(lines) + "\n")
        elif fmt == "json":
            payload = {
                "meta": {k: _cell(meta[k]) for k in sorted(meta)},
                "records": [
                    {nm: _json_value(getattr(rec, nm)) for nm in names}
                    for rec in records
                ],
            }
            path.write_text(json.dumps(payload, indent=2) + "\n")
        else:
            xf, yf = plot_fields if plot_fields is not None else names[:2]
            lines = [
                f"{_cell(getattr(rec, xf))} {_cell(getattr(rec, yf))}"
                for rec in records
            ]
            path.write_text("\n".join(lines) + "\n")
    except OSError as exc:
        raise EmitError(f"cannot write {path}: {exc}") from exc
    return path


def read_csv(path: str | Path) -> tuple[dict, list[dict]]:
    """Read an emitted CSV back: ('# k: v' meta, rows as string dicts)."""
    meta: dict[str, str] = {}
    rows: list[dict] = []
    header: list[str] | None = None
    for line in Path(path).read_text().splitlines():
        if not line.strip():
            continue
        if line.startswith("#"):
            key, _, val = line[1:].partition(":")
            meta[key.strip()] = val.strip()
            continue
        cells = line.split(",")
        if header is None:
            header = cells
            continue
        rows.append(dict(zip(header, cells)))
    if header is None:
        raise EmitError(f"{path} has no header row")
    return meta, rows
