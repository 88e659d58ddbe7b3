"""Run driver: configuration parsing, scenario runs, CSV snapshots and EOC tables."""
from __future__ import annotations

import argparse
import math
import re
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import ConfigurationError, ConservedField, DryStateError
from .diagnostics import EOC_HEADER, ErrorReport, geostrophic_residual, l1_error, lake_at_rest_residual
from .fv_scheme import SchemeConfig, evolve
from .scenarios import SCENARIOS, make_scenario

SNAPSHOT_HEADER = "x,y,h,u,v,b,h_plus_b"
LIMITER_NAMES = ("minmod", "mc", "none")


class ConfigError(ValueError):
    """Invalid run configuration; ``key`` names the offending entry."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


@dataclass
class RunConfig:
    scenario: str
    nx: int
    ny: int
    cfl: float = 0.5
    order: int = 2
    limiter: str = "minmod"
    t_end: float | None = None
    out: str = "out"
    snapshot_dt: float | None = None
    eps: float | None = None
    f: float | None = None
    g: float | None = None
    convergence: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ConfigError("scenario", f"unknown scenario {self.scenario!r}; choose from {SCENARIOS}")
        if self.nx < 1:
            raise ConfigError("nx", "must be >= 1")
        if self.ny < 1:
            raise ConfigError("ny", "must be >= 1")
        if not 0 < self.cfl <= 1:
            raise ConfigError("cfl", f"must lie in (0, 1], got {self.cfl}")
        if self.order not in (1, 2):
            raise ConfigError("order", f"must be 1 or 2, got {self.order}")
        if self.limiter not in LIMITER_NAMES:
            raise ConfigError("limiter", f"must be one of {LIMITER_NAMES}, got {self.limiter!r}")
        if self.t_end is not None and not self.t_end > 0:
            raise ConfigError("t_end", "must be positive")
        if self.snapshot_dt is not None and not self.snapshot_dt > 0:
            raise ConfigError("snapshot_dt", "must be positive")
        if self.g is not None and not self.g > 0:
            raise ConfigError("g", "must be positive")
        if self.f is not None and self.f < 0:
            raise ConfigError("f", "must be non-negative")
        if self.convergence is not None:
            ladder = self.convergence
            if len(ladder) < 2 or any(b != 2 * a for a, b in zip(ladder[:-1], ladder[1:])):
                raise ConfigError("convergence", "needs at least two resolutions, each doubling the last")

    @property
    def limiter_kind(self) -> str | None:
        return None if self.limiter == "none" else self.limiter

    def overrides(self) -> dict:
        return {k: getattr(self, k) for k in ("eps", "f", "g") if getattr(self, k) is not None}


_FIELD_TYPES = {"scenario": str, "nx": int, "ny": int, "cfl": float, "order": int, "limiter": str,
                "t_end": float, "out": str, "snapshot_dt": float, "eps": float, "f": float,
                "g": float, "convergence": "ladder"}
_DEFAULT_SIZE = 20


def _convert(key: str, raw: str):
    kind = _FIELD_TYPES[key]
    try:
        if kind == "ladder":
            return tuple(int(p) for p in raw.split(",") if p.strip())
        if kind is int:
            val = float(raw)
            if val != int(val):
                raise ValueError
            return int(val)
        return kind(raw)
    except ValueError:
        raise ConfigError(key, f"invalid value {raw!r}") from None


_ASSIGN = re.compile(r"\s*([A-Za-z_][A-Za-z0-9_]*)\s*=\s*([^\s=]+)\s*")


def _pairs(text: str) -> list[tuple[str, str]]:
    """``(key, raw value)`` pairs from ``key = value`` lines or ``key=value`` tokens."""
    pairs = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        pos = 0
        while pos < len(line):
            m = _ASSIGN.match(line, pos)
            if m is None:
                bad = line[pos:].split()[0]
                raise ConfigError(bad.split("=")[0] or "?", f"malformed assignment {line[pos:]!r}")
            pairs.append((m.group(1), m.group(2)))
            pos = m.end()
    return pairs


def parse_config(text: str | None = None, flags: dict | None = None) -> RunConfig:
    """Build a validated :class:`RunConfig` from ``key = value`` text and/or flags.

    Flags override entries of the text.  ``nx`` and ``ny`` default to 20.
    """
    values: dict = {}
    for key, raw in _pairs(text or ""):
        if key not in _FIELD_TYPES:
            raise ConfigError(key, "unknown key")
        values[key] = _convert(key, raw)
    for key, val in (flags or {}).items():
        if val is None:
            continue
        if key not in _FIELD_TYPES:
            raise ConfigError(key, "unknown key")
        values[key] = _convert(key, val) if isinstance(val, str) else val
    if "scenario" not in values:
        raise ConfigError("scenario", "missing")
    values.setdefault("nx", _DEFAULT_SIZE)
    values.setdefault("ny", _DEFAULT_SIZE)
    return RunConfig(**values)


# --------------------------------------------------------------------------
# snapshots
# --------------------------------------------------------------------------

def snapshot_table(fld: ConservedField, bathymetry: np.ndarray) -> np.ndarray:
    """Rows ``x, y, h, u, v, b, h + b`` for every cell, row-major (y outer, x inner)."""
    grid = fld.grid
    b = bathymetry[grid.interior] if bathymetry.shape == grid.shape else bathymetry
    h, u, v = fld.primitive(interior_only=True)
    x, y = grid.cell_centers()
    X, Y = np.meshgrid(x, y, indexing="ij")
    cols = [X, Y, h, u, v, b, h + b]
    return np.stack([c.T.ravel() for c in cols], axis=1)


def write_table(rows: np.ndarray, path) -> Path:
    path = Path(path)
    with path.open("w", newline="\n") as fh:
        fh.write(SNAPSHOT_HEADER + "\n")
        for row in rows:
            fh.write(",".join(f"{val:.17g}" for val in row) + "\n")
    return path


def write_snapshot(fld: ConservedField, bathymetry: np.ndarray, path) -> Path:
    """Write a plain-text CSV snapshot with 17 significant digits."""
    return write_table(snapshot_table(fld, bathymetry), path)


def read_snapshot(path) -> np.ndarray:
    """Read a snapshot back as an ``(ncells, 7)`` array."""
    path = Path(path)
    with path.open() as fh:
        header = fh.readline().strip()
        if header != SNAPSHOT_HEADER:
            raise ValueError(f"{path}: unexpected header {header!r}")
        rows = [[float(v) for v in line.split(",")] for line in fh if line.strip()]
    return np.array(rows, dtype=float).reshape(-1, 7)


# --------------------------------------------------------------------------
# runs
# --------------------------------------------------------------------------

@dataclass
class RunResult:
    config: RunConfig
    report: ErrorReport | None = None
    snapshots: list[Path] = field(default_factory=list)
    metrics: dict[str, float] = field(default_factory=dict)
    steps: int = 0


def _max_dvdx(fld: ConservedField) -> float:
    v = fld.primitive(interior_only=True)[2]
    return float(np.max(np.abs(np.diff(v, axis=0)))) / fld.grid.hbar if v.shape[0] > 1 else 0.0


def _single_run(cfg: RunConfig, out: Path) -> RunResult:
    sc = make_scenario(cfg.scenario, **cfg.overrides())
    t_end = cfg.t_end if cfg.t_end is not None else sc.t_end
    fld = sc.initial_field(cfg.nx, cfg.ny)
    b = sc.bathymetry_cells(fld.grid)
    scheme = SchemeConfig(sc.params, b, sc.bc, cfg.order, cfg.limiter_kind, cfg.cfl)
    res = RunResult(cfg)
    init = fld
    res.snapshots.append(write_snapshot(fld, b, out / "snapshot_0000.csv"))
    stops = []
    if cfg.snapshot_dt:
        n = int(math.floor(t_end / cfg.snapshot_dt + 1e-9))
        stops = [k * cfg.snapshot_dt for k in range(1, n + 1) if k * cfg.snapshot_dt < t_end - 1e-12]
    stops.append(t_end)
    for k, t in enumerate(stops, start=1):
        fld, recs = evolve(fld, scheme, t)
        res.steps += len(recs)
        res.snapshots.append(write_snapshot(fld, b, out / f"snapshot_{k:04d}.csv"))
    m = res.metrics
    m["t_end"] = fld.time
    m["steps"] = res.steps
    h0 = init.interior()[0]
    m["mass_drift"] = abs(float(np.sum(fld.interior()[0]) - np.sum(h0))) / float(np.sum(h0))
    m["l1_change_h"] = float(np.sum(np.abs(fld.interior()[0] - h0))) * fld.grid.hbar ** 2
    if cfg.scenario.startswith("lake") and not sc.eps:
        r = lake_at_rest_residual(fld, b)
        m["lake_residual_eta"], m["lake_residual_hu"], m["lake_residual_hv"] = r
    if sc.params.f > 0:
        m["geostrophic_residual"] = geostrophic_residual(fld, b, sc.params)
        g0 = _max_dvdx(init)
        if g0 > 0:
            m["dvdx_growth"] = _max_dvdx(fld) / g0
    return res


def _convergence_run(cfg: RunConfig, out: Path) -> RunResult:
    sc = make_scenario(cfg.scenario, **cfg.overrides())
    t_end = cfg.t_end if cfg.t_end is not None else sc.t_end
    start = time.perf_counter()
    finals = {}
    steps = 0
    for n in cfg.convergence:
        fld = sc.initial_field(n, n)
        b = sc.bathymetry_cells(fld.grid)
        scheme = SchemeConfig(sc.params, b, sc.bc, cfg.order, cfg.limiter_kind, cfg.cfl)
        finals[n], recs = evolve(fld, scheme, t_end)
        steps += len(recs)
    ladder = list(cfg.convergence)
    errs = {"h": [], "hu": [], "hv": []}
    for n in ladder[:-1]:
        e = l1_error(finals[n], finals[2 * n])
        for k in errs:
            errs[k].append(e[k])
    report = ErrorReport(ladder[:-1], errs, runtime=time.perf_counter() - start)
    (out / "eoc.csv").write_text(report.to_csv())
    res = RunResult(cfg, report=report, steps=steps)
    res.metrics["runtime"] = report.runtime
    return res


def run(cfg: RunConfig) -> RunResult:
    """Execute a configured run, writing snapshots or the EOC table under ``cfg.out``.

    A ``status.txt`` file records ``complete`` or the failure, so partial
    output is recognisable.
    """
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    status = out / "status.txt"
    status.write_text("running\n")
    try:
        res = _convergence_run(cfg, out) if cfg.convergence else _single_run(cfg, out)
    except Exception as exc:
        status.write_text(f"failed (partial output): {exc}\n")
        raise
    lines = [f"{k},{v:.17g}" for k, v in res.metrics.items()]
    (out / "metrics.csv").write_text("key,value\n" + "\n".join(lines) + "\n")
    status.write_text("complete\n")
    return res


# --------------------------------------------------------------------------
# command line
# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fveg", description="Well-balanced FVEG shallow water solver")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", help="run a benchmark scenario")
    p.add_argument("--config", help="file of key = value lines; flags override it")
    p.add_argument("--scenario", choices=SCENARIOS)
    p.add_argument("--nx", type=int)
    p.add_argument("--ny", type=int)
    p.add_argument("--cfl", type=float)
    p.add_argument("--order", type=int)
    p.add_argument("--limiter", choices=LIMITER_NAMES)
    p.add_argument("--t-end", dest="t_end", type=float)
    p.add_argument("--out")
    p.add_argument("--eps", type=float)
    p.add_argument("--f", type=float)
    p.add_argument("--g", type=float)
    p.add_argument("--snapshot-dt", dest="snapshot_dt", type=float)
    p.add_argument("--convergence", help="comma-separated resolution ladder, e.g. 25,50,100,200")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    flags = {k: v for k, v in vars(args).items() if k not in ("command", "config")}
    try:
        text = Path(args.config).read_text() if args.config else None
        cfg = parse_config(text, flags)
        res = run(cfg)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (DryStateError, ConfigurationError, ValueError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return 1
    if res.report is not None:
        sys.stdout.write(res.report.to_csv())
    for k, v in res.metrics.items():
        print(f"{k},{v:.17g}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
