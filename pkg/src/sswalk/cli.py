"""
Command-line front end.

Every subcommand resolves an :class:`ExperimentConfig` from an optional JSON
file plus flags (flags win), runs the matching pipeline and writes CSV or
NDJSON whose first line records the resolved config and package version.

Exit status: 0 on success, 2 when a verification residual exceeds tolerance,
1 on usage or configuration errors.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import re
import sys
from dataclasses import dataclass, fields
from typing import Callable

import numpy as np

from . import __version__
from . import core, decomposition, operators, spectral, toposim
from ._parallel import resolve_threads
from .output import atomic_write, render_csv, render_ndjson

COMMANDS = ("verify", "spectrum", "walk", "boundary", "edge2d", "phasediagram")
FORMATS = ("csv", "ndjson")
ANGLE_KEYS = ("theta1", "theta2", "theta2_right")
POSITIVE_INT_KEYS = ("n", "n2", "steps", "kgrid", "grid", "threads")

EXIT_OK, EXIT_USAGE, EXIT_RESIDUAL = 0, 1, 2


class ConfigError(ValueError):
    """Bad or incomplete configuration; maps to exit status 1."""


_ANGLE_RE = re.compile(r"^([+-]?)(\d*\.?\d*)\s*\*?\s*pi(?:\s*/\s*(\d*\.?\d+))?$")


def parse_angle(value, key: str = "angle") -> float:
    """Radians, or a pi-fraction such as ``pi/4``, ``-3pi/4`` or ``2*pi/5``."""
    if isinstance(value, bool):
        raise ConfigError(f"{key}: cannot parse angle {value!r}")
    if isinstance(value, (int, float)):
        x = float(value)
    else:
        text = str(value).strip().lower()
        m = _ANGLE_RE.match(text)
        try:
            if m:
                sign, num, den = m.groups()
                x = (float(num) if num else 1.0) * math.pi / (float(den) if den else 1.0)
                x = -x if sign == "-" else x
            else:
                x = float(text)
        except ValueError:
            raise ConfigError(f"{key}: cannot parse angle {value!r}") from None
    if not math.isfinite(x):
        raise ConfigError(f"{key}: angle must be finite, got {value!r}")
    return operators.normalize_angle(x)


@dataclass
class ExperimentConfig:
    command: str
    claim: str = "1d-decomposition"
    theta1: float | None = None
    theta2: float | None = None
    theta2_right: float | None = None
    n: int | None = None
    n2: int | None = None
    steps: int | None = None
    kgrid: int = 256
    grid: int | None = None
    dims: int = 1
    tolerance: float = decomposition.DEFAULT_TOL
    window: int = toposim.WINDOW
    boundary: int | None = None
    smoothing: float = 0.0
    start: int | None = None
    start2: int | None = None
    eps_e: float = toposim.EPS_E
    p_min: float = toposim.P_MIN
    init: str = "basis"
    seed: int = 0
    threads: int | None = None
    out: str | None = None
    format: str | None = None

    def __post_init__(self) -> None:
        if self.command not in COMMANDS:
            raise ConfigError(f"command: unknown command {self.command!r}; choose from {COMMANDS}")
        for key in ANGLE_KEYS:
            v = getattr(self, key)
            if v is not None:
                setattr(self, key, parse_angle(v, key))
        for key in POSITIVE_INT_KEYS:
            v = getattr(self, key)
            if v is not None:
                setattr(self, key, _as_int(key, v))
                if getattr(self, key) < 1:
                    raise ConfigError(f"{key}: must be positive, got {v!r}")
        for key in ("boundary", "start", "start2", "seed", "window", "dims"):
            v = getattr(self, key)
            if v is not None:
                setattr(self, key, _as_int(key, v))
        if self.seed < 0:
            raise ConfigError(f"seed: must be non-negative, got {self.seed}")
        if self.window < 0:
            raise ConfigError(f"window: must be non-negative, got {self.window}")
        if self.dims not in (1, 2):
            raise ConfigError(f"dims: must be 1 or 2, got {self.dims}")
        for key in ("tolerance", "smoothing", "eps_e", "p_min"):
            v = _as_float(key, getattr(self, key))
            if v < 0:
                raise ConfigError(f"{key}: must be non-negative, got {v!r}")
            setattr(self, key, v)
        if self.format is not None and self.format not in FORMATS:
            raise ConfigError(f"format: must be one of {FORMATS}, got {self.format!r}")
        if self.init not in ("basis", "random", "mode"):
            raise ConfigError(f"init: must be basis, random or mode, got {self.init!r}")
        if self.claim not in decomposition.CLAIMS:
            raise ConfigError(f"claim: unknown claim {self.claim!r}; choose from {sorted(decomposition.CLAIMS)}")

    @classmethod
    def from_dict(cls, data: dict) -> ExperimentConfig:
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "command" not in data:
            raise ConfigError("command: missing")
        return cls(**data)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> ExperimentConfig:
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed config: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(data)

    def require(self, *keys: str) -> None:
        missing = [k for k in keys if getattr(self, k) is None]
        if missing:
            flags = ", ".join("--" + k.replace("_", "-") for k in missing)
            raise ConfigError(f"{self.command} requires {flags}")

    @property
    def output_format(self) -> str:
        return self.format or ("ndjson" if self.command == "verify" else "csv")


def _as_int(key, v) -> int:
    if isinstance(v, bool):
        raise ConfigError(f"{key}: expected an integer, got {v!r}")
    try:
        f = float(v)
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: expected an integer, got {v!r}") from None
    if not f.is_integer():
        raise ConfigError(f"{key}: expected an integer, got {v!r}")
    return int(f)


def _as_float(key, v) -> float:
    try:
        return float(v)
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: expected a number, got {v!r}") from None


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sswalk", description=__doc__.strip().splitlines()[0])
    parser.add_argument("--version", action="version", version=f"sswalk {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    common = _Parser(add_help=False)
    S = argparse.SUPPRESS
    common.add_argument("--config", default=S, help="JSON config file; flags override its values")
    common.add_argument("--out", default=S, help="output path (default: stdout)")
    common.add_argument("--format", default=S, choices=FORMATS)
    common.add_argument("--threads", default=S, type=int, help="worker threads (env SSWALK_THREADS)")
    common.add_argument("--seed", default=S, type=int)
    common.add_argument("--theta1", default=S, help="radians or pi-fraction, e.g. pi/4")
    common.add_argument("--theta2", default=S, help="second coin angle (left zone for profiles)")
    common.add_argument("--theta2-right", dest="theta2_right", default=S, help="right-zone angle; omit for a uniform coin")
    common.add_argument("--n", default=S, type=int, help="sites on axis 1")
    common.add_argument("--n2", default=S, type=int, help="sites on axis 2")
    common.add_argument("--steps", default=S, type=int)
    common.add_argument("--kgrid", default=S, type=int, help="momentum samples per axis")
    common.add_argument("--grid", default=S, type=int, help="angle samples per axis for sweeps")
    common.add_argument("--dims", default=S, type=int, choices=(1, 2))
    common.add_argument("--tolerance", default=S, type=float)
    common.add_argument("--window", default=S, type=int, help="boundary window half-width in sites")
    common.add_argument("--boundary", default=S, type=int, help="first site of the right zone")
    common.add_argument("--smoothing", default=S, type=float, help="ramp width in sites")
    common.add_argument("--start", default=S, type=int, help="initial site on axis 1")
    common.add_argument("--start2", default=S, type=int, help="initial site on axis 2")
    common.add_argument("--eps-e", dest="eps_e", default=S, type=float)
    common.add_argument("--p-min", dest="p_min", default=S, type=float)
    common.add_argument("--init", default=S, choices=("basis", "random", "mode"))
    common.add_argument("--claim", default=S, choices=sorted(decomposition.CLAIMS))
    helps = {
        "verify": "check an operator identity on a lattice",
        "spectrum": "tabulate the split-step dispersion and Bloch vector",
        "walk": "evolve a walker on a ring",
        "boundary": "bound-mode spectrum of a two-zone ring",
        "edge2d": "edge-state dynamics on a torus with an axis-1 interface",
        "phasediagram": "gaps and winding number over a (theta1, theta2) grid",
    }
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return parser


def _join_negative_angles(argv) -> list[str]:
    """Rewrite ``--theta1 -pi/2`` as ``--theta1=-pi/2`` so argparse keeps the value."""
    flags = {"--" + k.replace("_", "-") for k in ANGLE_KEYS}
    out, it = [], iter(argv)
    for tok in it:
        if tok in flags:
            nxt = next(it, None)
            if nxt is None:
                out.append(tok)
            else:
                out.append(f"{tok}={nxt}")
        else:
            out.append(tok)
    return out


def parse_config(argv) -> ExperimentConfig:
    ns = vars(build_parser().parse_args(_join_negative_angles(list(argv))))
    if ns.get("command") is None:
        raise ConfigError("a subcommand is required: " + ", ".join(COMMANDS))
    data = {}
    path = ns.pop("config", None)
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                file_cfg = ExperimentConfig.from_json(fh.read())
        except OSError as exc:
            raise ConfigError(f"config: cannot read {path!r}: {exc.strerror}") from None
        data = file_cfg.to_dict()
    data.update(ns)
    return ExperimentConfig.from_dict(data)


# -- pipelines --------------------------------------------------------------


@dataclass
class Result:
    records: list[dict]
    columns: tuple[str, ...]
    summary: str
    status: int = EXIT_OK


def _profile(cfg: ExperimentConfig, n: int) -> operators.CoinProfile:
    if cfg.theta2_right is None:
        return operators.CoinProfile.uniform(n, cfg.theta2)
    return operators.CoinProfile.two_zone(n, cfg.theta2, cfg.theta2_right, cfg.boundary, cfg.smoothing)


def run_verify(cfg: ExperimentConfig) -> Result:
    cfg.require("n")
    if cfg.grid is None:
        cfg.require("theta1")
        points = [(cfg.theta1, cfg.theta2 or 0.0)]
    else:
        g = decomposition.angle_grid(cfg.grid)
        points = [(float(a), float(b)) for a in g for b in g]
    try:
        reports = decomposition.verify_grid(cfg.claim, points, cfg.n, cfg.n2, cfg.tolerance, cfg.threads)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    records = [r.to_record() for r in reports]
    worst = max(r.residual for r in reports)
    failed = sum(not r.passed for r in reports)
    common = decomposition.common_forms(reports)
    summary = (
        f"verify {cfg.claim}: {len(reports) - failed}/{len(reports)} points matched, "
        f"max residual {worst:.3e}, common form {common[0] if common else None!r}"
    )
    cols = ("claim_id", "theta1", "theta2", "N", "N2", "matched_form", "residual", "tolerance")
    return Result(records, cols, summary, EXIT_RESIDUAL if failed else EXIT_OK)


def run_spectrum(cfg: ExperimentConfig) -> Result:
    cfg.require("theta1", "theta2")
    if cfg.dims == 1:
        curve = spectral.dispersion_curve(cfg.theta1, cfg.theta2, cfg.kgrid, cfg.threads)
        cols = ("theta1", "theta2", "k", "E", "n1", "n2", "n3")
    else:
        curve = spectral.dispersion_surface(cfg.theta1, cfg.theta2, cfg.kgrid, cfg.threads)
        cols = ("theta1", "theta2", "k", "ky", "E", "n1", "n2", "n3")
    records = list(curve.rows())
    E = np.array([r["E"] for r in records])
    closings = int(sum(math.isnan(r["n1"]) for r in records))
    summary = (
        f"spectrum dims={cfg.dims}: {len(records)} k-points, E in [{E.min():.6f}, {E.max():.6f}], "
        f"{closings} gap-closing points"
    )
    return Result(records, cols, summary)


def _ring_state(cfg: ExperimentConfig, g: core.LatticeGeometry, site: int) -> core.WalkerState:
    if cfg.init == "random":
        rng = np.random.default_rng(cfg.seed)
        return core.make_basis_state(g, site, rng.normal(size=2) + 1j * rng.normal(size=2))
    return core.make_basis_state(g, site)


def run_walk(cfg: ExperimentConfig) -> Result:
    cfg.require("n", "steps", "theta1", "theta2")
    bc = toposim.BoundaryConfig(cfg.n, cfg.theta1, _profile(cfg, cfg.n))
    U = toposim.build_inhomogeneous_ssqw(bc)
    boundary = bc.boundaries[0] if bc.boundaries else cfg.boundary
    start = cfg.start if cfg.start is not None else (boundary if boundary is not None else cfg.n // 2)
    if cfg.init == "mode":
        if not bc.boundaries:
            raise ConfigError("init: 'mode' needs a two-zone profile (--theta2-right)")
        rec = toposim.bound_state_spectrum(U, bc.boundaries, cfg.window, cfg.eps_e, cfg.p_min)
        if not rec.flagged.any():
            raise ConfigError("init: no flagged bound mode to start from")
        psi0 = rec.eigenvectors[int(rec.flagged_indices[0])]
    else:
        psi0 = _ring_state(cfg, U.geometry, start)
    tr = toposim.evolve(psi0, U, cfg.steps, boundary, cfg.window)
    std = tr.axis_std(0)
    summary = f"walk: {cfg.steps} steps on {cfg.n} sites, final std {std[-1]:.6f}"
    if tr.window_prob is not None:
        summary += f", min window prob {tr.window_prob.min():.6f}"
    return Result(list(tr.rows()), ("step", "axis", "site", "probability"), summary)


def run_boundary(cfg: ExperimentConfig) -> Result:
    cfg.require("n", "theta1", "theta2", "theta2_right")
    bc = toposim.BoundaryConfig(cfg.n, cfg.theta1, _profile(cfg, cfg.n))
    rec = toposim.bound_state_spectrum(
        toposim.build_inhomogeneous_ssqw(bc), bc.boundaries, cfg.window, cfg.eps_e, cfg.p_min
    )
    summary = (
        f"boundary: {len(rec.flagged_indices)} flagged modes at boundaries {list(bc.boundaries)} "
        f"(per boundary {rec.flagged_per_boundary()}), splitting {rec.splitting:.3e}"
    )
    cols = ("index", "quasienergy", "ipr", "window_prob", "decay_length", "flagged")
    return Result(list(rec.rows()), cols, summary)


def run_edge2d(cfg: ExperimentConfig) -> Result:
    cfg.require("n", "n2", "steps", "theta1", "theta2")
    profile = _profile(cfg, cfg.n)
    boundary = profile.boundaries[0] if profile.boundaries else cfg.boundary
    g = core.LatticeGeometry.torus(cfg.n, cfg.n2)
    start = cfg.start if cfg.start is not None else (boundary if boundary is not None else cfg.n // 2)
    start2 = cfg.start2 if cfg.start2 is not None else cfg.n2 // 2
    if cfg.init == "mode":
        raise ConfigError("init: 'mode' is only available for walk")
    if cfg.init == "random":
        rng = np.random.default_rng(cfg.seed)
        psi0 = core.make_basis_state(g, (start, start2), rng.normal(size=2) + 1j * rng.normal(size=2))
    else:
        psi0 = core.make_basis_state(g, (start, start2))
    try:
        tr = toposim.edge_state_sim_2d(cfg.theta1, profile, cfg.n, cfg.n2, psi0, cfg.steps, boundary, cfg.window)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    std2 = tr.axis_std(1)
    summary = f"edge2d: {cfg.steps} steps, axis-2 std {std2[-1]:.6f}, monotone {bool(np.all(np.diff(std2) > 0))}"
    if tr.window_prob is not None:
        summary += f", min axis-1 window prob {tr.window_prob.min():.6f}"
    return Result(list(tr.rows()), ("step", "axis", "site", "probability"), summary)


def run_phasediagram(cfg: ExperimentConfig) -> Result:
    cfg.require("grid")
    g = decomposition.angle_grid(cfg.grid)
    rows = toposim.phase_diagram_scan(g, g, cfg.kgrid, cfg.threads)
    pairs = toposim.adjacent_phase_pairs(rows)
    windings = sorted({r["winding"] for r in rows if r["winding"] is not None})
    summary = f"phasediagram: {len(rows)} cells, windings {windings}, {len(pairs)} adjacent phase pairs"
    return Result(rows, ("theta1", "theta2", "gap0", "gapPi", "winding"), summary)


RUNNERS: dict[str, Callable[[ExperimentConfig], Result]] = {
    "verify": run_verify,
    "spectrum": run_spectrum,
    "walk": run_walk,
    "boundary": run_boundary,
    "edge2d": run_edge2d,
    "phasediagram": run_phasediagram,
}


def metadata(cfg: ExperimentConfig) -> dict:
    return {"sswalk_version": __version__, "config": cfg.to_dict()}


def run(cfg: ExperimentConfig) -> int:
    try:
        resolve_threads(cfg.threads)
    except ValueError as exc:
        raise ConfigError(f"threads: {exc}") from None
    result = RUNNERS[cfg.command](cfg)
    meta = metadata(cfg)
    if cfg.output_format == "csv":
        text = render_csv(result.records, result.columns, meta)
    else:
        text = render_ndjson(result.records, meta)
    atomic_write(cfg.out, text)
    print(result.summary, file=sys.stdout if cfg.out else sys.stderr)
    return result.status


def main(argv=None) -> int:
    try:
        cfg = parse_config(sys.argv[1:] if argv is None else argv)
        return run(cfg)
    except ConfigError as exc:
        print(f"sswalk: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"sswalk: error: cannot write output: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
