"""Command-line front end.

Subcommands: ``distance``, ``kernel``, ``asymptotic``, ``sweep``, ``verify``
and ``bessel``.  Every run is described by a :class:`RunConfig`, built from
an optional YAML file (``--config``) with command-line flags taking
precedence.  Output is deterministic for a given config and seed; csv and
table output start with a ``#`` header line recording version and seed,
json output carries the same information under ``"header"``.

Exit status: 0 on success, 1 when a numerical check or evaluation fails,
2 on a malformed config.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .asymptotics import RegimeGapWarning, leading
from .bessel_core import VParams, ke1_ratio, plancherel_lhs, plancherel_rhs
from .errors import HeisenkernelError
from .geometry import solve_geodesic
from .group_model import GroupSignature, RadialPoint, signature_preset
from .phase import phase_frame
from .quadrature_kernel import kernel

log = logging.getLogger(__name__)

COMMANDS = ("distance", "kernel", "asymptotic", "sweep", "verify", "bessel")
FORMATS = ("csv", "json", "table")
METHODS = ("auto", "direct", "shifted", "conv")
SWEEP_COLUMNS = ("index", "r", "t", "d", "theta", "eps", "D1", "D2", "kernel", "leading", "ratio", "regime")
SWEEP_SCHEMA = "sweep-v1"

DEFAULT_GRID = {"theta": [0.5, 1.5, 2.3, 3.0], "d": [1.0, 2.0, 5.0, 10.0, 20.0], "split": None, "random": 0}


class ConfigError(ValueError):
    """Malformed run configuration; the message names the field."""


@dataclass
class RunConfig:
    command: str
    signature: GroupSignature = field(default_factory=lambda: signature_preset("h11"))
    point: tuple = None
    h: float = 1.0
    tol: float = 1e-10
    method: str = "auto"
    format: str = "table"
    seed: int = 0
    grid: dict = field(default_factory=lambda: dict(DEFAULT_GRID))
    nu: float = 1.0
    r: float = 1.0
    b: float = 1.0
    gamma0: float = 4.0
    suite: str = "all"
    jobs: int = 1
    diagnostics: bool = False
    out: str = None


# ---------------------------------------------------------------------------
# config parsing


def _parse_signature(v):
    if isinstance(v, GroupSignature):
        return v
    if isinstance(v, str):
        if v.endswith((".yaml", ".yml")) and Path(v).is_file():
            doc = yaml.safe_load(Path(v).read_text())
            return _parse_signature(doc.get("signature", doc))
        return signature_preset(v)
    if isinstance(v, dict):
        return GroupSignature.from_record(v)
    raise ConfigError(f"signature: cannot interpret {v!r}")


def _parse_floats(v, name):
    if isinstance(v, str):
        v = [s for s in v.replace(" ", "").split(",") if s]
    try:
        return [float(x) for x in np.atleast_1d(v)]
    except (TypeError, ValueError):
        raise ConfigError(f"{name}: expected a list of numbers, got {v!r}") from None


def _parse_point(v):
    vals = _parse_floats(v, "point")
    if len(vals) < 2:
        raise ConfigError(f"point: need r_1,...,r_l,t, got {v!r}")
    return tuple(vals)


def build_config(args: argparse.Namespace) -> RunConfig:
    """Merge the YAML config (if any) with flags; flags win."""
    doc = {}
    if getattr(args, "config", None):
        try:
            doc = yaml.safe_load(Path(args.config).read_text()) or {}
        except (OSError, yaml.YAMLError) as exc:
            raise ConfigError(f"config: cannot read {args.config}: {exc}") from None
        if not isinstance(doc, dict):
            raise ConfigError("config: top level must be a mapping")
    known = {f.name for f in fields(RunConfig)}
    unknown = set(doc) - known
    if unknown:
        raise ConfigError(f"{sorted(unknown)[0]}: unknown config field")
    merged = dict(doc)
    for name in known:
        flag = getattr(args, name if name != "signature" else "sig", None)
        if flag is not None and flag is not False:
            merged[name] = flag
    merged["command"] = args.command
    for key in ("thetas", "ds", "splits", "random"):
        v = getattr(args, key, None)
        if v is not None:
            grid = dict(merged.get("grid") or {})
            grid[{"thetas": "theta", "ds": "d", "splits": "split"}.get(key, key)] = v
            merged["grid"] = grid

    cfg = RunConfig(command=merged["command"])
    try:
        if "signature" in merged:
            cfg.signature = _parse_signature(merged["signature"])
    except HeisenkernelError as exc:
        raise ConfigError(f"signature: {exc}") from None
    if merged.get("point") is not None:
        cfg.point = _parse_point(merged["point"])
        if len(cfg.point) != cfg.signature.l + 1:
            raise ConfigError(f"point: {cfg.signature} needs {cfg.signature.l} moduli and t, "
                              f"got {len(cfg.point)} values")
    for name in ("h", "tol", "nu", "r", "b", "gamma0"):
        if name in merged:
            try:
                setattr(cfg, name, float(merged[name]))
            except (TypeError, ValueError):
                raise ConfigError(f"{name}: expected a number, got {merged[name]!r}") from None
    if not cfg.h > 0:
        raise ConfigError(f"h: must be positive, got {cfg.h}")
    if not 0 < cfg.tol < 1:
        raise ConfigError(f"tol: must lie in (0, 1), got {cfg.tol}")
    for name in ("seed", "jobs"):
        if name in merged:
            try:
                setattr(cfg, name, int(merged[name]))
            except (TypeError, ValueError):
                raise ConfigError(f"{name}: expected an integer, got {merged[name]!r}") from None
    if cfg.jobs < 1:
        raise ConfigError("jobs: must be >= 1")
    for name, allowed in (("method", METHODS), ("format", FORMATS)):
        if name in merged:
            val = str(merged[name]).lower()
            if val not in allowed:
                raise ConfigError(f"{name}: expected one of {allowed}, got {merged[name]!r}")
            setattr(cfg, name, val)
    for name in ("suite", "out"):
        if merged.get(name) is not None:
            setattr(cfg, name, str(merged[name]))
    cfg.diagnostics = bool(merged.get("diagnostics", False))
    cfg.grid = _parse_grid(merged.get("grid"))
    if cfg.command in ("distance", "kernel", "asymptotic") and cfg.point is None:
        raise ConfigError("point: required for this command")
    return cfg


def _parse_grid(g):
    out = dict(DEFAULT_GRID)
    if g is None:
        return out
    if not isinstance(g, dict):
        raise ConfigError("grid: must be a mapping with theta, d, split, random")
    for key in g:
        if key not in out:
            raise ConfigError(f"grid.{key}: unknown grid field")
    if g.get("theta") is not None:
        out["theta"] = _parse_floats(g["theta"], "grid.theta")
        if any(not 0 <= x < math.pi for x in out["theta"]):
            raise ConfigError("grid.theta: angles must lie in [0, pi)")
    if g.get("d") is not None:
        out["d"] = _parse_floats(g["d"], "grid.d")
        if any(x < 1 for x in out["d"]):
            raise ConfigError("grid.d: distances must be >= 1 (regimes need d^2 >= 1)")
    if g.get("split") is not None:
        out["split"] = _parse_floats(g["split"], "grid.split")
    if g.get("random") is not None:
        try:
            out["random"] = int(g["random"])
        except (TypeError, ValueError):
            raise ConfigError(f"grid.random: expected an integer, got {g['random']!r}") from None
    return out


# ---------------------------------------------------------------------------
# commands


def _radial(cfg):
    return RadialPoint(cfg.point[:-1], cfg.point[-1])


def cmd_distance(cfg):
    p = _radial(cfg)
    geo = solve_geodesic(cfg.signature, p)
    return [dict(geo.as_record())], True


def cmd_kernel(cfg):
    sig, p = cfg.signature, _radial(cfg)
    kv = kernel(sig, p, cfg.h, cfg.tol, cfg.method)
    rec = {"value": kv.value, "log_value": kv.log_value, "method": kv.method.value, "err": kv.err_estimate}
    if not p.is_origin:
        geo = solve_geodesic(sig, p)
        rec.update({"theta": geo.theta, "dsq": geo.dsq})
        if cfg.diagnostics:
            fr = phase_frame(sig, p, geo)
            rec.update({"eps": fr.eps, "eps0": fr.eps0, "phi_pp0": fr.phi_pp0, "D1": fr.D1, "D2": fr.D2,
                        "Jstar": fr.Jstar})
    else:
        rec.update({"theta": 0.0, "dsq": 0.0})
    return [rec], True


def cmd_asymptotic(cfg):
    sig, p = cfg.signature, _radial(cfg)
    if cfg.h != 1.0:
        raise ConfigError("h: the asymptotic command works at h = 1 (rescale the point instead)")
    return [_sweep_row(sig, p, cfg.tol, 0, cfg.gamma0)], True


def _sweep_points(cfg):
    sig, g = cfg.signature, cfg.grid
    from .verification import point_on_ray

    if g["random"]:
        rng = np.random.default_rng(cfg.seed)
        th = rng.uniform(0.0, 3.1, g["random"])
        ds = np.exp(rng.uniform(0.0, math.log(20.0), g["random"]))
        pairs = list(zip(th, ds))
    else:
        pairs = [(th, d) for th in g["theta"] for d in g["d"]]
    split = g["split"]
    if split is not None and len(split) != sig.l:
        raise ConfigError(f"grid.split: need {sig.l} shares, got {len(split)}")
    return [point_on_ray(sig, float(th), float(d), split) for th, d in pairs]


def _fmt_opt(x):
    return None if x is None else float(x)


def _sweep_row(sig, p, tol, index, gamma0=4.0):
    from .asymptotics import Thresholds

    geo = solve_geodesic(sig, p)
    fr = phase_frame(sig, p, geo)
    kv = kernel(sig, p, 1.0, tol)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RegimeGapWarning)
        lv, reg = leading(sig, p, Thresholds(gamma0=gamma0), log=True)
    tag = reg.tag.value + ("+gap" if reg.gap else "") + ("+extended" if reg.theta_extended else "")
    return {"index": index, "r": " ".join(repr(v) for v in p.r), "t": p.t, "d": geo.d, "theta": geo.theta,
            "eps": geo.epsilon, "D1": _fmt_opt(fr.D1), "D2": _fmt_opt(fr.D2), "kernel": kv.value,
            "leading": math.exp(lv), "ratio": math.exp(kv.log_value - lv), "regime": tag}


def _sweep_task(args):
    sig, p, tol, i, gamma0 = args
    return _sweep_row(sig, p, tol, i, gamma0)


def cmd_sweep(cfg):
    pts = _sweep_points(cfg)
    tasks = [(cfg.signature, p, cfg.tol, i, cfg.gamma0) for i, p in enumerate(pts)]
    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as ex:
            rows = list(ex.map(_sweep_task, tasks))
    else:
        rows = [_sweep_task(t) for t in tasks]
    rows.sort(key=lambda r: r["index"])
    return rows, True


def cmd_bessel(cfg):
    vp = VParams(cfg.nu, cfg.r, cfg.b)
    lhs = plancherel_lhs(vp)
    rhs = plancherel_rhs(vp)
    ke = ke1_ratio(vp, cfg.gamma0)
    return [{"nu": cfg.nu, "r": cfg.r, "b": cfg.b, "lhs": lhs.real, "lhs_imag": lhs.imag, "rhs": rhs,
             "gap": abs(lhs - rhs) / rhs, "ratio_to_bound": ke["ratio"]}], True


def _parse_suite(s):
    if s in ("all", "", None):
        return None
    try:
        sel = {int(x) for x in str(s).split(",")}
    except ValueError:
        raise ConfigError(f"suite: expected 'all' or criterion numbers like 1,4,12, got {s!r}") from None
    if not sel <= set(range(1, 13)):
        raise ConfigError(f"suite: criterion numbers run from 1 to 12, got {sorted(sel)}")
    return sel


def cmd_verify(cfg):
    from .verification import run_all

    results = run_all(_parse_suite(cfg.suite))
    rows = [{"criterion": r.number, "name": r.name, "status": "PASS" if r.passed else "FAIL",
             "seconds": round(r.seconds, 1), "summary": r.summary} for r in results]
    if cfg.out:
        out = Path(cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "verify.csv").write_text(_to_csv(rows))
        (out / "verify.txt").write_text("\n".join(r.line() for r in results) + "\n")
        sand = next((r for r in results if r.number == 10), None)
        if sand is not None:
            srows = [{"comparator": k, "ratioMin": v["ratioMin"], "ratioMax": v["ratioMax"],
                      "log_spread": v["log_spread"], "skipped": v["skipped"]} for k, v in sand.metrics.items()]
            (out / "spreads.csv").write_text(_to_csv(srows))
    return rows, all(r.passed for r in results)


DISPATCH = {"distance": cmd_distance, "kernel": cmd_kernel, "asymptotic": cmd_asymptotic,
            "sweep": cmd_sweep, "verify": cmd_verify, "bessel": cmd_bessel}


def run(cfg: RunConfig):
    """Dispatch ``cfg`` and return ``(rows, ok)``."""
    return DISPATCH[cfg.command](cfg)


# ---------------------------------------------------------------------------
# output


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _to_csv(rows):
    buf = io.StringIO()
    cols = list(rows[0]) if rows else []
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        w.writerow([_cell(r.get(c)) for c in cols])
    return buf.getvalue()


def _to_table(rows):
    if not rows:
        return ""
    cols = list(rows[0])
    cells = [[_cell(r.get(c)) for c in cols] for r in rows]
    width = [max(len(c), *(len(row[i]) for row in cells)) for i, c in enumerate(cols)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(cols, width))]
    lines += ["  ".join(v.ljust(w) for v, w in zip(row, width)) for row in cells]
    return "\n".join(s.rstrip() for s in lines) + "\n"


def header(cfg):
    h = {"program": "heisenkernel", "version": __version__, "command": cfg.command, "seed": cfg.seed,
         "signature": cfg.signature.to_record()}
    if cfg.command == "sweep":
        h["schema"] = SWEEP_SCHEMA
    return h


def render(cfg, rows) -> str:
    hd = header(cfg)
    if cfg.format == "json":
        def clean(v):
            if isinstance(v, (float, np.floating)):
                v = float(v)
                return v if math.isfinite(v) else None
            return v
        data = [{k: clean(v) for k, v in r.items()} for r in rows]
        return json.dumps({"header": hd, "rows": data}, indent=2, sort_keys=False) + "\n"
    line = "# " + " ".join(f"{k}={json.dumps(v, separators=(',', ':'))}" for k, v in hd.items()) + "\n"
    body = _to_csv(rows) if cfg.format == "csv" else _to_table(rows)
    return line + body


# ---------------------------------------------------------------------------
# argument parsing


def _parser():
    ap = argparse.ArgumentParser(prog="heisenkernel", description="Heat kernels and distances on Heisenberg groups.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="YAML run config; flags override its fields")
        p.add_argument("--sig", help="preset name (h11, h21, h31, h5, h7) or YAML file with a signature")
        p.add_argument("--format", choices=FORMATS)
        p.add_argument("--seed", type=int)
        p.add_argument("--tol", type=float)
        p.add_argument("-v", "--verbose", action="store_true")
        return p

    p = common(sub.add_parser("distance", help="critical angle and CC distance"))
    p.add_argument("--point", help="r_1,...,r_l,t")
    p = common(sub.add_parser("kernel", help="heat kernel value"))
    p.add_argument("--point", help="r_1,...,r_l,t")
    p.add_argument("--h", type=float)
    p.add_argument("--method", choices=METHODS)
    p.add_argument("--diagnostics", action="store_true", default=None)
    p = common(sub.add_parser("asymptotic", help="kernel, leading term and regime at one point"))
    p.add_argument("--point", help="r_1,...,r_l,t")
    p.add_argument("--gamma0", type=float)
    p = common(sub.add_parser("sweep", help="kernel vs leading term over a (theta, d) grid"))
    p.add_argument("--thetas", help="comma separated critical angles")
    p.add_argument("--ds", help="comma separated distances (>= 1)")
    p.add_argument("--splits", help="comma separated |z|^2 shares per block")
    p.add_argument("--random", type=int, help="draw this many (theta, d) pairs from the seeded generator instead")
    p.add_argument("--gamma0", type=float)
    p.add_argument("--jobs", type=int)
    p = common(sub.add_parser("verify", help="run the acceptance suite"))
    p.add_argument("--suite", help="'all' or comma separated criterion numbers")
    p.add_argument("--out", help="directory for verify.csv, verify.txt and spreads.csv")
    p = common(sub.add_parser("bessel", help="Plancherel identity at one (nu, r, b)"))
    p.add_argument("--nu", type=float)
    p.add_argument("--r", type=float)
    p.add_argument("--b", type=float)
    p.add_argument("--gamma0", type=float)
    return ap


def main(argv=None) -> int:
    ap = _parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = build_config(args)
    except ConfigError as exc:
        ap.error(str(exc))
    try:
        rows, ok = run(cfg)
    except ConfigError as exc:
        ap.error(str(exc))
    except HeisenkernelError as exc:
        where = f" at point {cfg.point}" if cfg.point is not None else ""
        print(f"error{where}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    sys.stdout.write(render(cfg, rows))
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
