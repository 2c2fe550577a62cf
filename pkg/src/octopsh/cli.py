"""Command-line harness: ``octopsh verify`` and ``octopsh compute``.

Reports go to stdout (or ``--out``) as JSON lines with sorted keys, one per
check.  Every line echoes the run configuration.  A timestamp is written only
with ``--timestamp``, on its own final line, so reruns are byte identical
otherwise.

Exit codes: 0 all checks pass, 1 some check fails, 2 usage error,
3 no failures but some check inconclusive, 4 contract or domain error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from datetime import datetime, timezone
from typing import Sequence

import numpy as np

from octopsh import operators as ops
from octopsh import perron as pr
from octopsh import quadrature as qd
from octopsh.catalog import parse_field, point
from octopsh.errors import OctopshError
from octopsh.reports import Report, to_jsonable

__all__ = ["main", "load_config", "resolve_config", "DEFAULTS"]

SUITE_NAMES = ("algebra", "hermitian", "jets", "geometry", "ibp", "comparison", "lelong", "capacity", "perron", "all")
DEFAULTS = {"seed": 0, "samples": qd.DEFAULT_SAMPLES, "suite": "all", "out": None, "format": "json"}
CONFIG_KEYS = {"seed": int, "samples": int, "suite": str, "out": str, "format": str}
SEED_ENV = "OCTOPSH_SEED"

EXIT_PASS, EXIT_FAIL, EXIT_USAGE, EXIT_INCONCLUSIVE, EXIT_ERROR = 0, 1, 2, 3, 4


class UsageError(Exception):
    pass


def load_config(path: str) -> dict:
    """Read ``key = value`` lines; ``#`` starts a comment."""
    cfg = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key=value")
            key, val = (s.strip() for s in line.split("=", 1))
            if key not in CONFIG_KEYS:
                raise UsageError(f"{path}:{lineno}: unknown config key {key!r}")
            try:
                cfg[key] = CONFIG_KEYS[key](val)
            except ValueError as exc:
                raise UsageError(f"{path}:{lineno}: bad value for {key}: {val!r}") from exc
    return cfg


def resolve_config(args: argparse.Namespace, environ=os.environ) -> dict:
    """Defaults, then the config file, then ``OCTOPSH_SEED``, then flags."""
    cfg = dict(DEFAULTS)
    if getattr(args, "config", None):
        cfg.update(load_config(args.config))
    if environ.get(SEED_ENV):
        try:
            cfg["seed"] = int(environ[SEED_ENV])
        except ValueError as exc:
            raise UsageError(f"{SEED_ENV} must be an integer") from exc
    for key in CONFIG_KEYS:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    if cfg["samples"] < 2:
        raise UsageError("--samples must be at least 2")
    if cfg["format"] not in ("json", "csv"):
        raise UsageError("--format must be json or csv")
    return cfg


def _echo(cfg: dict) -> dict:
    return {k: cfg[k] for k in sorted(cfg)}


def _json_line(obj) -> str:
    return json.dumps(to_jsonable(obj), sort_keys=True, separators=(",", ":"))


def _csv_text(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


def _cell(v):
    v = to_jsonable(v)
    if isinstance(v, (list, dict)):
        return json.dumps(v, sort_keys=True, separators=(",", ":"))
    if isinstance(v, float):
        return repr(v)
    return "" if v is None else v


def _report_lines(reports: Sequence[Report], cfg: dict) -> str:
    if cfg["format"] == "csv":
        rows = [[r.check, r.status, r.passed, r.estimate, r.stderr, r.gate, r.as_dict()["inputs_digest"], _json_line(_echo(cfg))]
                for r in reports]
        return _csv_text(["check", "status", "pass", "value", "stderr", "gate", "inputs_digest", "config"], rows)
    out = []
    for r in reports:
        d = r.as_dict()
        d["config"] = _echo(cfg)
        out.append(_json_line(d) + "\n")
    return "".join(out)


def _emit(text: str, cfg: dict, timestamp: bool) -> None:
    if timestamp:
        text += _json_line({"timestamp": datetime.now(timezone.utc).isoformat()}) + "\n"
    if cfg.get("out"):
        with open(cfg["out"], "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
        sys.stdout.flush()


def _exit_code(reports: Sequence[Report]) -> int:
    statuses = {r.status for r in reports}
    if "fail" in statuses:
        return EXIT_FAIL
    if "inconclusive" in statuses:
        return EXIT_INCONCLUSIVE
    return EXIT_PASS


# commands ----------------------------------------------------------------------------

def cmd_verify(args: argparse.Namespace) -> int:
    from octopsh.suites import run_suite

    if args.suite_pos is not None and args.suite is not None and args.suite_pos != args.suite:
        raise UsageError("conflicting suite names")
    if args.suite is None:
        args.suite = args.suite_pos
    cfg = resolve_config(args)
    if cfg["suite"] not in SUITE_NAMES:
        raise UsageError(f"unknown suite {cfg['suite']!r}; choose from {', '.join(SUITE_NAMES)}")
    reports = run_suite(cfg["suite"], cfg["seed"], cfg["samples"])
    _emit(_report_lines(reports, cfg), cfg, args.timestamp)
    for r in reports:
        print(r.line(), file=sys.stderr)
    return _exit_code(reports)


def _parse_point(text: str) -> np.ndarray:
    text = text.strip()
    if text.startswith("["):
        body = text[1:-1]
        return point([float(v) for v in body.split(",") if v.strip()])
    return point(float(text))


def cmd_capacity(args: argparse.Namespace, cfg: dict) -> tuple[Report, str | None]:
    rep = ops.capacity_ball(_parse_point(args.center), args.r, args.R, n=cfg["samples"], seed=cfg["seed"])
    rows = [[d, v, s] for d, v, s in zip(rep.inputs["deltas"], rep.details["sweep"], rep.details["sweep_stderr"])]
    rows.append([0.0, rep.estimate, rep.stderr])
    return rep, _csv_text(["delta", "capacity", "stderr"], rows)


def cmd_lelong(args: argparse.Namespace, cfg: dict) -> tuple[Report, str | None]:
    field = parse_field(args.field)
    a = _parse_point(args.center)
    radii = [float(r) for r in args.radii.split(",")] if args.radii else [round(0.1 * k, 10) for k in range(1, 11)]
    singular = any(np.linalg.norm(b - a) <= max(radii) for b in field.singular_points())
    eps = [float(e) for e in args.eps.split(",")] if args.eps else list(ops.LELONG_EPS)
    if singular:
        if field.regularized(eps[0]) is None:
            raise OctopshError("cli.singular_field", "field is singular near the centre and has no regularisation")
        fields = [field.regularized(e) for e in sorted(eps)]
    else:
        fields = [field]
        eps = []
    est = ops.lelong_profile(fields, a, radii, cfg["samples"], cfg["seed"])
    vals = np.atleast_1d(est.value)
    ses = np.atleast_1d(est.stderr)
    m = len(radii)
    rows, all_mono = [], True
    for i, w in enumerate(fields):
        for k, r in enumerate(radii):
            j = i * m + k
            mono = True
            if k > 0:
                d, s = est.diff(j, j - 1)
                mono = d >= -3 * s
            all_mono &= mono
            rows.append([sorted(eps)[i] if eps else 0.0, r, vals[j], ses[j], mono])
    family = (lambda e: field.regularized(e)) if singular else field
    nu = ops.lelong_number(family, a, eps or None, n=cfg["samples"], seed=cfg["seed"])
    inputs = {"field": field, "center": a, "radii": radii, "eps": sorted(eps), "n": cfg["samples"], "seed": cfg["seed"]}
    details = {"profile": vals, "profile_stderr": ses, "lelong_number": nu.estimate, "lelong_stderr": nu.stderr,
               "monotone": bool(all_mono)}
    rep = Report("compute.lelong", inputs, nu.estimate, nu.stderr, "sigma/r^8 increments >= -3 paired stderr",
                 Report.status_of(all_mono), details)
    return rep, _csv_text(["eps", "r", "sigma_over_r8", "stderr", "monotone"], rows)


def cmd_perron(args: argparse.Namespace, cfg: dict) -> tuple[Report, str | None]:
    phi = parse_field(args.phi)
    X = np.atleast_2d(_parse_point(args.at))
    data = pr.BoundaryData.from_field(phi, args.C, seed=cfg["seed"])
    n = max(2000, cfg["samples"] // 10)
    rep = pr.sandwich(data, X, n=n, seed=cfg["seed"], exact=args.exact)
    rows = [[list(x), lo, up, se] for x, lo, up, se in
            zip(X, rep.details["lower"], rep.details["upper"], np.atleast_1d(rep.stderr))]
    return rep, _csv_text(["point", "lower", "upper", "stderr"], rows)


def cmd_compute(args: argparse.Namespace) -> int:
    cfg = resolve_config(args)
    cfg.pop("suite")
    handler = {"capacity": cmd_capacity, "lelong": cmd_lelong, "perron": cmd_perron}[args.kind]
    rep, table = handler(args, cfg)
    if cfg["format"] == "csv" and table is not None:
        text = table
    else:
        d = rep.as_dict()
        d["config"] = _echo(cfg)
        text = _json_line(d) + "\n"
    _emit(text, cfg, args.timestamp)
    return _exit_code([rep])


# parser ------------------------------------------------------------------------------

def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=None, help=f"RNG seed (env {SEED_ENV}; default 0)")
    p.add_argument("--samples", type=int, default=None, help=f"Monte Carlo samples (default {qd.DEFAULT_SAMPLES})")
    p.add_argument("--out", default=None, help="write the report here instead of stdout")
    p.add_argument("--config", default=None, help="key=value config file")
    p.add_argument("--format", choices=("json", "csv"), default=None, help="output format (default json)")
    p.add_argument("--timestamp", action="store_true", help="append a timestamp line")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="octopsh", description="Numerical checks for octonionic pluripotential theory.")
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    v = sub.add_parser("verify", help="run a verification suite")
    v.add_argument("suite_pos", nargs="?", default=None, metavar="SUITE", help=f"one of {', '.join(SUITE_NAMES)}")
    v.add_argument("--suite", default=None)
    _common(v)
    v.set_defaults(func=cmd_verify)

    c = sub.add_parser("compute", help="run one computation")
    ksub = c.add_subparsers(dest="kind", parser_class=_Parser)
    ksub.required = True
    cap = ksub.add_parser("capacity", help="relative capacity of B(a, r) in B(a, R)")
    cap.add_argument("--r", type=float, default=0.5)
    cap.add_argument("--R", type=float, default=1.0)
    cap.add_argument("--center", default="0")
    lel = ksub.add_parser("lelong", help="sigma(a, r)/r^8 table and Lelong number")
    lel.add_argument("--field", required=True, help="field expression, e.g. fundamental or '(sqnorm)'")
    lel.add_argument("--center", default="0")
    lel.add_argument("--radii", default=None, help="comma separated radii (default 0.1,...,1.0)")
    lel.add_argument("--eps", default=None, help="regularisation parameters for singular fields")
    per = ksub.add_parser("perron", help="lower and upper envelope bounds at a point")
    per.add_argument("--phi", required=True, help="boundary datum as a field expression")
    per.add_argument("--at", default="0", help="evaluation point")
    per.add_argument("--C", type=float, default=None, help="second-order bound of phi on the sphere")
    per.add_argument("--exact", action="store_true", help="also require upper - lower <= 3 stderr")
    for p in (cap, lel, per):
        _common(p)
    c.set_defaults(func=cmd_compute)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        print("usage: octopsh verify [SUITE] [--seed N] [--samples N] [--out PATH] [--config PATH]", file=sys.stderr)
        return EXIT_USAGE
    except OctopshError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except OSError as exc:
        print(f"error [cli.io]: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
