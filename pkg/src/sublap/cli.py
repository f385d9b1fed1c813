"""Command line front end: ``sublap verify <suite>`` and ``sublap frac``.

Exit codes: 0 success, 1 failed checks, 2 usage or configuration errors.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from typing import List, Optional

import numpy as np

from .config import read_config
from .errors import ConfigError, RegimeRejected, SublapError
from .models import ModelKind, ModelSpace
from .verify import CSV_HEADER, SUITES, Settings, format_rows, run_suite

__all__ = ["main", "build_parser"]

_CONFIG_KEYS = {"model", "n", "s", "a", "func", "xi", "x", "out", "seed", "tol_scale", "jobs"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(2, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="sublap", description="Sub-Laplacian mean values, heat semigroup "
                                           "and fractional powers.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--model", choices=["euclidean", "heisenberg"])
        sp.add_argument("--n", type=int, help="Euclidean dimension")
        sp.add_argument("--s", type=float, help="fractional order in (0, 1)")
        sp.add_argument("--a", type=float, help="extension weight a = 1 - 2s")
        sp.add_argument("--config", help="key = value file; flags override it")
        sp.add_argument("--out", help="output path (CSV)")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--tol-scale", dest="tol_scale", type=float)

    v = sub.add_parser("verify", help="run an invariant suite")
    v.add_argument("suite", help="|".join(SUITES + ("all",)))
    common(v)
    v.add_argument("--jobs", type=int, help="parallel checks (threads)")

    f = sub.add_parser("frac", help="(-L)^s u by the Balakrishnan and extension routes")
    common(f)
    f.add_argument("--func", help="cos | gauss | const | cauchy | heis-gauss")
    f.add_argument("--xi", type=float, help="frequency for cos")
    f.add_argument("--x", action="append",
                   help="evaluation point, comma separated; repeat for several points")
    return p


def _merge(args) -> dict:
    cfg = {}
    if getattr(args, "config", None):
        raw = read_config(args.config)
        unknown = set(raw) - _CONFIG_KEYS
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        cfg.update(raw)
    for key in _CONFIG_KEYS:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    return cfg


def _order(cfg) -> Optional[float]:
    s = cfg.get("s")
    a = cfg.get("a")
    try:
        s = None if s is None else float(s)
        a = None if a is None else float(a)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if a is not None:
        s_a = (1.0 - a) / 2.0
        if s is not None and abs(s - s_a) > 1e-14:
            raise ConfigError("--s and --a disagree")
        s = s_a
    if s is not None and not 0.0 < s < 1.0:
        raise ConfigError("s must lie in (0, 1)")
    return s


def _models(cfg) -> List[ModelSpace]:
    kind = cfg.get("model")
    n = cfg.get("n")
    try:
        n = None if n is None else int(n)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if kind is None:
        if n is not None:
            return [ModelSpace.euclidean(n)]
        return [ModelSpace.euclidean(1), ModelSpace.euclidean(3), ModelSpace.heisenberg()]
    if kind == "euclidean":
        if n is not None and n < 1:
            raise ConfigError("n must be positive")
        return [ModelSpace.euclidean(n if n is not None else 3)]
    if kind == "heisenberg":
        return [ModelSpace.heisenberg(seed=int(cfg.get("seed", 0)))]
    raise ConfigError(f"unknown model {kind!r}")


def _write_csv(rows, path) -> bytes:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    w.writerows(format_rows(rows))
    data = buf.getvalue().encode("utf-8")
    if path:
        with open(path, "wb") as fh:
            fh.write(data)
    return data


def cmd_verify(args) -> int:
    try:
        cfg = _merge(args)
        if args.suite not in SUITES + ("all",):
            raise ConfigError(f"unknown suite {args.suite!r}")
        st = Settings(models=_models(cfg), seed=int(cfg.get("seed", 0)),
                      tol_scale=float(cfg.get("tol_scale", 1.0)), s=_order(cfg),
                      jobs=int(cfg.get("jobs", 1)))
    except (ConfigError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    t0 = time.perf_counter()
    rows = run_suite(args.suite, st)
    wall = time.perf_counter() - t0
    out = cfg.get("out") or f"verify_{args.suite}.csv"
    _write_csv(rows, out)
    passed = sum(r.passed for r in rows)
    failed = len(rows) - passed
    summary = {"suite": args.suite, "passed": passed, "failed": failed, "wall_time_s": round(wall, 3)}
    root, _ = os.path.splitext(out)
    with open(root + ".json", "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    for r in rows:
        if not r.passed:
            print(f"FAIL {r.module}/{r.check} [{r.model} {r.params}] value={r.value:.6g} "
                  f"oracle={r.oracle:.6g} relerr={r.relerr:.3g} tol={r.tol:.3g}")
    print(json.dumps(summary, sort_keys=True))
    return 0 if failed == 0 else 1


def _function(cfg, model: ModelSpace):
    from . import testfunctions as tf
    name = cfg.get("func", "cos")
    n = model.n
    if name == "cos":
        xi = float(cfg.get("xi", 1.0))
        return tf.plane_wave(n, [xi] + [0.0] * (n - 1))
    if name == "gauss":
        return tf.heis_gaussian(0.7, 0.5) if model.kind is ModelKind.HEISENBERG else tf.gaussian_bump(n, 0.5)
    if name == "heis-gauss":
        if model.kind is not ModelKind.HEISENBERG:
            raise ConfigError("heis-gauss needs --model heisenberg")
        return tf.heis_gaussian(0.7, 0.5)
    if name == "const":
        return tf.constant(n, 1.0)
    if name == "cauchy":
        if n != 1 or model.kind is not ModelKind.EUCLIDEAN:
            raise ConfigError("cauchy is defined on the real line")
        return tf.cauchy_bump()
    raise ConfigError(f"unknown function {name!r}")


def _points(cfg, n):
    raw = cfg.get("x")
    if raw is None:
        return [np.zeros(n)]
    if isinstance(raw, str):
        raw = raw.split(";")
    pts = []
    for item in raw:
        try:
            vals = [float(v) for v in str(item).split(",") if v.strip()]
        except ValueError as exc:
            raise ConfigError(f"bad point {item!r}") from exc
        if len(vals) == 1 and n > 1:
            vals = vals + [0.0] * (n - 1)
        if len(vals) != n:
            raise ConfigError(f"point {item!r} needs {n} coordinates")
        pts.append(np.array(vals))
    return pts


def cmd_frac(args) -> int:
    from .extension import dtn_trace_full
    from .fractional import FracParams, balakrishnan_full
    try:
        cfg = _merge(args)
        s = _order(cfg)
        if s is None:
            raise ConfigError("frac needs --s or --a")
        if cfg.get("model") is None:
            cfg["model"] = "euclidean"
            cfg.setdefault("n", 1)
        model = _models(cfg)[0]
        u = _function(cfg, model)
        pts = _points(cfg, model.n)
    except (ConfigError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    rows = [("x", "balakrishnan", "dtn", "diff", "flags")]
    status = 0
    for x in pts:
        label = ",".join(f"{v:g}" for v in x)
        try:
            b = balakrishnan_full(model, u, x, FracParams(s))
            d = dtn_trace_full(model, None, u, x, s=s, fd_check=False)
        except RegimeRejected as exc:
            rows.append((label, "nan", "nan", "nan", f"rejected:{exc}"))
            status = 1
            continue
        except SublapError as exc:
            rows.append((label, "nan", "nan", "nan", f"error:{type(exc).__name__}"))
            status = 1
            continue
        flags = ";".join("regime:group-decay" if f == "relies_on_group_decay" else f for f in b.flags)
        rows.append((label, f"{b.value:.12g}", f"{d.value:.12g}", f"{abs(b.value - d.value):.3e}",
                     flags))
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    text = buf.getvalue()
    if cfg.get("out"):
        with open(cfg["out"], "w", encoding="utf-8") as fh:
            fh.write(text)
    sys.stdout.write(text)
    return status


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 2
    if args.command == "verify":
        return cmd_verify(args)
    return cmd_frac(args)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
