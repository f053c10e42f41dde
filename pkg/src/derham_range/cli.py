"""Command-line front end: ``derham-range <command> [flags]``.

Exit codes: 0 success, 2 invalid input, 3 a comparison or self-test gate failed.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import sys
from dataclasses import dataclass
from fractions import Fraction

from . import __version__, analysis
from .derham_cdf import MAX_TABLE_LEVEL, DeRhamModel, build_table, eval_cdf, point_mass_table
from .dyadic import Dyadic
from .empirics import dkw_epsilon, ecdf, ks_against_exact
from .walk_model import MAX_SAMPLE_LEVEL, BudgetExceededError, simulate_ranges

COMMANDS = ("cdf", "simulate", "compare", "analyze", "atoms", "selftest")
EXIT_OK, EXIT_INVALID, EXIT_GATE = 0, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


@dataclass
class RunConfig:
    command: str
    u: float = 1.0
    level: int = 10
    samples: int = 100_000
    seed: int = 0
    workers: int = 1
    grid_level: int = 6
    tol: float = 1e-12
    format: str | None = None
    out: str | None = None
    x: str | None = None
    timestamp: bool = True

    def validate(self):
        if self.u < 0:
            raise UsageError(f"--u must be non-negative, got {self.u}")
        if self.u == 0 and self.command not in ("cdf", "analyze"):
            raise UsageError("--u 0 is only accepted by cdf and analyze")
        if self.command == "cdf" and not 0 <= self.level <= MAX_TABLE_LEVEL:
            raise UsageError(f"--level must be in 0..{MAX_TABLE_LEVEL} for cdf")
        if self.command in ("simulate", "compare"):
            if not 1 <= self.level <= MAX_SAMPLE_LEVEL:
                raise UsageError(f"--level must be in 1..{MAX_SAMPLE_LEVEL} for {self.command}")
            if self.samples < 1:
                raise UsageError("--samples must be at least 1")
        if self.workers < 1:
            raise UsageError("--workers must be at least 1")
        if not 0 <= self.seed < 1 << 64:
            raise UsageError("--seed must be a 64-bit unsigned integer")
        if self.command == "compare" and not 0 <= self.grid_level <= self.level:
            raise UsageError("--grid-level must be in 0..--level")
        if self.tol <= 0:
            raise UsageError("--tol must be positive")
        if self.command == "atoms" and self.x is None:
            raise UsageError("atoms needs --x in k/2^n form")
        if self.format is None:
            self.format = "csv" if self.command == "cdf" else "json"

    def meta(self, randomness=False) -> dict:
        m = {"tool": "derham-range", "version": __version__, "command": self.command,
             "u": self.u, "level": self.level, "seed": self.seed, "workers": self.workers}
        if randomness:
            m["samples"] = self.samples
        if self.timestamp:
            m["timestamp"] = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
        return m


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="derham-range", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--u", type=float, default=1.0)
    p.add_argument("--level", type=int, default=10)
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--grid-level", dest="grid_level", type=int, default=6)
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("--out")
    p.add_argument("--x")
    p.add_argument("--no-timestamp", dest="timestamp", action="store_false")
    return p


def _parse_point(text: str):
    if "/2^" in text or text.strip() in ("0", "1"):
        return Dyadic.parse(text)
    try:
        v = Fraction(text)
    except ValueError:
        raise UsageError(f"--x must be 'k/2^n' or a decimal in [0, 1], got {text!r}") from None
    if not 0 <= v <= 1:
        raise UsageError(f"--x must lie in [0, 1], got {text!r}")
    return v


def _json(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def cmd_cdf(cfg: RunConfig) -> tuple[str, int]:
    if cfg.x is not None:
        pt = _parse_point(cfg.x)
        if cfg.u == 0:
            lo = hi = 0.0 if pt == 0 or pt == Dyadic(0, 0) else 1.0
        else:
            lo, hi = eval_cdf(DeRhamModel(cfg.u), pt)
        body = {"meta": cfg.meta(), "x": str(pt), "lower": lo, "upper": hi,
                "width": hi - lo, "within_tol": hi - lo <= cfg.tol}
        if cfg.format == "csv":
            return f"x,lower,upper\n{pt},{lo:.17g},{hi:.17g}\n", EXIT_OK
        return _json(body), EXIT_OK
    table = point_mass_table(cfg.level) if cfg.u == 0 else build_table(DeRhamModel(cfg.u), cfg.level)
    xs = [Dyadic.of(j, cfg.level).decimal() for j in range(len(table))]
    if cfg.format == "csv":
        m = cfg.meta()
        head = "# " + " ".join(f"{k}={v}" for k, v in m.items()) + "\n"
        rows = "".join(f"{x},{v:.17g}\n" for x, v in zip(xs, table.values))
        return head + "x,cdf\n" + rows, EXIT_OK
    rows = [{"x": x, "cdf": float(v)} for x, v in zip(xs, table.values)]
    return _json({"meta": cfg.meta(), "level": cfg.level, "rows": rows}), EXIT_OK


def cmd_simulate(cfg: RunConfig) -> tuple[str, int]:
    hist = simulate_ranges(cfg.u, cfg.level, cfg.samples, cfg.seed, cfg.workers)
    body = {"meta": cfg.meta(randomness=True), "level": cfg.level, "samples": hist.total,
            "seed": cfg.seed, "workers": cfg.workers, "counts": hist.as_dict()}
    return _json(body), EXIT_OK


def cmd_compare(cfg: RunConfig) -> tuple[str, int]:
    hist = simulate_ranges(cfg.u, cfg.level, cfg.samples, cfg.seed, cfg.workers)
    ks = ks_against_exact(ecdf(hist), DeRhamModel(cfg.u), cfg.grid_level)
    band = dkw_epsilon(hist.total, 0.99)
    passed = ks <= band
    body = {"meta": cfg.meta(randomness=True), "level": cfg.level, "grid_level": cfg.grid_level,
            "samples": hist.total, "ks": ks, "dkw99": band, "pass": passed}
    return _json(body), EXIT_OK if passed else EXIT_GATE


def cmd_analyze(cfg: RunConfig) -> tuple[str, int]:
    report = analysis.regularity_report(cfg.u).to_json()
    return _json({"meta": cfg.meta(), **report}), EXIT_OK


def cmd_atoms(cfg: RunConfig) -> tuple[str, int]:
    try:
        x = Dyadic.parse(cfg.x)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if x.numerator == 0:
        raise UsageError("--x must lie in (0, 1]")
    a = analysis.atom_mass(cfg.u, x)
    body = {"meta": cfg.meta(), "x": str(x), "m": a.m, "mass": a.mass,
            "finite_n_check": a.finite_n_check, "applicable": a.has_atoms}
    return _json(body), EXIT_OK


def cmd_selftest(cfg: RunConfig) -> tuple[str, int]:
    import io

    from .acceptance import run_all

    buf = io.StringIO()
    ok = run_all(stream=buf)
    return buf.getvalue(), EXIT_OK if ok else EXIT_GATE


HANDLERS = {
    "cdf": cmd_cdf,
    "simulate": cmd_simulate,
    "compare": cmd_compare,
    "analyze": cmd_analyze,
    "atoms": cmd_atoms,
    "selftest": cmd_selftest,
}


def run(cfg: RunConfig) -> int:
    try:
        cfg.validate()
        text, code = HANDLERS[cfg.command](cfg)
    except (UsageError, ValueError, BudgetExceededError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    if cfg.out:
        with open(cfg.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


def main(argv=None) -> int:
    try:
        ns = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return run(RunConfig(**vars(ns)))


if __name__ == "__main__":
    sys.exit(main())
