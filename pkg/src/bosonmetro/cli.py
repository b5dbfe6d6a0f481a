"""Command-line front end.

Usage: bosonmetro <command> [options]

Commands and their CSV columns:

  ag              term, re, im                 (excess operator A_G of a generator)
  witness         nbar, fq, fq_coh, four_lambda2, bound, witness, beats_coherent,
  proposition       witness_positive, dim, tail_mass, eps_eig
  threshold-scan  p, alpha2, four_lambda2, fq_coh, beats
  scaling         p, alpha2, fq, fc, fq_over_asymptote, fc_over_asymptote
  cfi             x, p, score
  montecarlo      replicate, chi_hat

Exit codes: 0 ok, 1 numeric failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from . import __version__
from .algebra import ParseError, excess, format_polynomial
from .fock import TruncationError, realize
from .generators import (
    Kerr,
    Number,
    excess_catalog,
    format_generator,
    dim_weight,
    parse_generator,
    polynomial,
)
from .homodyne import (
    DegenerateEstimationError,
    NormalizationError,
    cfi_at_zero,
    crb_experiment,
    default_grid,
    distribution,
    score_at_zero,
)
from .metrology import EPS_EIG, REPORT_FIELDS, lambda2, proposition_test, qfi
from .generators import coherent_qfi
from .probes import VacuumDoped, auto_space, build_density, parse_probe

COMMANDS = ("ag", "witness", "proposition", "threshold-scan", "scaling", "cfi", "montecarlo")


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    target: str = ""
    probe: str = "coherent:1"
    generator: str = "kerr"
    seed: int = 0
    dim: int | None = None
    tau: float = 1e-12
    weight: float | None = None
    eps: float = EPS_EIG
    p: list = field(default_factory=lambda: [0.25])
    alpha2: list = field(default_factory=lambda: [1.0])
    chi: float = 0.001
    n: int = 10000
    replicates: int = 200
    window: list = field(default_factory=lambda: [-0.05, 0.05])
    out: str | None = None
    format: str = "both"

    def resolved(self) -> dict:
        return asdict(self)


_KEYS = {f.name for f in fields(RunConfig)} - {"command"}


# ---------------------------------------------------------------------------
# value parsing

def parse_sweep(text: str) -> list:
    """``lo:step:count`` range, comma list or a single number."""
    text = str(text).strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise UsageError(f"range {text!r} must be lo:step:count")
        lo, step, count = float(parts[0]), float(parts[1]), int(parts[2])
        if count < 1:
            raise UsageError(f"range {text!r} needs a positive count")
        return [lo + k * step for k in range(count)]
    return [float(v) for v in text.split(",") if v.strip()]


def _window(text: str) -> list:
    vals = [float(v) for v in str(text).split(",")]
    if len(vals) != 2 or not vals[0] < vals[1]:
        raise UsageError(f"window {text!r} must be lo,hi with lo < hi")
    return vals


_CONVERT = {
    "seed": int,
    "dim": lambda v: None if str(v).lower() in ("", "none", "auto") else int(v),
    "tau": float,
    "weight": lambda v: None if str(v).lower() in ("", "none", "auto") else float(v),
    "eps": float,
    "p": parse_sweep,
    "alpha2": parse_sweep,
    "chi": float,
    "n": int,
    "replicates": int,
    "window": _window,
}


def read_config_file(path: str) -> dict:
    out = {}
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise UsageError(f"cannot read config {path!r}: {exc}") from None
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip().replace("-", "_")
        if not sep:
            raise UsageError(f"{path}:{lineno}: expected key = value, got {line!r}")
        if key not in _KEYS:
            raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
        out[key] = value.strip()
    return out


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    g = common.add_argument_group("global options")
    g.add_argument("--probe", help="probe text form, e.g. vacuumdoped:p=0.25,alpha=1")
    g.add_argument("--generator", help="generator text form, e.g. kerr, quad:theta=0")
    g.add_argument("--seed", help="master RNG seed")
    g.add_argument("--dim", help="override truncation dimension per mode")
    g.add_argument("--tau", help="truncation tail tolerance (default 1e-12)")
    g.add_argument("--weight", help="tail weight exponent (default from generator)")
    g.add_argument("--eps", help="eigenvalue-pair cutoff for the QFI sum")
    g.add_argument("--out", help="output path prefix; writes PREFIX.csv / PREFIX.json")
    g.add_argument("--format", choices=("csv", "json", "both"))
    g.add_argument("--config", help="key = value config file")

    parser = _Parser(prog="bosonmetro", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    ag = sub.add_parser("ag", parents=[common], help="print the excess operator A_G")
    ag.add_argument("target", nargs="?", help="generator text form (overrides --generator)")
    sub.add_parser("witness", parents=[common], help="nonclassicality witness of a probe")
    sub.add_parser("proposition", parents=[common], help="probe vs matched coherent state")
    for name, hlp in (("threshold-scan", "4 Lambda^2 vs coherent QFI over p, |alpha|^2"),
                      ("scaling", "QFI and homodyne CFI against large-n asymptotes")):
        sp = sub.add_parser(name, parents=[common], help=hlp)
        sp.add_argument("--p", help="weights: list a,b,c or range lo:step:count")
        sp.add_argument("--alpha2", help="|alpha|^2 values: list or range lo:step:count")
    sub.add_parser("cfi", parents=[common], help="homodyne Fisher information at chi = 0")
    mc = sub.add_parser("montecarlo", parents=[common], help="replicated MLE vs Cramer-Rao")
    mc.add_argument("--chi", help="true signal value")
    mc.add_argument("--n", help="samples per replicate")
    mc.add_argument("--replicates", help="number of replicates")
    mc.add_argument("--window", help="MLE search window lo,hi")
    return parser


def parse_config(argv) -> RunConfig:
    """Defaults < config file < flags.  Raises UsageError on any bad token."""
    args = build_parser().parse_args(argv)
    values: dict = {}
    if args.config:
        values.update(read_config_file(args.config))
    for key in _KEYS:
        v = getattr(args, key, None)
        if v is not None:
            values[key] = v
    cfg = RunConfig(command=args.command)
    for key, raw in values.items():
        if key in _CONVERT:
            try:
                val = _CONVERT[key](raw)
            except UsageError:
                raise
            except (TypeError, ValueError) as exc:
                raise UsageError(f"bad value for {key}: {raw!r} ({exc})") from None
        else:
            val = raw
        setattr(cfg, key, val)
    if cfg.format not in ("csv", "json", "both"):
        raise UsageError(f"bad format {cfg.format!r}")
    if cfg.command == "ag" and cfg.target:
        cfg.generator = cfg.target
    # validate text forms now so that bad specs are usage errors
    try:
        parse_probe(cfg.probe)
    except (ValueError, TypeError) as exc:
        raise UsageError(f"bad --probe {cfg.probe!r}: {exc}") from None
    try:
        parse_generator(cfg.generator)
    except (ValueError, TypeError) as exc:
        raise UsageError(f"bad --generator {cfg.generator!r}: {exc}") from None
    for p in cfg.p:
        if not 0 < p < 1:
            raise UsageError(f"p={p} out of (0,1)")
    if any(a < 0 for a in cfg.alpha2):
        raise UsageError("alpha2 values must be non-negative")
    if cfg.n < 1 or cfg.replicates < 2:
        raise UsageError("need n >= 1 and replicates >= 2")
    return cfg


# ---------------------------------------------------------------------------
# output

def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return f"{v:.17g}"
    if isinstance(v, (list, tuple)):
        return "x".join(str(x) for x in v)
    return str(v)


def to_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _jsonable(v):
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.bool_,)):
        return bool(v)
    if isinstance(v, complex):
        return [v.real, v.imag]
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


def _write_atomic(path: str, text: str) -> None:
    folder = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=folder, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


@dataclass
class Outcome:
    summary: str
    header: list
    rows: list
    result: dict


# ---------------------------------------------------------------------------
# commands

def _probe_state(cfg: RunConfig, spec_g):
    probe = parse_probe(cfg.probe)
    weight = cfg.weight if cfg.weight is not None else dim_weight(spec_g)
    space = auto_space(probe, weight, cfg.tau, cfg.dim)
    return probe, build_density(probe, space)


def cmd_ag(cfg: RunConfig) -> Outcome:
    spec = parse_generator(cfg.generator)
    poly = polynomial(spec)
    ag = excess(poly)
    try:
        catalog_match = excess_catalog(spec).allclose(ag, atol=1e-12)
    except ValueError:
        catalog_match = None
    rows = [[format_polynomial(type(ag)({k: 1.0}, ag.modes)), c.real, c.imag]
            for k, c in sorted(ag.terms.items(), key=lambda kv: kv[0], reverse=True)]
    result = {"generator": format_generator(spec), "polynomial": format_polynomial(poly),
              "excess": format_polynomial(ag), "catalog_match": catalog_match}
    return Outcome(format_polynomial(ag), ["term", "re", "im"], rows, result)


def _report_outcome(cfg: RunConfig, label: str) -> Outcome:
    spec = parse_generator(cfg.generator)
    _, rho = _probe_state(cfg, spec)
    rep = proposition_test(rho, spec, cfg.eps).as_dict()
    row = [rep[k] for k in REPORT_FIELDS]
    if label == "witness":
        verdict = "nonclassical" if rep["witness_positive"] else "inconclusive"
        summary = (f"fq={rep['fq']:.12g} bound={rep['bound']:.12g} "
                   f"witness={rep['witness']:.6g} verdict={verdict}")
    else:
        summary = (f"nbar={rep['nbar']:.12g} fq={rep['fq']:.12g} fq_coh={rep['fq_coh']:.12g} "
                   f"beats_coherent={_fmt(rep['beats_coherent'])} "
                   f"witness_positive={_fmt(rep['witness_positive'])}")
    return Outcome(summary, list(REPORT_FIELDS), [row], rep)


def cmd_threshold_scan(cfg: RunConfig) -> Outcome:
    spec = parse_generator(cfg.generator)
    g_poly = polynomial(spec)
    rows = []
    dims, tails = [], []
    weight = cfg.weight if cfg.weight is not None else dim_weight(spec)
    for p in cfg.p:
        for a2 in cfg.alpha2:
            probe = VacuumDoped(p, math.sqrt(a2))
            space = auto_space(probe, weight, cfg.tau, cfg.dim)
            rho = build_density(probe, space)
            four_l2 = 4.0 * lambda2(rho, realize(g_poly, space))
            fq_coh = coherent_qfi(spec, math.sqrt(a2))
            rows.append([p, a2, four_l2, fq_coh, bool(four_l2 > fq_coh)])
            dims.append(list(space.dims))
            tails.append(rho.tail_mass)
    summary = to_csv(["p", "alpha2", "four_lambda2", "fq_coh", "beats"], rows).rstrip()
    return Outcome(summary, ["p", "alpha2", "four_lambda2", "fq_coh", "beats"], rows,
                   {"dims": dims, "tail_masses": tails})


def _asymptotes(spec, nbar: float, p: float):
    if isinstance(spec, Kerr):
        return 16 * nbar ** 3 / p ** 2, 16 * nbar ** 3 / p
    if isinstance(spec, Number):
        return 4 * nbar, float("nan")
    raise UsageError("scaling supports the kerr and number generators")


def cmd_scaling(cfg: RunConfig) -> Outcome:
    spec = parse_generator(cfg.generator)
    g_poly = polynomial(spec)
    weight = cfg.weight if cfg.weight is not None else dim_weight(spec)
    header = ["p", "alpha2", "fq", "fc", "fq_over_asymptote", "fc_over_asymptote"]
    rows, dims, tails = [], [], []
    for a2 in cfg.alpha2:
        for p in cfg.p:
            # homodyne-optimal phase: alpha = i sqrt(nbar)
            probe = VacuumDoped(p, 1j * math.sqrt(a2))
            space = auto_space(probe, weight, cfg.tau, cfg.dim)
            rho = build_density(probe, space)
            g = realize(g_poly, space)
            fq = qfi(rho, g, cfg.eps)
            fc = cfi_at_zero(rho, g)
            aq, ac = _asymptotes(spec, a2, p)
            rows.append([p, a2, fq, fc, fq / aq, fc / ac])
            dims.append(list(space.dims))
            tails.append(rho.tail_mass)
    return Outcome(to_csv(header, rows).rstrip(), header, rows,
                   {"dims": dims, "tail_masses": tails})


def cmd_cfi(cfg: RunConfig) -> Outcome:
    spec = parse_generator(cfg.generator)
    _, rho = _probe_state(cfg, spec)
    g = realize(polynomial(spec), rho.space)
    grid = default_grid(rho.space.dims[0])
    dist = distribution(rho, g, 0.0, grid)
    score = score_at_zero(rho, g, grid)
    fc = cfi_at_zero(rho, g, grid)
    fq = qfi(rho, g, cfg.eps)
    rows = [[x, p, s] for x, p, s in zip(grid.x, dist.values, score)]
    result = {"fc": fc, "fq": fq, "fc_over_fq": fc / fq if fq > 0 else None,
              "dim": list(rho.space.dims), "tail_mass": rho.tail_mass,
              "grid_half_width": grid.half_width, "grid_points": grid.points}
    return Outcome(f"fc={fc:.12g} fq={fq:.12g}", ["x", "p", "score"], rows, result)


def cmd_montecarlo(cfg: RunConfig) -> Outcome:
    spec = parse_generator(cfg.generator)
    probe = parse_probe(cfg.probe)
    res = crb_experiment(probe, spec, cfg.chi, cfg.n, cfg.replicates, cfg.seed,
                         tuple(cfg.window), cfg.dim, cfg.tau)
    rows = [[k, float(c)] for k, c in enumerate(res.estimates)]
    d = res.as_dict()
    summary = (f"var_emp={d['var_emp']:.6g} crb_fc={d['crb_fc']:.6g} "
               f"ratio_fc={d['ratio_fc']:.4f} ratio_fq={d['ratio_fq']:.4f}")
    return Outcome(summary, ["replicate", "chi_hat"], rows, d)


_HANDLERS = {
    "ag": cmd_ag,
    "witness": lambda c: _report_outcome(c, "witness"),
    "proposition": lambda c: _report_outcome(c, "proposition"),
    "threshold-scan": cmd_threshold_scan,
    "scaling": cmd_scaling,
    "cfi": cmd_cfi,
    "montecarlo": cmd_montecarlo,
}

NUMERIC_ERRORS = (TruncationError, NormalizationError, DegenerateEstimationError,
                  ArithmeticError, np.linalg.LinAlgError)


def run(cfg: RunConfig, stdout=None) -> int:
    stdout = stdout or sys.stdout
    try:
        outcome = _HANDLERS[cfg.command](cfg)
    except UsageError as exc:
        print(f"bosonmetro: error: {exc}", file=sys.stderr)
        return 2
    except NUMERIC_ERRORS as exc:
        print(f"bosonmetro: numeric failure: {exc}", file=sys.stderr)
        return 1
    print(outcome.summary, file=stdout)
    if cfg.out:
        report = {
            "version": __version__,
            "command": cfg.command,
            "config": cfg.resolved(),
            "result": outcome.result,
        }
        written = []
        try:
            if cfg.format in ("csv", "both"):
                path = cfg.out + ".csv"
                _write_atomic(path, to_csv(outcome.header, outcome.rows))
                written.append(path)
            if cfg.format in ("json", "both"):
                path = cfg.out + ".json"
                text = json.dumps(_jsonable(report), sort_keys=True, indent=2) + "\n"
                _write_atomic(path, text)
                written.append(path)
        except OSError as exc:
            for path in written:
                os.unlink(path)
            print(f"bosonmetro: cannot write output: {exc}", file=sys.stderr)
            return 1
    return 0


def main(argv=None) -> int:
    try:
        cfg = parse_config(sys.argv[1:] if argv is None else argv)
    except UsageError as exc:
        print(f"bosonmetro: error: {exc}", file=sys.stderr)
        return 2
    except ParseError as exc:
        print(f"bosonmetro: error: {exc}", file=sys.stderr)
        return 2
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
