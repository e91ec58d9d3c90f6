"""Command-line interface: config parsing, deterministic streams, CSV/JSON output.

Subcommands: potential, green, capacity, capacity-scan, massive-scan,
soup-sample, tilted-sample, massive-sample, gff-sample, verify <name>.
Common flags: --seed, --threads, --out, --format, --config.

Config files are flat ``key=value`` text; unknown keys are rejected.  CSV
output is comma-separated with '.' decimals: '#'-prefixed self-description
lines (version, seed, config echo), one mandatory column-header line, then
rows.  Replica rows are derived from streams keyed by (seed, replica), so
bodies are byte-identical for any --threads value.

Exit codes: 0 success (for verify: pass), 1 failure, 2 usage/parse error,
3 accuracy error (the machine-readable error object carries the achieved
bound).
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import __version__
from .dirichlet import capacity, capacity_finite_N, capacity_exact, ball_solver
from .errors import AccuracyError, BudgetError, DomainError, Soup2dError
from .experiments import EXPERIMENTS, _richardson_errors, replicated_rows
from .geometry import Domain, as_point_set, parse_set_file
from .gff import FieldSampler, build_spec
from .massive import MassiveRegime, capacity_massive
from .potential import massive_green_with_error, potential_kernel_with_error
from .soup_dirichlet import occupation_field, soup_sampler
from .soup_massive import MassiveSoupSampler
from .soup_tilted import TiltedOccupationSampler
from .streams import StreamFactory


def _parse_point(text):
    parts = text.replace(";", ",").split(",")
    if len(parts) != 2:
        raise DomainError(f"expected 'x,y', got {text!r}")
    return (int(parts[0]), int(parts[1]))


def _parse_points(text):
    out = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if chunk:
            out.append(_parse_point(chunk))
    return as_point_set(out)


def _parse_domain(text):
    if text.startswith("ball:"):
        return Domain.ball(int(text.split(":", 1)[1]))
    return Domain(parse_set_file(text))


def _parse_set_arg(text):
    """A point set given inline ('x,y;x,y') or as a set file path."""
    if "," in text:
        return _parse_points(text)
    return parse_set_file(text)


def _parse_int_list(text):
    return [int(v) for v in text.split(",") if v.strip()]


def _parse_kv_file(path):
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise DomainError(f"{path}:{lineno}: expected key=value")
            k, v = line.split("=", 1)
            out[k.strip()] = v.strip()
    return out


_CONFIG_PARSERS = {
    "seed": int,
    "threads": int,
    "out": str,
    "format": str,
    "replicas": int,
    "N": int,
    "u": float,
    "alpha": float,
    "eps": float,
    "tol": float,
    "N_grid": lambda s: tuple(_parse_int_list(s)),
    "massive_grid": lambda s: tuple(_parse_int_list(s)),
    "A": _parse_set_arg,
    "K": _parse_set_arg,
    "probes": _parse_set_arg,
    "window": _parse_set_arg,
    "sets": lambda s: [_parse_set_arg(c) for c in s.split("|")],
    "alpha_mean": float,
    "alpha_fluct": float,
}


def load_config(path) -> dict:
    """Typed parse of a flat key=value config file; unknown keys rejected."""
    raw = _parse_kv_file(path)
    out = {}
    for k, v in raw.items():
        if k not in _CONFIG_PARSERS:
            raise DomainError(f"unknown config key {k!r} in {path}")
        try:
            out[k] = _CONFIG_PARSERS[k](v)
        except (ValueError, TypeError) as exc:
            raise DomainError(f"bad value for {k!r} in {path}: {v!r}") from exc
    return out


class OutputWriter:
    def __init__(self, path=None):
        self.fh = open(path, "w") if path else sys.stdout
        self._close = path is not None

    def comment(self, key, value):
        self.fh.write(f"# {key}={value}\n")

    def header(self, columns):
        self.fh.write(",".join(columns) + "\n")

    def row(self, values):
        out = []
        for v in values:
            if isinstance(v, float):
                out.append(repr(v))
            else:
                out.append(str(v))
        self.fh.write(",".join(out) + "\n")

    def json(self, obj):
        self.fh.write(json.dumps(obj, indent=2) + "\n")

    def done(self):
        self.fh.flush()
        if self._close:
            self.fh.close()


def _emit_meta(w: OutputWriter, args, extras=()):
    w.comment("tool", f"soup2d {__version__}")
    w.comment("command", args.command)
    w.comment("seed", args.seed)
    for k, v in extras:
        w.comment(k, v)


def _add_common(p):
    p.add_argument("--seed", type=int, default=None,
                   help="master seed (default 0)")
    p.add_argument("--threads", type=int, default=None,
                   help="worker threads (default 1; output-invariant)")
    p.add_argument("--out", default=None, help="output path (default stdout)")
    p.add_argument("--format", choices=("csv", "json"), default=None)
    p.add_argument("--config", default=None, help="key=value config file")


def build_parser():
    ap = argparse.ArgumentParser(prog="soup2d", description=__doc__)
    sub = ap.add_subparsers(dest="command")

    p = sub.add_parser("potential", help="potential kernel / massive Green value")
    p.add_argument("--x", type=int, required=True)
    p.add_argument("--y", type=int, required=True)
    p.add_argument("--eps", type=float, default=None)
    p.add_argument("--tol", type=float, default=1e-10)
    _add_common(p)

    p = sub.add_parser("green", help="killed Green function on a ball")
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--src", type=_parse_point, required=True, metavar="X1,X2")
    p.add_argument("--dst", type=_parse_point, required=True, metavar="Y1,Y2")
    _add_common(p)

    p = sub.add_parser("capacity", help="two-dimensional capacity of a set")
    p.add_argument("--set", dest="set_", required=True,
                   help="set file or inline 'x,y;x,y'")
    p.add_argument("--N", type=_parse_int_list, default=[64, 128, 256],
                   help="extrapolation ball radii")
    _add_common(p)

    p = sub.add_parser("capacity-scan",
                       help="finite-N capacity representation scan")
    p.add_argument("--set", dest="set_", required=True)
    p.add_argument("--N", type=_parse_int_list, default=[64, 128, 256, 512])
    _add_common(p)

    p = sub.add_parser("massive-scan", help="massive capacity scan")
    p.add_argument("--set", dest="set_", required=True)
    p.add_argument("--N", type=_parse_int_list, default=[64, 128, 256])
    _add_common(p)

    p = sub.add_parser("soup-sample", help="Dirichlet soup replicas")
    p.add_argument("--K", type=_parse_set_arg, default=((0, 0),))
    p.add_argument("--Kp", type=_parse_domain, default=None, metavar="ball:N")
    p.add_argument("--A", type=_parse_set_arg, required=True)
    p.add_argument("--u", type=float, required=True)
    p.add_argument("--replicas", type=int, default=1000)
    p.add_argument("--probes", type=_parse_set_arg, default=None)
    _add_common(p)

    p = sub.add_parser("tilted-sample", help="tilted soup replicas")
    p.add_argument("--A", type=_parse_set_arg, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--replicas", type=int, default=1000)
    p.add_argument("--probes", type=_parse_set_arg, default=None)
    _add_common(p)

    p = sub.add_parser("massive-sample",
                       help="pinned massive soup on the canonical schedule")
    p.add_argument("--A", type=_parse_set_arg, required=True)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--replicas", type=int, default=1000)
    p.add_argument("--probes", type=_parse_set_arg, default=None)
    _add_common(p)

    p = sub.add_parser("gff-sample", help="Gaussian field replicas")
    p.add_argument("--kind", required=True,
                   help="box:N | pinned_box:N | pinned_infinite | massive:eps")
    p.add_argument("--window", type=_parse_set_arg, required=True)
    p.add_argument("--replicas", type=int, default=1000)
    _add_common(p)

    p = sub.add_parser("verify", help="run a verification experiment")
    p.add_argument("name", choices=sorted(EXPERIMENTS))
    _add_common(p)

    return ap


def _resolve(args):
    """Merge config file values under explicit flags; apply defaults."""
    cfg = load_config(args.config) if args.config else {}
    for k in ("seed", "threads", "out", "format"):
        if getattr(args, k, None) is None:
            setattr(args, k, cfg.pop(k, None))
    args.seed = 0 if args.seed is None else args.seed
    args.threads = 1 if args.threads is None else max(1, args.threads)
    return cfg


def _pt_label(p):
    return f"occ_{p[0]}_{p[1]}"


def cmd_potential(args, cfg):
    w = OutputWriter(args.out)
    if args.eps is None:
        value, err = potential_kernel_with_error((args.x, args.y), args.tol)
    else:
        value, err = massive_green_with_error(args.eps, (args.x, args.y),
                                              args.tol)
    w.json({"x": [args.x, args.y], "eps": args.eps, "value": value,
            "error_estimate": err})
    w.done()
    return 0


def cmd_green(args, cfg):
    w = OutputWriter(args.out)
    val = ball_solver(args.N).green(args.src, args.dst)
    w.json({"N": args.N, "x": list(args.src), "y": list(args.dst),
            "value": val})
    w.done()
    return 0


def cmd_capacity(args, cfg):
    A = _parse_set_arg(args.set_)
    res = capacity(A, N_sequence=tuple(args.N))
    w = OutputWriter(args.out)
    w.json({"set": [list(p) for p in A], "value": res.value,
            "error_estimate": res.error_estimate,
            "anchor": list(res.anchor),
            "exact_gram_route": capacity_exact(A),
            "warnings": list(res.harmonic.warnings)})
    w.done()
    return 0


def cmd_capacity_scan(args, cfg):
    A = _parse_set_arg(args.set_)
    w = OutputWriter(args.out)
    _emit_meta(w, args, [("set", args.set_)])
    w.header(["N", "value", "error_estimate"])
    vals = [capacity_finite_N(A, N).value for N in args.N]
    est = _richardson_errors(vals, args.N) if len(args.N) > 1 else {}
    for N, v in zip(args.N, vals):
        w.row([N, float(v), float(est.get(N, math.nan))])
    w.done()
    return 0


def cmd_massive_scan(args, cfg):
    A = _parse_set_arg(args.set_)
    w = OutputWriter(args.out)
    _emit_meta(w, args, [("set", args.set_)])
    w.header(["N", "eps", "capacity_massive", "error"])
    vals = [capacity_massive(A, N) for N in args.N]
    est = _richardson_errors(vals, args.N) if len(args.N) > 1 else {}
    for N, v in zip(args.N, vals):
        w.row([N, float(MassiveRegime.canonical(N).eps), float(v),
               float(est.get(N, math.nan))])
    w.done()
    return 0


def cmd_soup_sample(args, cfg):
    Kp = args.Kp if args.Kp is not None else Domain.ball(32)
    probes = args.probes if args.probes is not None else args.A
    sampler = soup_sampler(args.K, Kp, args.A)
    fac = StreamFactory(args.seed)

    def one(i):
        s = sampler.sample(fac.replica(i), args.u)
        occ = occupation_field(s, probes)
        return np.concatenate(
            [[len(s), 1.0 if len(s) == 0 else 0.0], occ.times]
        )

    rows = replicated_rows(one, args.replicas, args.threads)
    w = OutputWriter(args.out)
    _emit_meta(w, args, [("u", args.u), ("rho_total", sampler.rho.total)])
    w.header(["replica", "n_trajectories", "vacancy_indicator"]
             + [_pt_label(p) for p in probes])
    for i, r in enumerate(rows):
        w.row([i, int(r[0]), int(r[1])] + [float(v) for v in r[2:]])
    w.done()
    return 0


def cmd_tilted_sample(args, cfg):
    probes = args.probes
    if probes is None:
        probes = tuple(p for p in args.A if p != (0, 0)) or None
    sampler = TiltedOccupationSampler(args.A, probes)
    fac = StreamFactory(args.seed)

    def one(i):
        s = sampler.sample(fac.replica(i), args.alpha)
        return np.concatenate(
            [[s.count, 1.0 if s.count == 0 else 0.0], s.occupation]
        )

    rows = replicated_rows(one, args.replicas, args.threads)
    w = OutputWriter(args.out)
    _emit_meta(w, args, [("alpha", args.alpha), ("cap", sampler.cap),
                         ("level", 0.5 * math.pi * args.alpha)])
    w.header(["replica", "count", "vacancy_indicator"]
             + [_pt_label(p) for p in sampler.window])
    for i, r in enumerate(rows):
        w.row([i, int(r[0]), int(r[1])] + [float(v) for v in r[2:]])
    w.done()
    return 0


def cmd_massive_sample(args, cfg):
    regime = MassiveRegime.canonical(args.N)
    u_N = (2.0 / math.pi) * args.alpha * math.log(args.N) ** 2
    probes = args.probes if args.probes is not None else args.A
    sampler = MassiveSoupSampler(regime.eps, args.A)
    fac = StreamFactory(args.seed)

    def one(i):
        s = sampler.sample_pinned(fac.replica(i), u_N)
        occ = occupation_field(s, probes)
        return np.concatenate(
            [[len(s), s.params["n_dropped"], 1.0 if len(s) == 0 else 0.0],
             occ.times]
        )

    rows = replicated_rows(one, args.replicas, args.threads)
    w = OutputWriter(args.out)
    _emit_meta(w, args, [("eps", regime.eps), ("u", u_N),
                         ("alpha", args.alpha)])
    w.header(["replica", "n_trajectories", "n_dropped", "vacancy_indicator"]
             + [_pt_label(p) for p in probes])
    for i, r in enumerate(rows):
        w.row([i, int(r[0]), int(r[1]), int(r[2])]
              + [float(v) for v in r[3:]])
    w.done()
    return 0


def cmd_gff_sample(args, cfg):
    kind = args.kind
    if kind.startswith("box:"):
        spec_kind = ("box", int(kind.split(":")[1]))
    elif kind.startswith("pinned_box:"):
        spec_kind = ("pinned_box", int(kind.split(":")[1]))
    elif kind == "pinned_infinite":
        spec_kind = ("pinned_infinite",)
    elif kind.startswith("massive:"):
        spec_kind = ("massive", float(kind.split(":")[1]))
    else:
        raise DomainError(f"unknown field kind {kind!r}")
    spec = build_spec(spec_kind, args.window)
    sampler = FieldSampler(spec)
    fac = StreamFactory(args.seed)

    def one(i):
        return sampler.sample(fac.replica(i))

    rows = replicated_rows(one, args.replicas, args.threads)
    w = OutputWriter(args.out)
    _emit_meta(w, args, [("kind", kind)])
    w.header(["replica"] + [f"phi_{p[0]}_{p[1]}" for p in spec.window])
    for i, r in enumerate(rows):
        w.row([i] + [float(v) for v in r])
    w.done()
    return 0


def cmd_verify(args, cfg):
    fn = EXPERIMENTS[args.name]
    cfg = dict(cfg)
    cfg.setdefault("seed", args.seed)
    cfg.setdefault("threads", args.threads)
    report = fn(**cfg)
    w = OutputWriter(args.out)
    w.json(report.as_dict())
    w.done()
    print(report.summary(), file=sys.stderr)
    return 0 if report.verdict else 1


_COMMANDS = {
    "potential": cmd_potential,
    "green": cmd_green,
    "capacity": cmd_capacity,
    "capacity-scan": cmd_capacity_scan,
    "massive-scan": cmd_massive_scan,
    "soup-sample": cmd_soup_sample,
    "tilted-sample": cmd_tilted_sample,
    "massive-sample": cmd_massive_sample,
    "gff-sample": cmd_gff_sample,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    if not args.command:
        ap.print_usage(sys.stderr)
        return 2
    try:
        cfg = _resolve(args)
        return _COMMANDS[args.command](args, cfg)
    except AccuracyError as exc:
        json.dump({"error": "accuracy", "message": str(exc),
                   "achieved_bound": exc.achieved,
                   "requested": exc.requested}, sys.stderr)
        sys.stderr.write("\n")
        return 3
    except (DomainError, FileNotFoundError) as exc:
        json.dump({"error": "usage", "message": str(exc)}, sys.stderr)
        sys.stderr.write("\n")
        return 2
    except (BudgetError, Soup2dError) as exc:
        payload = {"error": "runtime", "message": str(exc)}
        if isinstance(exc, BudgetError):
            payload["acceptance_estimate"] = exc.acceptance_estimate
        json.dump(payload, sys.stderr)
        sys.stderr.write("\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
