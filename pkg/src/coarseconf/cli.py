"""Command-line front end.

Subcommands: ``gen`` (space files), the solvers (``energy``, ``capacity``,
``modulus``, ``delta``), map certification (``certify``), the parabolicity
``probe``, and the experiment ``suite`` runner.  All JSON output is emitted
with sorted keys and full-precision (shortest round-trip) decimals, so
identical inputs produce identical bytes.

Exit status: 0 on success, 1 when a suite assertion or solver convergence
fails, 2 for usage and input errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import List, Optional

import numpy as np

from .energy import EnergyError, energy
from .maps import MapError, builtin_map, certify_conformal
from .packing import PackingError
from .space import SpaceError, gen_space, load_space, save_space
from .suites import SuiteError, run_suite, write_reports
from .varprob import NonConvergence, VarProbError, capacity, grotzsch_delta, \
    modulus, parabolicity_probe

_USER_ERRORS = (SpaceError, PackingError, EnergyError, VarProbError, MapError,
                SuiteError, FileNotFoundError, json.JSONDecodeError, ValueError)


def _dump(obj, out: Optional[str]) -> None:
    text = json.dumps(obj, sort_keys=True, separators=(",", ":")) + "\n"
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _int_list(text: str) -> List[int]:
    if not text.strip():
        return []
    return [int(tok) for tok in text.replace(",", " ").split()]


def _float_list(text: str) -> List[float]:
    if not text.strip():
        return []
    return [float(tok) for tok in text.replace(",", " ").split()]


def _json_value(text: str):
    """A config value from the command line: JSON if it parses, else a
    comma list of numbers, else the bare string."""
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        pass
    toks = [t for t in text.replace(",", " ").split() if t]
    if len(toks) > 1 or "," in text:
        out = []
        for t in toks:
            try:
                f = float(t)
                out.append(int(f) if f.is_integer() else f)
            except ValueError:
                out.append(t)
        return out
    return text


def _add_window_flags(sub, with_mode: bool = False) -> None:
    sub.add_argument("--p", type=float, default=2.0)
    sub.add_argument("--q", type=float, default=None,
                     help="secondary exponent where a command uses one")
    sub.add_argument("--l", type=float, default=1.0)
    sub.add_argument("--R", type=float, default=1.0)
    sub.add_argument("--S", type=float, default=1.0)
    if with_mode:
        sub.add_argument("--mode", choices=["exact", "greedy", "bracket"],
                         default="exact")


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="coarseconf")
    sp = ap.add_subparsers(dest="command", required=True)

    g = sp.add_parser("gen", help="generate a space file")
    g.add_argument("--spec", default=None, help="full generator JSON")
    g.add_argument("--kind", default=None)
    g.add_argument("--n", type=int, default=None)
    g.add_argument("--d", type=int, default=None)
    g.add_argument("--arity", type=int, default=None)
    g.add_argument("--depth", type=int, default=None)
    g.add_argument("--alpha", type=float, default=None)
    g.add_argument("--offset", type=int, default=None)
    g.add_argument("--out", required=True)

    e = sp.add_parser("energy", help="packing-supremum p-energy of a function")
    e.add_argument("--space", required=True)
    e.add_argument("--u", required=True, help="JSON file with one value per point")
    _add_window_flags(e, with_mode=True)
    e.add_argument("--out", default=None)

    c = sp.add_parser("capacity", help="capacity of a point set toward a boundary")
    c.add_argument("--space", required=True)
    c.add_argument("--K", required=True, help="comma list of point ids")
    c.add_argument("--boundary", default="", help="comma list of point ids")
    _add_window_flags(c)
    c.add_argument("--eps", type=float, default=1e-6)
    c.add_argument("--max-iter", type=int, default=10000)
    c.add_argument("--out", default=None)

    m = sp.add_parser("modulus", help="modulus of a curve family")
    m.add_argument("--space", required=True)
    m.add_argument("--curves", required=True,
                   help="JSON file: list of point-id lists")
    _add_window_flags(m)
    m.add_argument("--target-dim", type=int, default=1)
    m.add_argument("--eps", type=float, default=1e-6)
    m.add_argument("--pattern-cap", type=int, default=4096)
    m.add_argument("--out", default=None)

    d = sp.add_parser("delta", help="connection invariant between two points")
    d.add_argument("--space", required=True)
    d.add_argument("--x1", type=int, required=True)
    d.add_argument("--x2", type=int, required=True)
    d.add_argument("--boundary", default="")
    _add_window_flags(d)
    d.add_argument("--max-geodesics", type=int, default=64)
    d.add_argument("--detour", type=float, default=0.0)
    d.add_argument("--eps", type=float, default=1e-6)
    d.add_argument("--out", default=None)

    f = sp.add_parser("certify", help="conformality certificate for a map")
    f.add_argument("--map", required=True,
                   help="identity | snowflake-identity | power | qi-embedding |"
                        " grid-embedding | horospherical")
    f.add_argument("--space", default=None,
                   help="domain file for kinds that act on a given space")
    f.add_argument("--map-args", default="{}", help="JSON extra parameters")
    f.add_argument("--class", dest="klass", default="coarse",
                   choices=["coarse", "uniform", "rough", "largeScale"])
    f.add_argument("--lp", default="1,2", help="comma list of image scales")
    f.add_argument("--R", type=float, default=1.0)
    f.add_argument("--S", type=float, default=None)
    f.add_argument("--r-prime", type=float, default=None)
    f.add_argument("--np-cap", type=int, default=1)
    f.add_argument("--l-cap", type=float, default=64.0)
    f.add_argument("--l-grid", default=None, help="explicit comma list of scales")
    f.add_argument("--max-packings", type=int, default=64)
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--out", default=None)

    pr = sp.add_parser("probe", help="parabolicity probe across an exhaustion")
    pr.add_argument("--spaces", required=True, help="comma list of space files")
    _add_window_flags(pr)
    pr.add_argument("--labels", default=None, help="comma list of exhaustion labels")
    pr.add_argument("--eps", type=float, default=None,
                    help="smallness threshold for the verdict")
    pr.add_argument("--solver-eps", type=float, default=1e-6)
    pr.add_argument("--out", default=None)

    s = sp.add_parser("suite", help="run an experiment suite")
    s.add_argument("--name", required=True)
    s.add_argument("--config", default=None, help="flat JSON config file")
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override one config key (repeatable)")
    s.add_argument("--out-dir", default=".")
    return ap


def _cmd_gen(args) -> int:
    spec = json.loads(args.spec) if args.spec else {}
    for key in ("kind", "n", "d", "arity", "depth", "alpha", "offset"):
        val = getattr(args, key)
        if val is not None:
            spec[key] = val
    space = gen_space(spec)
    save_space(space, args.out)
    _dump({"written": args.out, "kind": space.kind, "n": space.n}, None)
    return 0


def _cmd_energy(args) -> int:
    space = load_space(args.space)
    with open(args.u) as fh:
        u = np.asarray(json.load(fh), dtype=float)
    res = energy(space, u, p=args.p, l=args.l, R=args.R, S=args.S,
                 mode=args.mode)
    _dump(res.as_dict(), args.out)
    return 0


def _cmd_capacity(args) -> int:
    space = load_space(args.space)
    res = capacity(space, _int_list(args.K), _int_list(args.boundary),
                   p=args.p, l=args.l, R=args.R, S=args.S, eps=args.eps,
                   max_iter=args.max_iter)
    _dump(res.as_dict(), args.out)
    return 0


def _cmd_modulus(args) -> int:
    space = load_space(args.space)
    with open(args.curves) as fh:
        curves = json.load(fh)
    res = modulus(space, curves, p=args.p, l=args.l, R=args.R, S=args.S,
                  target_dim=args.target_dim, eps=args.eps,
                  pattern_cap=args.pattern_cap)
    _dump(res.as_dict(), args.out)
    return 0


def _cmd_delta(args) -> int:
    space = load_space(args.space)
    res = grotzsch_delta(space, args.x1, args.x2,
                         boundary=_int_list(args.boundary) or None,
                         p=args.p, l=args.l, R=args.R, S=args.S,
                         max_geodesics=args.max_geodesics, detour=args.detour,
                         eps=args.eps)
    _dump(res.as_dict(), args.out)
    return 0


def _cmd_certify(args) -> int:
    params = json.loads(args.map_args)
    if args.space:
        params.setdefault("space", load_space(args.space))
    f = builtin_map(args.map, **params)
    l_grid = _float_list(args.l_grid) if args.l_grid else None
    cert = certify_conformal(f, klass=args.klass, lp_list=_float_list(args.lp),
                             R=args.R, S=args.S, r_prime=args.r_prime,
                             np_cap=args.np_cap, l_cap=args.l_cap,
                             l_grid=l_grid, max_packings=args.max_packings,
                             seed=args.seed)
    _dump(cert.as_dict(), args.out)
    return 0


def _cmd_probe(args) -> int:
    spaces = [load_space(path) for path in args.spaces.split(",") if path]
    labels = _float_list(args.labels) if args.labels else None
    res = parabolicity_probe(spaces, p=args.p, l=args.l, R=args.R, S=args.S,
                             labels=labels, eps=args.eps,
                             solver_eps=args.solver_eps)
    _dump(res.as_dict(), args.out)
    return 0


def _cmd_suite(args) -> int:
    config = {}
    if args.config:
        with open(args.config) as fh:
            config = json.load(fh)
        if not isinstance(config, dict):
            raise SuiteError("config file must hold one flat JSON object")
    for item in args.set:
        if "=" not in item:
            raise SuiteError(f"--set expects KEY=VALUE, got {item!r}")
        key, _, value = item.partition("=")
        config[key] = _json_value(value)
    if args.seed is not None:
        config["seed"] = args.seed
    result = run_suite(args.name, config)
    os.makedirs(args.out_dir, exist_ok=True)
    json_path = os.path.join(args.out_dir, f"{args.name}.json")
    csv_path = os.path.join(args.out_dir, f"{args.name}.csv")
    write_reports(result, json_path, csv_path)
    _dump({"suite": args.name, "pass": result.ok,
           "json": json_path, "csv": csv_path}, None)
    return 0 if result.ok else 1


_COMMANDS = {
    "gen": _cmd_gen,
    "energy": _cmd_energy,
    "capacity": _cmd_capacity,
    "modulus": _cmd_modulus,
    "delta": _cmd_delta,
    "certify": _cmd_certify,
    "probe": _cmd_probe,
    "suite": _cmd_suite,
}


def main(argv: Optional[List[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except NonConvergence as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except _USER_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
