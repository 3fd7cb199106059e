"""Experiment suites: fixed instance sets bound to checkable claims.

Every suite assembles a deterministic report — no timestamps, keys sorted at
serialization time, all randomness routed through the configured seed — and a
flat CSV view of the main table.  ``report["pass"]`` is the conjunction of the
suite's assertion records; the CLI turns it into the process exit status.
Rerunning a suite with the same config and seed must reproduce the report
byte for byte.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional

import numpy as np

from .energy import energy
from .maps import builtin_map, certify_conformal, poincare_model, pullback_energy_check
from .space import FiniteMetricSpace, gen_space
from .varprob import (
    capacity,
    check_r1_samples,
    enumerate_arcs,
    eval_reference_function,
    grotzsch_delta,
    isoperimetric_profile,
    modulus,
)


class SuiteError(ValueError):
    pass


@dataclass
class SuiteResult:
    name: str
    report: dict
    csv_header: List[str]
    csv_rows: List[list]

    @property
    def ok(self) -> bool:
        return bool(self.report["pass"])

    def json_bytes(self) -> bytes:
        return (json.dumps(self.report, sort_keys=True,
                           separators=(",", ":")) + "\n").encode()

    def csv_bytes(self) -> bytes:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.csv_header)
        w.writerows(self.csv_rows)
        return buf.getvalue().encode()


def _plain(obj):
    """Recursively convert numpy scalars/arrays so json can serialize."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def _trace_record(label: str, trace, eps: float) -> dict:
    """Convergence and weak-duality facts for one solve, ready to assert on."""
    p = np.asarray(trace.primal, dtype=float)
    d = np.asarray(trace.dual, dtype=float)
    weak = bool(np.all(d <= p + 1e-9)) if p.size else True
    return {
        "instance": label,
        "iters": int(p.size),
        "converged": bool(trace.converged),
        "gapRel": float(trace.gap_rel),
        "dualNeverAbovePrimal": weak,
        "ok": bool(trace.converged and weak and trace.gap_rel <= eps + 1e-12),
    }


def _merged(defaults: dict, config: Optional[dict]) -> dict:
    cfg = dict(defaults)
    for key, value in (config or {}).items():
        if key not in defaults:
            raise SuiteError(f"unknown config key {key!r}; "
                             f"valid: {sorted(defaults)}")
        if value is not None:
            cfg[key] = value
    return cfg


def _finish(name: str, cfg: dict, rows: List[dict], assertions: List[dict],
            header: List[str], csv_rows: List[list],
            extra: Optional[dict] = None) -> SuiteResult:
    report = {"suite": name, "config": _plain(cfg), "rows": _plain(rows),
              "assertions": _plain(assertions),
              "pass": all(a["pass"] for a in assertions)}
    if extra:
        report.update(_plain(extra))
    return SuiteResult(name, report, header, _plain(csv_rows))


# -- individual suites ---------------------------------------------------------


def _suite_rparabolic(config: Optional[dict]) -> SuiteResult:
    """Point-to-far-boundary capacities on growing paths.

    The p=2 sequence must fall hard (ratio last/first <= decay-cap), while the
    p=1 sequence stays flat within flat-tolerance.
    """
    cfg = _merged({"sizes": [8, 16, 32, 64], "ps": [1.0, 2.0], "l": 1.0,
                   "R": 1.0, "S": 1.0, "eps": 1e-6, "decay-cap": 0.6,
                   "flat-tolerance": 0.1, "seed": 0}, config)
    rows, traces = [], []
    values: Dict[float, List[float]] = {}
    for p in cfg["ps"]:
        values[p] = []
        for n in cfg["sizes"]:
            sp = gen_space({"kind": "path", "n": int(n) + 1})
            res = capacity(sp, [0], [int(n)], p=float(p), l=cfg["l"],
                           R=cfg["R"], S=cfg["S"], eps=cfg["eps"])
            rows.append({"n": int(n), "p": float(p), "value": res.value,
                         "lower": res.lower, "iters": len(res.trace.primal)})
            traces.append(_trace_record(f"capacity(path({n}+1),p={p})",
                                        res.trace, cfg["eps"]))
            values[p].append(res.value)
    assertions = []
    if 2.0 in values:
        seq = values[2.0]
        dec = all(seq[i + 1] < seq[i] - 1e-12 for i in range(len(seq) - 1))
        assertions.append({"name": "p2-strictly-decreasing", "pass": dec,
                           "detail": repr(seq)})
        ratio = seq[-1] / seq[0]
        assertions.append({"name": "p2-decay", "pass": ratio <= cfg["decay-cap"],
                           "detail": f"last/first={ratio!r}"})
    if 1.0 in values:
        seq = values[1.0]
        spread = (max(seq) - min(seq)) / max(seq)
        assertions.append({"name": "p1-flat",
                           "pass": spread < cfg["flat-tolerance"],
                           "detail": f"relative spread={spread!r}"})
    assertions.append({"name": "all-traces-converged-weakly-dual",
                       "pass": all(t["ok"] for t in traces),
                       "detail": f"{sum(t['ok'] for t in traces)}/{len(traces)}"})
    header = ["n", "p", "value", "lower", "iters"]
    csv_rows = [[r["n"], r["p"], repr(r["value"]), repr(r["lower"]), r["iters"]]
                for r in rows]
    return _finish("rparabolic", cfg, rows, assertions, header, csv_rows,
                   extra={"traces": traces})


def _diamond(radius: int) -> tuple:
    """L1 ball of the plane grid: the set within ``radius`` of the middle."""
    side = 2 * radius + 1
    g = gen_space({"kind": "grid", "d": 2, "n": side})
    center = radius * side + radius
    keep = np.flatnonzero(g.row(center) <= radius + 1e-9)
    sub = g.restrict([int(i) for i in keep])
    return sub, int(np.flatnonzero(keep == center)[0])


def _suite_parabolicnc(config: Optional[dict]) -> SuiteResult:
    """Energy of the oscillating slow test function on growing plane balls.

    The achieved (packing-realized) energy must grow by less than growth-cap
    per radius doubling; the covering upper bound is reported for context but
    is too multiplicity-inflated to carry the trend assertion.
    """
    cfg = _merged({"sizes": [16, 32, 64], "p": 2.0, "l": 2.0, "R": 1.0,
                   "S": 1.0, "growth-cap": 1.2, "seed": 0}, config)
    rows = []
    prev = None
    for n in cfg["sizes"]:
        sub, center = _diamond(int(n))
        dist = sub.row(center)
        w = eval_reference_function("sin-loglog", np.maximum(dist, 1.0),
                                    l=cfg["l"])
        res = energy(sub, w, p=cfg["p"], l=cfg["l"], R=cfg["R"], S=cfg["S"],
                     mode="bracket")
        growth = None if prev is None else res.value / prev
        rows.append({"n": int(n), "points": sub.n, "achieved": res.value,
                     "coveringUpper": res.upper, "growth": growth})
        prev = res.value
    assertions = [{
        "name": "achieved-energy-growth-per-doubling",
        "pass": all(r["growth"] is None or r["growth"] < cfg["growth-cap"]
                    for r in rows),
        "detail": repr([r["growth"] for r in rows[1:]]),
    }, {
        "name": "bracket-ordered",
        "pass": all(r["achieved"] <= r["coveringUpper"] + 1e-9 for r in rows),
        "detail": "achieved <= covering upper",
    }]
    header = ["n", "points", "achieved", "covering_upper", "growth"]
    csv_rows = [[r["n"], r["points"], repr(r["achieved"]),
                 repr(r["coveringUpper"]),
                 "" if r["growth"] is None else repr(r["growth"])] for r in rows]
    return _finish("parabolicnc", cfg, rows, assertions, header, csv_rows)


def _suite_twisted_r1(config: Optional[dict]) -> SuiteResult:
    """Random hypothesis-satisfying samples of the slow-function drop bound."""
    cfg = _merged({"ls": [1.5, 2.0, 4.0, 10.0], "samples": 100000, "seed": 0},
                  config)
    rows = [check_r1_samples(float(l), int(cfg["samples"]), seed=int(cfg["seed"]))
            for l in cfg["ls"]]
    assertions = [{"name": f"zero-violations-l-{r['l']}",
                   "pass": r["violations"] == 0,
                   "detail": f"violations={r['violations']}, "
                             f"minSlack={r['minSlack']!r}"} for r in rows]
    header = ["l", "samples", "violations", "min_slack"]
    csv_rows = [[r["l"], r["samples"], r["violations"], repr(r["minSlack"])]
                for r in rows]
    extra = {"samples": sum(r["samples"] for r in rows),
             "violations": sum(r["violations"] for r in rows)}
    return _finish("twisted-r1", cfg, rows, assertions, header, csv_rows,
                   extra=extra)


def _functorial_fixtures() -> List[tuple]:
    p12 = gen_space({"kind": "path", "n": 12})
    p10 = gen_space({"kind": "path", "n": 10})
    return [
        ("identity", builtin_map("identity", space=p12), [2.0]),
        ("snowflake-identity",
         builtin_map("snowflake-identity", space=p10, alpha=0.5),
         [1.0, 2.0, 3.0, 4.0]),
        ("qi-embedding", builtin_map("qi-embedding", n=6), [2.0]),
    ]


def _suite_energy_functorial(config: Optional[dict]) -> SuiteResult:
    """Certified pullback bound on random codomain functions, three maps."""
    cfg = _merged({"n-u": 50, "p": 2.0, "seed": 0}, config)
    rows, assertions = [], []
    rng = np.random.default_rng(int(cfg["seed"]))
    for name, f, l_grid in _functorial_fixtures():
        cert = certify_conformal(f, klass="coarse", lp_list=[2.0], R=1.0,
                                 S=1.0, np_cap=1, l_grid=l_grid, seed=0)
        row = cert.rows[0]
        passes = 0
        for _ in range(int(cfg["n-u"])):
            u = rng.uniform(0.0, 1.0, size=f.codomain.n)
            if pullback_energy_check(f, row, u, p=cfg["p"])["pass"]:
                passes += 1
        rows.append({"map": name, "l": row["l"], "lp": row["lp"],
                     "Np": row["Np"], "trials": int(cfg["n-u"]),
                     "passes": passes})
        assertions.append({"name": f"certified-{name}",
                           "pass": cert.verdict == "certifiedAtRange",
                           "detail": cert.verdict})
        assertions.append({"name": f"pullback-100pct-{name}",
                           "pass": passes == int(cfg["n-u"]),
                           "detail": f"{passes}/{cfg['n-u']}"})
    header = ["map", "l", "lp", "Np", "trials", "passes"]
    csv_rows = [[r["map"], r["l"], r["lp"], r["Np"], r["trials"], r["passes"]]
                for r in rows]
    return _finish("energy-functorial", cfg, rows, assertions, header, csv_rows)


def _suite_onepacking_bracket(config: Optional[dict]) -> SuiteResult:
    """greedy <= exact <= covering sandwich on random functions.

    Also pins the one hand-checkable exact value: the straight ramp on the
    7-point path at p=1 and unit windows has energy 4.
    """
    cfg = _merged({"n-u": 100, "ps": [1.0, 2.0], "path-sizes": list(range(7, 16)),
                   "grid-sides": [4, 5, 6], "seed": 0}, config)
    spaces = [(f"path({n})", gen_space({"kind": "path", "n": int(n)}))
              for n in cfg["path-sizes"]]
    spaces += [(f"grid(2,{n})", gen_space({"kind": "grid", "d": 2, "n": int(n)}))
               for n in cfg["grid-sides"]]
    rng = np.random.default_rng(int(cfg["seed"]))
    rows = []
    for label, sp in spaces:
        for p in cfg["ps"]:
            ok = 0
            for _ in range(int(cfg["n-u"])):
                u = rng.uniform(0.0, 1.0, size=sp.n)
                br = energy(sp, u, p=float(p), l=1.0, R=1.0, S=1.0,
                            mode="bracket")
                ex = energy(sp, u, p=float(p), l=1.0, R=1.0, S=1.0,
                            mode="exact")
                if br.value - 1e-9 <= ex.value <= br.upper + 1e-9:
                    ok += 1
            rows.append({"space": label, "p": float(p),
                         "trials": int(cfg["n-u"]), "ok": ok})
    p7 = gen_space({"kind": "path", "n": 7})
    ramp = energy(p7, np.arange(7, dtype=float), p=1.0, l=1.0, R=1.0, S=1.0,
                  mode="exact").value
    assertions = [{
        "name": "bracket-sandwich-100pct",
        "pass": all(r["ok"] == r["trials"] for r in rows),
        "detail": f"{sum(r['ok'] for r in rows)}/{sum(r['trials'] for r in rows)}",
    }, {
        "name": "ramp-path7-p1-value-4",
        "pass": abs(ramp - 4.0) < 1e-9,
        "detail": repr(ramp),
    }]
    header = ["space", "p", "trials", "ok"]
    csv_rows = [[r["space"], r["p"], r["trials"], r["ok"]] for r in rows]
    return _finish("onepacking-bracket", cfg, rows, assertions, header, csv_rows,
                   extra={"rampValue": ramp})


def _suite_poincare_inclusions(config: Optional[dict]) -> SuiteResult:
    """Product-ball inclusions of the radial-times-boundary tree model."""
    cfg = _merged({"arity": 2, "depth": 8, "threshold-cap": 3, "seed": 0},
                  config)
    tree = gen_space({"kind": "tree", "arity": int(cfg["arity"]),
                      "depth": int(cfg["depth"])})
    _, report = poincare_model(tree)
    rows = report["rows"]
    thr = report["threshold"]
    assertions = [{
        "name": "threshold-within-cap",
        "pass": thr is not None and thr <= cfg["threshold-cap"],
        "detail": f"threshold={thr}",
    }, {
        "name": "all-balls-pass-from-threshold",
        "pass": thr is not None and all(
            r["failures"] == 0 for r in rows if r["radius"] >= thr),
        "detail": repr([(r["radius"], r["failures"]) for r in rows]),
    }]
    header = ["radius", "checked", "failures"]
    csv_rows = [[r["radius"], r["checked"], r["failures"]] for r in rows]
    extra = {"threshold": thr, "maxDepth": report["maxDepth"],
             "nLeaves": report["nLeaves"]}
    return _finish("poincare-inclusions", cfg, rows, assertions, header,
                   csv_rows, extra=extra)


def _suite_delta_qi(config: Optional[dict]) -> SuiteResult:
    """Connection invariant across relabelings and the snowflake, with traces.

    For each map the domain delta must stay within Np times the image-side
    value rebuilt from transported arcs; one modulus instance rides along so
    both solver families contribute convergence traces.
    """
    cfg = _merged({"n": 9, "pairs": [[2, 6], [3, 5]], "boundary": [0, 8],
                   "p": 2.0, "eps": 1e-6, "seed": 0}, config)
    n = int(cfg["n"])
    pn = gen_space({"kind": "path", "n": n})
    fixtures = [
        ("identity", builtin_map("identity", space=pn), [2.0]),
        ("reversal", builtin_map("user", domain=pn, codomain=pn,
                                 mapping=[n - 1 - i for i in range(n)]), [2.0]),
        ("snowflake-identity",
         builtin_map("snowflake-identity", space=pn, alpha=0.5),
         [1.0, 2.0, 3.0, 4.0]),
    ]
    bd = [int(b) for b in cfg["boundary"]]
    rows, traces = [], []
    for name, f, l_grid in fixtures:
        row = certify_conformal(f, klass="coarse", lp_list=[2.0], R=1.0, S=1.0,
                                np_cap=1, l_grid=l_grid, seed=0).rows[0]
        cod_bd = sorted(int(f.mapping[b]) for b in bd)
        for x1, x2 in cfg["pairs"]:
            lhs = grotzsch_delta(f.domain, int(x1), int(x2), boundary=bd,
                                 p=cfg["p"], l=row["l"], R=row["R"],
                                 S=row["S"], eps=cfg["eps"])
            traces.append(_trace_record(f"delta({name},{x1},{x2})-domain",
                                        lhs.capacity.trace, cfg["eps"]))
            best = None
            for k, arc in enumerate(enumerate_arcs(f.domain, int(x1), int(x2))):
                img = sorted({int(f.mapping[i]) for i in arc})
                res = capacity(f.codomain, img, cod_bd, p=cfg["p"],
                               l=row["lp"], R=row["Rp"] or row["R"],
                               S=float("inf"), eps=cfg["eps"])
                traces.append(_trace_record(
                    f"capacity({name},{x1},{x2})-image-arc{k}", res.trace,
                    cfg["eps"]))
                if best is None or res.value < best:
                    best = res.value
            ok = lhs.value <= row["Np"] * best + 1e-9 * max(1.0, best)
            rows.append({"map": name, "x1": int(x1), "x2": int(x2),
                         "lhs": lhs.value, "rhs": best, "Np": row["Np"],
                         "pass": bool(ok)})
    arcs = enumerate_arcs(pn, int(cfg["pairs"][0][0]), int(cfg["pairs"][0][1]))
    mres = modulus(pn, arcs, p=cfg["p"], l=1.0, R=1.0, S=1.0, eps=cfg["eps"])
    traces.append(_trace_record("modulus(path,arc-family)", mres.trace,
                                cfg["eps"]))
    assertions = [{
        "name": "delta-within-certified-multiple",
        "pass": all(r["pass"] for r in rows),
        "detail": f"{sum(r['pass'] for r in rows)}/{len(rows)}",
    }, {
        "name": "modulus-certified",
        "pass": bool(mres.certified),
        "detail": f"value={mres.value!r}, lower={mres.lower!r}",
    }, {
        "name": "all-traces-converged-weakly-dual",
        "pass": all(t["ok"] for t in traces),
        "detail": f"{sum(t['ok'] for t in traces)}/{len(traces)}",
    }]
    header = ["map", "x1", "x2", "lhs", "rhs", "np", "pass"]
    csv_rows = [[r["map"], r["x1"], r["x2"], repr(r["lhs"]), repr(r["rhs"]),
                 r["Np"], r["pass"]] for r in rows]
    return _finish("delta-qi", cfg, rows, assertions, header, csv_rows,
                   extra={"traces": traces,
                          "modulus": {"value": mres.value, "lower": mres.lower,
                                      "certified": mres.certified}})


_K4 = {"kind": "explicit",
       "dist": [[0, 1, 1, 1], [1, 0, 1, 1], [1, 1, 0, 1], [1, 1, 1, 0]]}


def _suite_isoperimetric(config: Optional[dict]) -> SuiteResult:
    """Exact edge-boundary profiles on the three reference graphs."""
    cfg = _merged({"seed": 0}, config)
    fixtures = [("K4", gen_space(_K4)), ("C6", gen_space({"kind": "cycle", "n": 6})),
                ("grid(2,4)", gen_space({"kind": "grid", "d": 2, "n": 4}))]
    rows = []
    cited = {("K4", 1): 3, ("C6", 2): 2, ("grid(2,4)", 4): 4}
    cited_ok = {}
    greedy_ok = True
    for label, sp in fixtures:
        exact = isoperimetric_profile(sp, mode="exact")
        greedy = isoperimetric_profile(sp, mode="greedy")
        for v, e_val, g_val in zip(exact.volumes, exact.values, greedy.values):
            rows.append({"space": label, "volume": int(v), "exact": int(e_val),
                         "greedy": int(g_val)})
            if g_val < e_val:
                greedy_ok = False
            if (label, v) in cited:
                cited_ok[(label, v)] = (e_val == cited[(label, v)])
    assertions = [{
        "name": f"cited-value-{label}-v{v}",
        "pass": ok, "detail": f"expected {cited[(label, v)]}",
    } for (label, v), ok in sorted(cited_ok.items())]
    assertions.append({"name": "greedy-never-below-exact", "pass": greedy_ok,
                       "detail": ""})
    assertions.append({"name": "all-cited-values-checked",
                       "pass": len(cited_ok) == len(cited), "detail": ""})
    header = ["space", "volume", "exact", "greedy"]
    csv_rows = [[r["space"], r["volume"], r["exact"], r["greedy"]] for r in rows]
    return _finish("isoperimetric", cfg, rows, assertions, header, csv_rows)


SUITES: Dict[str, Callable[[Optional[dict]], SuiteResult]] = {
    "rparabolic": _suite_rparabolic,
    "parabolicnc": _suite_parabolicnc,
    "twisted-r1": _suite_twisted_r1,
    "energy-functorial": _suite_energy_functorial,
    "onepacking-bracket": _suite_onepacking_bracket,
    "poincare-inclusions": _suite_poincare_inclusions,
    "delta-qi": _suite_delta_qi,
    "isoperimetric": _suite_isoperimetric,
}


def run_suite(name: str, config: Optional[dict] = None) -> SuiteResult:
    if name not in SUITES:
        raise SuiteError(f"unknown suite {name!r}; valid suites: "
                         + ", ".join(sorted(SUITES)))
    return SUITES[name](config)


def write_reports(result: SuiteResult, json_path: str, csv_path: str) -> None:
    with open(json_path, "wb") as fh:
        fh.write(result.json_bytes())
    with open(csv_path, "wb") as fh:
        fh.write(result.csv_bytes())
