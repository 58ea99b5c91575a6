"""Batch runner: one JSON config (or flags) in, CSV / JSON-lines / report files out.

Exit codes: 0 success, 2 a physics assertion failed, 3 precondition or geometry error,
4 config error.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from . import dense, markov, stab, suites, tee
from .circuits import invert, random_shallow_clifford
from .lattice import GeometryError, Lattice, regions_from_json

EXIT_OK, EXIT_PHYSICS, EXIT_PRECONDITION, EXIT_CONFIG = 0, 2, 3, 4
EXPERIMENTS = ("bound", "audit", "mixture", "deformation", "appendix-e", "markov", "gamma-min", "lemma1")
ENGINES = ("stabilizer", "dense", "both")


class ConfigError(ValueError):
    pass


# --- config ---------------------------------------------------------------------------------------


@dataclass
class Tolerances:
    record: float = tee.RECORD_TOL
    dense_margin: float = tee.DENSE_MARGIN_TOL
    fact: float = tee.FACT_TOL
    premise: float = markov.PREMISE_TOL
    conclusion: float = markov.CONCLUSION_TOL


@dataclass
class Outputs:
    csv: str | None = None
    jsonl: str | None = None
    report: str | None = None


@dataclass
class RunConfig:
    experiment: str
    engine: str = "stabilizer"
    reference: dict = field(default_factory=lambda: {"kind": "toric_code", "rows": 12, "cols": 12})
    partition: dict | list | None = None
    circuit: dict = field(default_factory=lambda: {"kind": "clifford", "depth": 1})
    seeds: list = field(default_factory=lambda: [0])
    probs: list = field(default_factory=lambda: [0.25, 0.25, 0.25, 0.25])
    n_partitions: int = 5
    count: int = 30
    widths: list | None = None  # default: the widths in 3..5 whose annulus fits the lattice
    gates: str = "two"
    workers: int = 1
    tolerances: Tolerances = field(default_factory=Tolerances)
    output: Outputs = field(default_factory=Outputs)


_TYPES = {
    "experiment": str, "engine": str, "reference": dict, "partition": (dict, list, type(None)),
    "circuit": dict, "seeds": (list, str, int), "probs": list, "n_partitions": int, "count": int,
    "widths": (list, type(None)), "gates": str, "workers": int, "tolerances": dict, "output": dict,
}


def parse_seeds(value, where: str = "seeds") -> list[int]:
    """``[0, 1, 5]``, ``7`` or ``"0..99"`` (inclusive range)."""
    if isinstance(value, bool):
        raise ConfigError(f"{where}: expected a list, an integer or 'a..b'")
    if isinstance(value, int):
        return [value]
    if isinstance(value, str):
        try:
            if ".." in value:
                a, b = value.split("..")
                lo, hi = int(a), int(b)
                if hi < lo:
                    raise ValueError
                return list(range(lo, hi + 1))
            return [int(v) for v in value.split(",")]
        except ValueError:
            raise ConfigError(f"{where}: cannot parse {value!r} (use 'a..b' or a comma list)") from None
    out = []
    for i, v in enumerate(value):
        if isinstance(v, bool) or not isinstance(v, int):
            raise ConfigError(f"{where}[{i}]: expected an integer, got {v!r}")
        out.append(v)
    return out


def _sub(cls, doc, where: str):
    if not isinstance(doc, dict):
        raise ConfigError(f"{where}: expected an object")
    names = {f.name for f in fields(cls)}
    for key in doc:
        if key not in names:
            raise ConfigError(f"{where}.{key}: unknown key")
    kwargs = {}
    for f in fields(cls):
        if f.name in doc:
            v = doc[f.name]
            if cls is Tolerances and (isinstance(v, bool) or not isinstance(v, (int, float)) or v < 0):
                raise ConfigError(f"{where}.{f.name}: expected a nonnegative number")
            if cls is Outputs and v is not None and not isinstance(v, str):
                raise ConfigError(f"{where}.{f.name}: expected a path string")
            kwargs[f.name] = v
    return cls(**kwargs)


def load_config(doc: dict) -> RunConfig:
    """Validate a config document; every problem names the offending field path."""
    if not isinstance(doc, dict):
        raise ConfigError("config: expected a JSON object")
    for key in doc:
        if key not in _TYPES:
            raise ConfigError(f"config.{key}: unknown key")
    if "experiment" not in doc:
        raise ConfigError("config.experiment: required")
    for key, typ in _TYPES.items():
        if key in doc and (not isinstance(doc[key], typ) or isinstance(doc[key], bool)):
            raise ConfigError(f"config.{key}: wrong type {type(doc[key]).__name__}")
    kw = dict(doc)
    if kw["experiment"] not in EXPERIMENTS:
        raise ConfigError(f"config.experiment: must be one of {', '.join(EXPERIMENTS)}")
    if kw.get("engine", "stabilizer") not in ENGINES:
        raise ConfigError(f"config.engine: must be one of {', '.join(ENGINES)}")
    kw["seeds"] = parse_seeds(kw.get("seeds", [0]), "config.seeds")
    kw["tolerances"] = _sub(Tolerances, kw.get("tolerances", {}), "config.tolerances")
    kw["output"] = _sub(Outputs, kw.get("output", {}), "config.output")
    ref = kw.get("reference", {"kind": "toric_code", "rows": 12, "cols": 12})
    try:
        tee.ReferenceDescriptor.from_dict(ref)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"config.reference: {exc}") from None
    circ = kw.get("circuit", {"kind": "clifford", "depth": 1})
    allowed = {"kind", "depth", "seed", "restrict_to", "collar", "circuit"}
    for key in circ:
        if key not in allowed:
            raise ConfigError(f"config.circuit.{key}: unknown key")
    if circ.get("kind", "clifford") not in ("identity", "clifford", "haar", "explicit"):
        raise ConfigError("config.circuit.kind: must be identity, clifford, haar or explicit")
    depth = circ.get("depth", 1)
    depths = depth if isinstance(depth, list) else [depth]
    for i, d in enumerate(depths):
        if isinstance(d, bool) or not isinstance(d, int) or d < 0:
            raise ConfigError(f"config.circuit.depth[{i}]: expected a nonnegative integer")
    probs = kw.get("probs", [0.25] * 4)
    if len(probs) != 4 or any(isinstance(p, bool) or not isinstance(p, (int, float)) or p < 0 for p in probs) \
            or abs(sum(probs) - 1) > 1e-12:
        raise ConfigError("config.probs: need four nonnegative numbers summing to 1")
    if kw.get("workers", 1) < 1:
        raise ConfigError("config.workers: must be >= 1")
    parts = kw.get("partition")
    if parts is not None:
        for i, p in enumerate(parts if isinstance(parts, list) else [parts]):
            if not isinstance(p, dict):
                raise ConfigError(f"config.partition[{i}]: expected an object")
            kind = p.get("kind", "square")
            need = {"square": {"center", "r_in", "r_out"}, "cross": {"vertex"}, "ring": {"vertex"}}.get(kind)
            if need is None:
                raise ConfigError(f"config.partition[{i}].kind: unknown partition kind {kind!r}")
            extra = set(p) - need - {"kind", "arcs"}
            if extra:
                raise ConfigError(f"config.partition[{i}].{sorted(extra)[0]}: unknown key")
            missing = need - set(p)
            if missing:
                raise ConfigError(f"config.partition[{i}].{sorted(missing)[0]}: required")
    return RunConfig(**kw)


# --- runners ---------------------------------------------------------------------------------------


@dataclass
class Outcome:
    status: int
    lines: list[str]
    report: dict


def _reference(cfg: RunConfig) -> tee.ReferenceDescriptor:
    return tee.ReferenceDescriptor.from_dict(cfg.reference)


def _partitions(cfg: RunConfig, lattice: Lattice) -> list:
    if cfg.partition is None:
        center = [lattice.rows // 2, lattice.cols // 2]
        widths = cfg.widths
        if widths is None:
            widths = [w for w in (3, 4, 5) if 2 * (2 + w) + 1 <= min(lattice.rows, lattice.cols)]
            if not widths:
                raise GeometryError(f"no default annulus of width 3..5 fits a {lattice.rows}x{lattice.cols} torus")
        return [{"kind": "square", "center": center, "r_in": 2, "r_out": 2 + w,
                 "arcs": [45.0, 135.0, 225.0, 315.0]} for w in widths]
    return cfg.partition if isinstance(cfg.partition, list) else [cfg.partition]


def _circuit_specs(cfg: RunConfig) -> list[dict]:
    d = cfg.circuit.get("depth", 1)
    if isinstance(d, list):
        return [{**cfg.circuit, "depth": x} for x in d]
    return [dict(cfg.circuit)]


def _bound_job(args):
    ref_doc, circ, part, seed, engine = args
    ref = tee.ReferenceDescriptor.from_dict(ref_doc)
    return tee.tee_bound_experiment(ref, circ, part, seed, engine)


def run_bound(cfg: RunConfig) -> Outcome:
    ref = _reference(cfg)
    engines = ["stabilizer", "dense"] if cfg.engine == "both" else [cfg.engine]
    jobs = [(cfg.reference, circ, part, seed, eng)
            for part in _partitions(cfg, ref.lattice)
            for circ in _circuit_specs(cfg)
            for seed in cfg.seeds
            for eng in engines]
    if cfg.workers > 1:
        with ProcessPoolExecutor(cfg.workers) as pool:
            records = list(pool.map(_bound_job, jobs))
    else:
        records = [_bound_job(j) for j in jobs]
    tol = cfg.tolerances.dense_margin
    bad = [r for r in records if r.precondition_ok and r.margin < -(tol if r.engine == "dense" else 0.0)]
    flagged = [r for r in records if not r.precondition_ok]
    write_records(records, cfg.output)
    lines = [f"{len(records)} runs, {len(bad)} bound violations, {len(flagged)} with violated preconditions"]
    lines += format_summary(summarize_records([r.csv_row() for r in records]))
    status = EXIT_PHYSICS if bad else EXIT_PRECONDITION if flagged else EXIT_OK
    report = {"runs": len(records), "violations": [json.loads(r.to_json()) for r in bad],
              "precondition_flagged": len(flagged),
              "min_margin": min((r.margin for r in records), default=None)}
    return Outcome(status, lines, report)


def write_records(records, out: Outputs) -> None:
    """CSV and JSON-lines are deterministic; wall times go to a sidecar next to the CSV."""
    if out.csv:
        with open(out.csv, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=tee.CSV_COLUMNS, lineterminator="\n")
            w.writeheader()
            for r in records:
                w.writerow(r.csv_row())
        with open(out.csv + ".timing.json", "w") as fh:
            json.dump({"wall_time": [r.wall_time for r in records], "written_at": time.time()}, fh)
    if out.jsonl:
        with open(out.jsonl, "w") as fh:
            for r in records:
                fh.write(r.to_json() + "\n")


def run_audit(cfg: RunConfig) -> Outcome:
    ref = _reference(cfg)
    rep = tee.reference_state_audit(ref, cfg.n_partitions, cfg.seeds[0], partitions=cfg.partition and _partitions(cfg, ref.lattice))
    lines = [f"audit {'PASS' if rep.passed else 'FAIL'}: CMI bits {rep.cmi_bits}, "
             f"expected {rep.expected_bits}, {len(rep.mutual_information_bits)} MI pairs"] + rep.failures
    doc = {k: v for k, v in rep.__dict__.items() if k != "wall_time"}
    return Outcome(EXIT_OK if rep.passed else EXIT_PHYSICS, lines, doc)


def run_mixture(cfg: RunConfig) -> Outcome:
    ref = _reference(cfg)
    parts = _partitions(cfg, ref.lattice)
    lines, docs, ok = [], [], True
    for part in parts:
        for seed in cfg.seeds:
            rep = tee.anyon_mixture_check(ref, part, cfg.circuit, cfg.probs, seed, cfg.engine)
            ok &= rep["passed"]
            docs.append(rep)
            for eng, c in rep["checks"].items():
                lines.append(f"mixture seed {seed} [{eng}] {'PASS' if rep['passed'] else 'FAIL'}: "
                             f"S(lambda)-S(sigma) = {c['entropy_difference']:.12g}, H(p) = {rep['shannon']:.12g}, "
                             f"I_sigma = {c['cmi_sigma']:.12g}")
    return Outcome(EXIT_OK if ok else EXIT_PHYSICS, lines, {"runs": docs})


def run_deformation(cfg: RunConfig) -> Outcome:
    ref = _reference(cfg)
    lines, docs, ok = [], [], True
    for part in _partitions(cfg, ref.lattice):
        for circ in _circuit_specs(cfg):
            for seed in cfg.seeds:
                rep = tee.deformation_chain_check(ref, circ, part, seed)
                ok &= rep["passed"]
                docs.append({"seed": seed, "depth": circ.get("depth"), **rep})
                lines.append(f"deformation seed {seed} depth {circ.get('depth')} {'PASS' if rep['passed'] else 'FAIL'}: "
                             f"CMI bits {rep['cmi_bits']}")
    return Outcome(EXIT_OK if ok else EXIT_PHYSICS, lines, {"runs": docs})


def run_appendix_e(cfg: RunConfig) -> Outcome:
    ref = tee.ReferenceDescriptor.from_dict({**cfg.reference, "rows": max(cfg.reference.get("rows", 8), 6),
                                             "cols": max(cfg.reference.get("cols", 8), 6)})
    part, circ, P = tee.appendix_e_instance(ref.lattice, gates=cfg.gates, seed=cfg.seeds[0])
    rep = tee.appendix_e_fact_checks(ref, part, circ, P, tol=cfg.tolerances.fact)
    lines = [f"{name}: {'PASS' if f['passed'] else 'FAIL'}" for name, f in rep["facts"].items()]
    lines.append(f"cross-engine: {'PASS' if rep['cross_ok'] else 'FAIL'}")
    rep = {k: v for k, v in rep.items() if k != "wall_time"}
    return Outcome(EXIT_OK if rep["passed"] else EXIT_PHYSICS, lines, rep)


def run_markov(cfg: RunConfig) -> Outcome:
    rep = suites.markov_suite(cfg.count, cfg.seeds[0], cfg.tolerances.premise)
    moves = suites.moves_suite(cfg.tolerances.conclusion)
    ok = rep["prop1_ok"] and rep["chains_ok"] and all(m["passed"] for m in moves)
    lines = [
        f"local/global Markov agreement: {'PASS' if rep['prop1_ok'] else 'FAIL'} over "
        f"{sum(r['blockings'] for r in rep['states'])} blockings of {len(rep['states'])} states",
        f"canonical chains: {'PASS' if rep['chains_ok'] else 'FAIL'} ({len(rep['chains'])} chains)",
    ] + [f"{m['variant']}: {'PASS' if m['passed'] else 'FAIL'} distance {m['distance']:.3e}" for m in moves]
    return Outcome(EXIT_OK if ok else EXIT_PHYSICS, lines, {**rep, "moves": moves})


def run_gamma_min(cfg: RunConfig) -> Outcome:
    ref = _reference(cfg)
    depth = cfg.circuit.get("depth", 2)
    V = random_shallow_clifford(ref.lattice, depth if isinstance(depth, int) else depth[0], cfg.seeds[0])
    cands = {"identity": random_shallow_clifford(ref.lattice, 0, 0), "inverse": invert(V)}
    ladder = _partitions(cfg, ref.lattice)
    rep = tee.gamma_min_estimate(ref, V, cands, ladder)
    lines = [f"R={r['R']}: min gamma = {r['minimum']:.12g} by {r['argmin']}"
             + (f" (outside the shallow regime: {', '.join(r['below_gamma0_flagged'])})" if r["below_gamma0_flagged"] else "")
             for r in rep["rows"]]
    status = EXIT_PHYSICS if not rep["passed"] else EXIT_PRECONDITION if rep["flagged"] else EXIT_OK
    return Outcome(status, lines, rep)


def run_lemma1(cfg: RunConfig) -> Outcome:
    insts = suites.lemma1_instances(9, 10, cfg.seeds[0], appendix_e=cfg.gates != "none")
    lines = [f"{x['name']}: {'PASS' if x['passed'] else 'FAIL'} gap {x['gap']:.3e}" for x in insts]
    ok = all(x["passed"] for x in insts)
    return Outcome(EXIT_OK if ok else EXIT_PHYSICS, lines, {"instances": insts})


RUNNERS = {
    "bound": run_bound, "audit": run_audit, "mixture": run_mixture, "deformation": run_deformation,
    "appendix-e": run_appendix_e, "markov": run_markov, "gamma-min": run_gamma_min, "lemma1": run_lemma1,
}


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (frozenset, set)):
        return sorted(_jsonable(v) for v in x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, np.bool_):
        return bool(x)
    if hasattr(x, "to_dict"):
        return _jsonable(x.to_dict())
    return x


def run(cfg: RunConfig, stream=None) -> int:
    """Execute a validated config; returns the exit code."""
    stream = stream or sys.stdout
    try:
        out = RUNNERS[cfg.experiment](cfg)
    except (tee.PreconditionError, tee.AuditError, GeometryError, tee.PathRoutingError) as exc:
        print(f"precondition error: {exc}", file=stream)
        return EXIT_PRECONDITION
    except (tee.EngineMismatchError, dense.ResourceLimitError) as exc:
        print(f"config error: {exc}", file=stream)
        return EXIT_CONFIG
    for line in out.lines:
        print(line, file=stream)
    if cfg.output.report:
        with open(cfg.output.report, "w") as fh:
            json.dump(_jsonable(out.report), fh, indent=1, sort_keys=True)
    return out.status


# --- summarize -------------------------------------------------------------------------------------


def read_rows(paths) -> tuple[list[dict], list[str]]:
    """Rows from result CSVs; malformed rows are reported as 'path:line: reason'."""
    rows, errors = [], []
    for path in paths:
        try:
            fh = open(path, newline="")
        except OSError as exc:
            errors.append(f"{path}:0: {exc.strerror}")
            continue
        with fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None:
                continue
            missing = {"depth", "width", "margin", "margin_log2"} - set(reader.fieldnames)
            if missing:
                errors.append(f"{path}:1: missing columns {sorted(missing)}")
                continue
            for row in reader:
                line = reader.line_num
                try:
                    rows.append({"depth": int(row["depth"]), "width": int(row["width"]),
                                 "margin": float(row["margin"]), "margin_log2": float(row["margin_log2"])})
                except (TypeError, ValueError):
                    errors.append(f"{path}:{line}: malformed row")
    return rows, errors


def summarize_records(rows) -> list[dict]:
    """Per-(depth, width) count, min and mean margin, in nats and log-2 units."""
    groups: dict = {}
    for r in rows:
        groups.setdefault((int(r["depth"]), int(r["width"])), []).append((float(r["margin"]), float(r["margin_log2"])))
    table = []
    for (d, w), vals in sorted(groups.items()):
        nats = [v[0] for v in vals]
        bits = [v[1] for v in vals]
        table.append({"depth": d, "width": w, "n": len(vals), "min_margin": min(nats), "mean_margin": sum(nats) / len(nats),
                      "min_margin_log2": min(bits), "mean_margin_log2": sum(bits) / len(bits)})
    return table


def format_summary(table) -> list[str]:
    head = f"{'depth':>5} {'width':>5} {'n':>5} {'min':>12} {'mean':>12} {'min_log2':>10} {'mean_log2':>10}"
    lines = [head]
    for t in table:
        lines.append(f"{t['depth']:>5} {t['width']:>5} {t['n']:>5} {t['min_margin']:>12.6f} {t['mean_margin']:>12.6f} "
                     f"{t['min_margin_log2']:>10.4f} {t['mean_margin_log2']:>10.4f}")
    return lines


def summarize(paths, stream=None) -> int:
    stream = stream or sys.stdout
    rows, errors = read_rows(paths)
    for line in format_summary(summarize_records(rows)):
        print(line, file=stream)
    for e in errors:
        print(e, file=stream)
    return EXIT_CONFIG if errors else EXIT_OK


# --- argument parsing --------------------------------------------------------------------------------

_COMMANDS = {"audit": "audit", "bound": "bound", "mixture": "mixture", "deform": "deformation",
             "appendix-e": "appendix-e", "markov": "markov", "gamma-min": "gamma-min", "lemma1": "lemma1"}


class _Parser(argparse.ArgumentParser):
    """Usage errors are config errors (exit 4), not argparse's default 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"config error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def _parser() -> argparse.ArgumentParser:
    p = _Parser(prog="teebound", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in _COMMANDS:
        s = sub.add_parser(name)
        if name == "markov":
            s.add_argument("action", nargs="?", choices=("suite", "scan"), default="suite")
            s.add_argument("--state", help="dense state file (binary dump) for 'scan'")
            s.add_argument("--blocks", help="blocks for 'scan', e.g. '0-1,2-3,4-5'")
        s.add_argument("--config", help="JSON RunConfig; flags below override its fields")
        s.add_argument("--L", type=int, help="lattice side (rows = cols)")
        s.add_argument("--reference", choices=("toric_code", "product"))
        s.add_argument("--engine", choices=ENGINES)
        s.add_argument("--depth", type=int, nargs="+")
        s.add_argument("--circuit", choices=("identity", "clifford", "haar"))
        s.add_argument("--restrict-to", choices=("all", "ABC", "BC", "near_BC"))
        s.add_argument("--seeds", help="'a..b', 'a,b,c' or one integer")
        s.add_argument("--width", type=int, nargs="+", help="annulus widths for the default partitions")
        s.add_argument("--r-in", type=int, default=None)
        s.add_argument("--probs", type=float, nargs=4)
        s.add_argument("--n-partitions", type=int)
        s.add_argument("--count", type=int)
        s.add_argument("--gates", choices=("one", "two", "none"))
        s.add_argument("--workers", type=int)
        s.add_argument("--out", help="CSV path (bound) or JSON report path")
        s.add_argument("--jsonl")
        s.add_argument("--circuit-file", help="JSON circuit (list of layers) used as an explicit circuit")
    s = sub.add_parser("summarize")
    s.add_argument("paths", nargs="*")
    s = sub.add_parser("replay", help="re-run JSON-lines records and compare them byte for byte")
    s.add_argument("path")
    s = sub.add_parser("stab", help="entropies of a stabilizer tableau dump")
    s.add_argument("action", choices=("entropy",))
    s.add_argument("--state", required=True)
    s.add_argument("--region", required=True, help="regions JSON file or a comma list of qubits")
    s = sub.add_parser("dense", help="entropies of a dense state dump")
    s.add_argument("action", choices=("entropy",))
    s.add_argument("--in", dest="infile", required=True)
    s.add_argument("--keep", required=True, help="comma list of factor indices")
    return p


def config_from_args(ns) -> dict:
    doc: dict = {}
    if ns.config:
        try:
            with open(ns.config) as fh:
                doc = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"config file: {exc}") from None
        if not isinstance(doc, dict):
            raise ConfigError("config: expected a JSON object")
    doc["experiment"] = _COMMANDS[ns.command]
    ref = dict(doc.get("reference", {"kind": "toric_code", "rows": 12, "cols": 12}))
    if ns.L:
        ref["rows"] = ref["cols"] = ns.L
    if ns.reference:
        ref["kind"] = ns.reference
    doc["reference"] = ref
    circ = dict(doc.get("circuit", {"kind": "clifford", "depth": 1}))
    if ns.depth:
        circ["depth"] = ns.depth[0] if len(ns.depth) == 1 else ns.depth
    if ns.circuit:
        circ["kind"] = ns.circuit
    if ns.restrict_to:
        circ["restrict_to"] = ns.restrict_to
    if ns.circuit_file:
        try:
            with open(ns.circuit_file) as fh:
                body = fh.read()
        except OSError as exc:
            raise ConfigError(f"circuit file: {exc.strerror}") from None
        circ = {"kind": "explicit", "circuit": body}
    doc["circuit"] = circ
    for attr, key in (("engine", "engine"), ("seeds", "seeds"), ("n_partitions", "n_partitions"),
                      ("count", "count"), ("gates", "gates"), ("workers", "workers")):
        v = getattr(ns, attr)
        if v is not None:
            doc[key] = v
    if ns.probs:
        doc["probs"] = list(ns.probs)
    if ns.width:
        doc["widths"] = ns.width
        if ns.r_in is not None:
            rows = ref.get("rows", 12)
            cols = ref.get("cols", 12)
            doc["partition"] = [{"kind": "square", "center": [rows // 2, cols // 2], "r_in": ns.r_in,
                                 "r_out": ns.r_in + w} for w in ns.width]
    out = dict(doc.get("output", {}))
    if ns.out:
        out["csv" if doc["experiment"] == "bound" else "report"] = ns.out
    if ns.jsonl:
        out["jsonl"] = ns.jsonl
    if os.environ.get("TEEBOUND_OUTPUT_DIR"):
        base = Path(os.environ["TEEBOUND_OUTPUT_DIR"])
        out = {k: str(base / Path(v).name) if v else v for k, v in out.items()}
    doc["output"] = out
    return doc


def _indices(text: str, where: str) -> list[int]:
    """'0-1,4' -> [0, 1, 4]."""
    out = []
    try:
        for part in text.split(","):
            if "-" in part:
                a, b = part.split("-")
                out.extend(range(int(a), int(b) + 1))
            else:
                out.append(int(part))
    except ValueError:
        raise ConfigError(f"{where}: cannot parse {text!r}") from None
    return out


def _read_dense(path: str) -> dense.DensityMatrix:
    try:
        with open(path, "rb") as fh:
            return dense.load(fh.read())
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None


def stab_entropy(ns, stream) -> int:
    try:
        with open(ns.state) as fh:
            state = stab.StabilizerState.loads(fh.read())
    except OSError as exc:
        raise ConfigError(f"{ns.state}: {exc.strerror}") from None
    if os.path.exists(ns.region):
        with open(ns.region) as fh:
            _, regions = regions_from_json(fh.read())
        named = [(r.label, r.qubits) for r in regions]
    else:
        named = [("region", _indices(ns.region, "--region"))]
    for label, qs in named:
        print(f"{label}: S = {stab.entropy_bits(state, qs)} bits", file=stream)
    return EXIT_OK


def dense_entropy(ns, stream) -> int:
    rho = _read_dense(ns.infile)
    keep = _indices(ns.keep, "--keep")
    value = dense.entropy(dense.partial_trace(rho, keep))
    print(f"S = {value!r} nats = {value / tee.LOG2!r} bits", file=stream)
    return EXIT_OK


def markov_scan(ns, stream) -> int:
    if not ns.state or not ns.blocks:
        raise ConfigError("markov scan: --state and --blocks are required")
    rho = _read_dense(ns.state)
    # each comma piece is one block; 'a-b' is an inclusive run of factor indices
    blocks = [_indices(b, "--blocks") for b in ns.blocks.split(",")]
    chain = markov.OrderedChain(rho, blocks)
    rep = markov.is_locally_markov(chain) if chain.n >= 4 else markov.is_markov_chain(chain)
    text = rep.to_json()
    if ns.out:
        with open(ns.out, "w") as fh:
            fh.write(text)
    else:
        print(text, file=stream)
    return EXIT_OK


def replay(path: str, stream) -> int:
    """Re-run every record of a JSON-lines file; exit 2 on any difference."""
    bad = 0
    try:
        fh = open(path)
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    with fh:
        for i, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = tee.ExperimentRecord.from_json(line)
            except (json.JSONDecodeError, TypeError, ValueError) as exc:
                raise ConfigError(f"{path}:{i}: {exc}") from None
            same = tee.replay_record(rec).to_json() == rec.to_json()
            bad += not same
            print(f"{path}:{i}: {'identical' if same else 'DIFFERS'}", file=stream)
    return EXIT_PHYSICS if bad else EXIT_OK


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if argv[:1] == ["tee"]:
        argv = argv[1:]
    try:
        ns = _parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    stream = sys.stdout
    try:
        if ns.command == "summarize":
            return summarize(ns.paths)
        if ns.command == "replay":
            return replay(ns.path, stream)
        if ns.command == "stab":
            return stab_entropy(ns, stream)
        if ns.command == "dense":
            return dense_entropy(ns, stream)
        if ns.command == "markov" and ns.action == "scan":
            return markov_scan(ns, stream)
        cfg = load_config(config_from_args(ns))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (dense.DenseError, markov.MarkovError, GeometryError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
