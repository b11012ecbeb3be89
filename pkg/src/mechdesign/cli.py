"""Command line front end: solve, evaluate, optimize, reproduce.

Records are written as newline-delimited JSON (one object per line, tagged
by ``kind``) or, with ``--format csv``, as a flattened table of the
non-trace records.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from dataclasses import dataclass, field, fields, replace
from typing import Any, Iterable, Optional

from .annealer import AllInfeasible, AnnealConfig, EvalReport, OptimizationResult, evaluate_candidate, optimize
from .design import DesignSpace
from .domains import DOMAINS, VICIOUS_L, get_space
from .equilibrium import EquilibriumResult, SolverError, solve_equilibrium
from .game import LinearStrategy
from .evaluation import OBJECTIVE_KINDS, ConstraintSpec, ObjectiveSpec, samples_required
from .experiments import EXPERIMENTS

EXIT_FAILURE = 1
EXIT_INFEASIBLE = 2


# config


def parse_config_text(text: str) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment. Keys may be dotted."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key] = value
    return out


def _float_list(s: str) -> list[float]:
    return [float(x) for x in s.replace(" ", "").split(",") if x]


@dataclass
class ExperimentConfig:
    domain: str = "sga"
    l: float = VICIOUS_L
    objective: ObjectiveSpec = field(default_factory=lambda: ObjectiveSpec("fairness_gap"))
    constraints: list[ConstraintSpec] = field(default_factory=lambda: [ConstraintSpec("convergence", tol=1e-3)])
    anneal: AnnealConfig = field(default_factory=AnnealConfig)
    start: Any = "random"
    output_path: Optional[str] = None

    def __post_init__(self):
        if self.domain not in DOMAINS:
            raise ValueError(f"unknown domain {self.domain!r}; choose from {sorted(DOMAINS)}")

    def space(self) -> DesignSpace:
        if self.domain == "vicious":
            return get_space("vicious", l=self.l)
        return get_space(self.domain)

    @classmethod
    def from_mapping(cls, kv: dict[str, str]) -> "ExperimentConfig":
        """Build from flat dotted keys.

        Recognised keys: ``domain``, ``l``, ``start``, ``output_path``,
        ``objective.{kind,samples,seed,welfare_kind,weights}`` (weights as
        ``kind:w,kind:w``), ``constraints`` (comma list of kinds),
        ``constraint.<kind>.{tol,p,alpha,floor,samples,seed,mode}`` and
        ``anneal.<field>`` for every :class:`AnnealConfig` field.
        """
        kv = dict(kv)
        cfg = cls(domain=kv.pop("domain", "sga"))
        if "l" in kv:
            cfg.l = float(kv.pop("l"))
        if "start" in kv:
            s = kv.pop("start")
            cfg.start = s if s == "random" else _float_list(s)
        cfg.output_path = kv.pop("output_path", None)

        obj = {}
        for key in [k for k in kv if k.startswith("objective.")]:
            name = key.split(".", 1)[1]
            value = kv.pop(key)
            if name in ("samples", "seed"):
                obj[name] = int(value)
            elif name == "weights":
                obj[name] = tuple((p.split(":")[0].strip(), float(p.split(":")[1])) for p in value.split(","))
            elif name in ("kind", "welfare_kind"):
                obj[name] = value
            else:
                raise ValueError(f"unknown config key {key!r}")
        if obj:
            cfg.objective = ObjectiveSpec(**{"kind": "fairness_gap", **obj})

        explicit = "constraints" in kv
        kinds = [k.strip() for k in kv.pop("constraints", "").split(",") if k.strip()]
        per_kind: dict[str, dict] = {k: {} for k in kinds}
        for key in [k for k in kv if k.startswith("constraint.")]:
            _, kind, name = key.split(".", 2)
            value = kv.pop(key)
            per_kind.setdefault(kind, {})
            if name in ("samples", "seed"):
                per_kind[kind][name] = int(value)
            elif name == "mode":
                per_kind[kind][name] = value
            elif name in ("tol", "p", "alpha", "floor"):
                per_kind[kind][name] = float(value)
            else:
                raise ValueError(f"unknown config key {key!r}")
        if per_kind or explicit:
            cfg.constraints = [ConstraintSpec(kind, **opts) for kind, opts in per_kind.items()]

        anneal = {}
        types = {f.name: f.type for f in fields(AnnealConfig)}
        for key in [k for k in kv if k.startswith("anneal.")]:
            name = key.split(".", 1)[1]
            value = kv.pop(key)
            if name not in types or name == "solver_options":
                raise ValueError(f"unknown config key {key!r}")
            if name in ("steps", "restarts", "seed"):
                anneal[name] = int(value)
            elif name == "constraint_mode":
                anneal[name] = value
            elif name == "proposal_stddev":
                vals = _float_list(value)
                anneal[name] = vals[0] if len(vals) == 1 else tuple(vals)
            else:
                anneal[name] = float(value)
        if anneal:
            cfg.anneal = AnnealConfig(**anneal)
        if kv:
            raise ValueError(f"unknown config keys: {sorted(kv)}")
        return cfg


# records


def _num(x) -> Optional[float]:
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else None


def equilibrium_record(result: Optional[EquilibriumResult]) -> Optional[dict]:
    if result is None:
        return None
    return {
        "m": _num(result.strategy.m),
        "b": _num(result.strategy.b),
        "iterations": result.iterations,
        "converged": result.converged,
        "residual": _num(result.residual),
        "regret": _num(result.regret),
    }


def report_record(kind: str, domain: str, report: EvalReport, seed: int, **extra) -> dict:
    rec = {
        "kind": kind,
        "domain": domain,
        "theta": [_num(v) for v in report.theta.values],
        "objective": {
            "kind": report.objective_kind,
            "value": _num(report.objective_estimate),
            "stderr": _num(report.objective_stderr),
        },
        "constraints": [
            {"kind": v.kind, "pass": bool(v.passed), "margin": _num(v.margin)} for v in report.verdicts
        ],
        "equilibrium": equilibrium_record(report.equilibrium),
        "feasible": report.feasible,
        "error": report.error,
        "seed": seed,
    }
    rec.update(extra)
    return rec


def trace_records(domain: str, result: OptimizationResult, seed: int) -> Iterable[dict]:
    for e in result.trace:
        yield {
            "kind": "trace",
            "domain": domain,
            "chain": e.chain,
            "step": e.step,
            "theta": [_num(v) for v in e.theta],
            "objective": _num(e.objective),
            "score": _num(e.score),
            "feasible": e.feasible,
            "accepted": e.accepted,
            "best_score": _num(e.best_score),
            "seed": seed,
            "chain_seed": result.chain_seeds[e.chain],
        }


def dumps(record: dict) -> str:
    return json.dumps(record, sort_keys=True, allow_nan=False)


def loads(line: str) -> dict:
    return json.loads(line)


def _flatten(rec: dict, prefix: str = "") -> dict:
    out = {}
    for k, v in rec.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, key + "."))
        elif isinstance(v, list) and v and isinstance(v[0], dict):
            for i, item in enumerate(v):
                out.update(_flatten(item, f"{key}.{i}."))
        elif isinstance(v, list):
            out[key] = ";".join("" if x is None else repr(x) for x in v)
        else:
            out[key] = v
    return out


class Writer:
    """Single sink for all records of a command, in emission order."""

    def __init__(self, fmt: str, stream):
        self.fmt = fmt
        self.stream = stream
        self.rows: list[dict] = []

    def emit(self, record: dict):
        if self.fmt == "jsonl":
            self.stream.write(dumps(record) + "\n")
        elif record.get("kind") != "trace":
            self.rows.append(_flatten(record))

    def close(self):
        if self.fmt == "csv" and self.rows:
            cols: list[str] = []
            for row in self.rows:
                cols.extend(c for c in row if c not in cols)
            w = csv.DictWriter(self.stream, fieldnames=cols, lineterminator="\n")
            w.writeheader()
            w.writerows(self.rows)
        self.stream.flush()


# commands


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("MECH_SEED")
    return int(env) if env else 0


def _load_config(args) -> ExperimentConfig:
    kv = parse_config_text(open(args.config).read()) if args.config else {}
    if getattr(args, "domain", None):
        kv["domain"] = args.domain
    if getattr(args, "l", None) is not None:
        kv["l"] = str(args.l)
    if getattr(args, "objective", None):
        kv["objective.kind"] = args.objective
    if getattr(args, "constraints", None) is not None:
        kv["constraints"] = args.constraints
    if getattr(args, "revenue_floor", None) is not None:
        kv["constraint.min_revenue.floor"] = str(args.revenue_floor)
    if getattr(args, "start", None):
        kv["start"] = args.start
    if getattr(args, "restarts", None) is not None:
        kv["anneal.restarts"] = str(args.restarts)
    if getattr(args, "steps", None) is not None:
        kv["anneal.steps"] = str(args.steps)
    cfg = ExperimentConfig.from_mapping(kv)
    seed = _seed(args)
    scale = args.samples
    obj = cfg.objective
    cfg.objective = replace(obj, seed=seed, samples=max(1, int(round(obj.samples * scale))))
    scaled = []
    for c in cfg.constraints:
        if c.kind == "min_revenue":
            c = replace(c, samples=max(1, int(round(c.n_samples * scale))))
        elif c.kind == "ex_interim_ir":
            c = replace(c, samples=max(samples_required(c.alpha, c.p), int(round(c.n_samples * scale))))
        scaled.append(c)
    cfg.constraints = scaled
    cfg.anneal = replace(cfg.anneal, seed=seed)
    return cfg


def _theta(space: DesignSpace, text: str):
    return space.point(_float_list(text))


def cmd_solve(args, out: Writer) -> int:
    space = get_space(args.domain, l=args.l) if args.domain == "vicious" and args.l is not None else get_space(args.domain)
    theta = _theta(space, args.theta)
    game = space.build(theta).game
    try:
        result = solve_equilibrium(game, max_iters=args.max_iters, tol=args.tol, damping=args.damping)
    except SolverError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    s = result.strategy
    print(
        f"s(t) = {s.m:.4f}*t + {s.b:.4f}  iterations={result.iterations} "
        f"converged={result.converged} regret={result.regret:.2e}",
        file=sys.stderr,
    )
    out.emit(
        {
            "kind": "equilibrium",
            "domain": args.domain,
            "theta": list(theta.values),
            "equilibrium": equilibrium_record(result),
            "seed": _seed(args),
        }
    )
    return 0 if result.converged else EXIT_FAILURE


def cmd_evaluate(args, out: Writer) -> int:
    cfg = _load_config(args)
    space = cfg.space()
    theta = _theta(space, args.theta)
    strategy = None
    if args.strategy:
        m, b = _float_list(args.strategy)
        g = space.build(theta).game
        strategy = LinearStrategy(m, b, g.type_low, g.type_high)
    report = evaluate_candidate(space, theta, cfg.objective, cfg.constraints, strategy=strategy)
    out.emit(report_record("report", cfg.domain, report, cfg.objective.seed))
    if report.error:
        print(f"error: {report.error}", file=sys.stderr)
        return EXIT_FAILURE
    return 0


def cmd_optimize(args, out: Writer) -> int:
    cfg = _load_config(args)
    space = cfg.space()
    code = 0
    try:
        result = optimize(space, cfg.objective, cfg.constraints, cfg.anneal, cfg.start)
    except AllInfeasible as exc:
        result = exc.result
        code = EXIT_INFEASIBLE
        print("error: no feasible design visited; best attempt follows", file=sys.stderr)
    seed = cfg.anneal.seed
    for rec in trace_records(cfg.domain, result, seed):
        out.emit(rec)
    out.emit(
        report_record(
            "summary",
            cfg.domain,
            result.best_report,
            seed,
            restarts=result.restarts_used,
            chain_seeds=result.chain_seeds,
        )
    )
    return code


def cmd_reproduce(args, out: Writer) -> int:
    seed = _seed(args)
    rows = EXPERIMENTS[args.which](seed=seed, scale=args.samples)
    ok = True
    for r in rows:
        ok &= r.passed
        print(
            f"{'PASS' if r.passed else 'FAIL'}  {r.experiment}: {r.metric}: achieved {r.achieved:.4f}"
            + ("" if r.reference is None else f" vs published {r.reference:.4f}")
            + f"  [{r.criterion}]",
            file=sys.stderr,
        )
        out.emit(
            {
                "kind": "comparison",
                "experiment": r.experiment,
                "metric": r.metric,
                "achieved": _num(r.achieved),
                "reference": _num(r.reference),
                "criterion": r.criterion,
                "pass": r.passed,
                "details": r.details,
                "seed": seed,
            }
        )
    return 0 if ok else EXIT_FAILURE


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="master seed (default: $MECH_SEED or 0)")
    common.add_argument("--samples", type=float, default=1.0, help="multiplier on every Monte Carlo count")
    common.add_argument("--out", default=None, help="output file (default: stdout)")
    common.add_argument("--format", choices=("jsonl", "csv"), default="jsonl")
    common.add_argument("--config", default=None, help="flat 'key = value' file with dotted keys")

    p = argparse.ArgumentParser(prog="mechdesign", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", parents=[common], help="solve the game induced by one design")
    s.add_argument("--domain", required=True, choices=sorted(DOMAINS))
    s.add_argument("--theta", required=True, help="comma separated design parameters")
    s.add_argument("--l", type=float, default=None, help="spite parameter (vicious only)")
    s.add_argument("--tol", type=float, default=1e-3)
    s.add_argument("--max-iters", type=int, default=200)
    s.add_argument("--damping", type=float, default=1.0)
    s.set_defaults(func=cmd_solve)

    for name, func, help_ in (
        ("evaluate", cmd_evaluate, "evaluate objective and constraints at one design"),
        ("optimize", cmd_optimize, "anneal over the design box"),
    ):
        e = sub.add_parser(name, parents=[common], help=help_)
        e.add_argument("--domain", choices=sorted(DOMAINS))
        e.add_argument("--l", type=float, default=None)
        e.add_argument("--objective", choices=OBJECTIVE_KINDS)
        e.add_argument("--constraints", help="comma list: convergence,ex_interim_ir,min_revenue")
        e.add_argument("--revenue-floor", type=float, default=None)
        if name == "evaluate":
            e.add_argument("--theta", required=True)
            e.add_argument("--strategy", help="'m,b': score at this strategy instead of solving")
        else:
            e.add_argument("--start", help="'random' or comma separated design")
            e.add_argument("--restarts", type=int)
            e.add_argument("--steps", type=int)
        e.set_defaults(func=func)

    r = sub.add_parser("reproduce", parents=[common], help="rerun a published experiment")
    r.add_argument("which", choices=sorted(EXPERIMENTS))
    r.set_defaults(func=cmd_reproduce)
    return p


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    stream = open(args.out, "w", newline="") if args.out else sys.stdout
    writer = Writer(args.format, stream)
    try:
        code = args.func(args, writer)
    except (ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        code = EXIT_FAILURE
    finally:
        writer.close()
        if args.out:
            stream.close()
    return code


if __name__ == "__main__":
    sys.exit(main())
