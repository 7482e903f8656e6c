"""Command-line front end.

Commands:
    solve       Run one solver on an instance file and report the result.
    audit       Compare solver outputs with the exhaustive optimum.
    experiment  Run the synthetic robust-minimization sweep.
    validate    Check an instance file without solving it.
    generate    Write a generated instance file.

Exit codes: 0 on success, 1 for parse, validation or unsupported-operation
errors, 2 for infeasible instances or failed rounding, 3 when an audit
detects a violated bound.
"""

import argparse
import csv
import io
import json
import logging
import math
import multiprocessing
import os
import statistics
import sys
import time
from dataclasses import dataclass
from functools import partial
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

import numpy as np

from robsub import __version__, instances
from robsub.constraints import CardinalityUpper, ConstraintFamily, Knapsacks
from robsub.core import (
    SetFunctionHandle,
    average_function,
    build_function,
    kappa_factor,
    total_curvature,
    worst_case_curvature,
)
from robsub.errors import (
    DomainError,
    InfeasibleError,
    InstanceFormatError,
    OracleBudgetError,
    RobsubError,
    RoundingError,
    UnsupportedError,
)
from robsub.instances import InstanceFile
from robsub.oracle import OracleBudget, brute_force_solve
from robsub.robust_max import BicriteriaTarget, multiknapsack_robust_max, saturate_robust_max
from robsub.robust_min import (
    RobustSolution,
    aa_submin,
    clustered_sqrt_certificate,
    cr_submin,
    ea_aa_submin,
    ea_submin,
    mmin_robust_submin,
)
from robsub.scsc_scsk import robust_scsc, robust_scsk
from robsub.settings import LOG_LEVEL
from robsub.utils import calculate_file_hash, sorted_tuple

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_INFEASIBLE = 2
EXIT_AUDIT_FAILED = 3

METHODS: Dict[str, Tuple[str, ...]] = {
    "P1": ("mmin", "aa", "cr", "ea", "ea_aa", "exhaustive"),
    "P2": ("saturate", "multiknapsack"),
    "P3": ("aa", "mmin", "ea"),
    "P4": ("mmin", "aa", "ea"),
}

RECORD_FIELDS = (
    "instance_sha256",
    "problem",
    "method",
    "selected",
    "values",
    "objective",
    "sigma",
    "rho",
    "iterations",
    "wall_ms",
)
EXPERIMENT_FIELDS = ("seed", "l", "method", "worst_value", "wall_ms")
EXPERIMENT_METHODS = ("mmin", "aa", "ea", "ea_aa", "cr")

# Relative slack when comparing an empirical ratio with its bound
AUDIT_SLACK = 1e-6


@dataclass(frozen=True)
class Outcome:
    """Problem-independent view of a solver result.

    Attributes:
        method (str): The solver that ran.
        selected (FrozenSet[int]): The chosen set.
        f_values (Tuple[float, ...]): f_i(selected).
        g_values (Tuple[float, ...]): g_j(selected).
        objective (float): The problem's objective at the chosen set.
        sigma (float): Constraint violation factor, 1 when feasible.
        rho (float): Objective attainment factor, 1 when exact.
        iterations (int): Accepted iterates or inner solver calls.
    """

    method: str
    selected: FrozenSet[int]
    f_values: Tuple[float, ...]
    g_values: Tuple[float, ...]
    objective: float
    sigma: float = 1.0
    rho: float = 1.0
    iterations: int = 1


def default_method(instance: InstanceFile) -> str:
    if instance.problem == "P2" and isinstance(instance.constraint, Knapsacks):
        return "multiknapsack"
    return METHODS[instance.problem][0]


def _certificates(instance: InstanceFile, fs: Sequence[SetFunctionHandle]):
    if instance.certificates:
        return list(instance.certificates)
    return [clustered_sqrt_certificate(f) for f in fs]


def solve_p1(
    method: str,
    fs: Sequence[SetFunctionHandle],
    C: ConstraintFamily,
    instance: Optional[InstanceFile] = None,
    cr_solver: str = "subgradient",
    budget: Optional[OracleBudget] = None,
) -> RobustSolution:
    """Dispatches a robust minimization method by name."""
    if method == "mmin":
        return mmin_robust_submin(fs, C)
    if method == "exhaustive":
        return mmin_robust_submin(fs, C, strategy="exhaustive", budget=budget)
    if method == "aa":
        return aa_submin(fs, C)
    if method == "cr":
        covering = None if instance is None else instance.covering
        return cr_submin(fs, covering, C, solver=cr_solver)
    certificates = (
        [clustered_sqrt_certificate(f) for f in fs]
        if instance is None
        else _certificates(instance, fs)
    )
    if method == "ea":
        return ea_submin(fs, certificates, C)
    if method == "ea_aa":
        return ea_aa_submin(fs, certificates, C)
    raise UnsupportedError(f"unknown robust minimization method {method!r}")


def solve_instance(
    instance: InstanceFile,
    method: Optional[str] = None,
    eps: Optional[float] = None,
    cr_solver: str = "subgradient",
) -> Outcome:
    """Runs ``method`` (the problem's default when None) on an instance.

    Raises:
        UnsupportedError: If the method does not apply to the problem.
        InfeasibleError: If the instance admits no solution.
        RoundingError: If chain rounding fails.
    """

    method = method or default_method(instance)
    if method not in METHODS[instance.problem]:
        raise UnsupportedError(
            f"method {method!r} does not solve {instance.problem}; "
            f"choose one of {', '.join(METHODS[instance.problem])}"
        )
    eps = instance.eps if eps is None else eps
    fs, gs = instance.functions()
    problem = instance.problem

    if problem == "P1":
        sol = solve_p1(method, fs, instance.constraint, instance, cr_solver)
        return Outcome(method, sol.selected, sol.values, (), sol.worst, iterations=sol.iterations)

    if problem == "P2":
        C = instance.constraint
        if method == "saturate":
            if not isinstance(C, CardinalityUpper):
                raise UnsupportedError("saturate needs a cardinality upper bound")
            S, _ = saturate_robust_max(gs, C.k, eps)
            sigma = max(1.0, len(S) / C.k)
        else:
            if not isinstance(C, Knapsacks):
                raise UnsupportedError("multiknapsack needs knapsack constraints")
            S, report = multiknapsack_robust_max(gs, C, eps)
            sigma = max(1.0, report.violation)
        g_values = tuple(g.value(S) for g in gs)
        return Outcome(method, S, (), g_values, min(g_values), sigma=sigma)

    if problem == "P3":
        certificates = list(instance.certificates) or None
        sol = robust_scsc(fs, gs, instance.targets, method, eps, certificates)
    else:
        certificates = list(instance.certificates) or None
        sol = robust_scsk(fs, gs, instance.budgets, method, eps, certificates)
    return Outcome(
        method,
        sol.selected,
        sol.f_values,
        sol.g_values,
        sol.objective,
        sigma=sol.sigma,
        rho=sol.rho,
        iterations=sol.calls,
    )


def _format_float(value: float) -> str:
    return f"{value:.12g}"


def _write_rows(path: str, fields: Sequence[str], rows: Sequence[Dict[str, object]]) -> None:
    """Appends rows to a CSV file, writing the header when the file is new."""
    fresh = not os.path.exists(path) or os.path.getsize(path) == 0
    with open(path, "a", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=fields)
        if fresh:
            writer.writeheader()
        writer.writerows(rows)


def _load(path: str) -> Tuple[Optional[InstanceFile], int]:
    try:
        return InstanceFile.load(path), EXIT_OK
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
    except InstanceFormatError as e:
        print(f"error: invalid instance: {e}", file=sys.stderr)
    except InfeasibleError as e:
        print(f"error: infeasible instance: {e}", file=sys.stderr)
        return None, EXIT_INFEASIBLE
    except RobsubError as e:
        print(f"error: {e}", file=sys.stderr)
    return None, EXIT_INVALID


def run_solve(
    path: str,
    method: Optional[str] = None,
    out: Optional[str] = None,
    eps: Optional[float] = None,
    timing: bool = True,
) -> Tuple[int, Optional[Dict[str, str]]]:
    """Solves an instance file and reports one result record.

    Args:
        path (str): The instance file.
        method (Optional[str]): Solver name; the problem's default when None.
        out (Optional[str]): CSV file the record is appended to.
        eps (Optional[float]): Overrides the instance accuracy.
        timing (bool, optional): Whether to measure wall time. Defaults to True.

    Returns:
        Tuple[int, Optional[Dict[str, str]]]: The exit code and the record,
        None on failure.
    """

    instance, code = _load(path)
    if instance is None:
        return code, None
    digest = calculate_file_hash(path)

    start = time.perf_counter()
    try:
        outcome = solve_instance(instance, method, eps)
    except (InfeasibleError, RoundingError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INFEASIBLE, None
    except RobsubError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID, None
    wall_ms = (time.perf_counter() - start) * 1000.0 if timing else 0.0

    values = {"f": [_format_float(v) for v in outcome.f_values]}
    values["g"] = [_format_float(v) for v in outcome.g_values]
    record = {
        "instance_sha256": digest,
        "problem": instance.problem,
        "method": outcome.method,
        "selected": " ".join(str(j) for j in sorted_tuple(outcome.selected)),
        "values": json.dumps(values, sort_keys=True),
        "objective": _format_float(outcome.objective),
        "sigma": _format_float(outcome.sigma),
        "rho": _format_float(outcome.rho),
        "iterations": str(outcome.iterations),
        "wall_ms": f"{wall_ms:.3f}",
    }
    if out:
        _write_rows(out, RECORD_FIELDS, [record])

    labels = [instance.ground_set.label(j) for j in sorted_tuple(outcome.selected)]
    print(f"{instance.problem} {outcome.method}: objective {outcome.objective:.6g}")
    print(f"selected ({len(labels)}): {' '.join(labels)}")
    if outcome.sigma > 1.0 or outcome.rho < 1.0:
        print(f"sigma {outcome.sigma:.6g}, rho {outcome.rho:.6g}")
    return EXIT_OK, record


def _audit_line(method: str, ratio: float, bound: float, upper: bool = True) -> Tuple[str, bool]:
    """Formats one audit line; ``upper`` bounds must not be exceeded, lower ones must be met."""
    if upper:
        passed = ratio <= bound * (1.0 + AUDIT_SLACK) + AUDIT_SLACK
    else:
        passed = ratio >= bound * (1.0 - AUDIT_SLACK) - AUDIT_SLACK
    verdict = "pass" if passed else "fail"
    return f"{method}, {ratio:.6g}, {bound:.6g}, {verdict}", passed


def _min_ratio(value: float, optimum: float) -> float:
    if optimum > 1e-12:
        return value / optimum
    return 1.0 if value <= 1e-12 else math.inf


def _max_ratio(value: float, optimum: float) -> float:
    return value / optimum if optimum > 1e-12 else 1.0


def _curvature(f: SetFunctionHandle) -> float:
    try:
        return total_curvature(f)
    except DomainError:
        return 0.0


def _audit_p1(instance, fs, budget) -> List[Tuple[str, bool]]:
    C = instance.constraint
    opt = brute_force_solve("P1", fs=fs, constraint=C, budget=budget)
    size = max(len(opt.selected), 1)
    count, alpha = len(fs), C.alpha
    results = []

    sol = solve_p1("mmin", fs, C)
    bound = count * alpha * kappa_factor(size, worst_case_curvature(fs))
    results.append(_audit_line("mmin", _min_ratio(sol.worst, opt.value), bound))

    sol = solve_p1("aa", fs, C)
    bound = count * alpha * kappa_factor(size, _curvature(average_function(fs)))
    results.append(_audit_line("aa", _min_ratio(sol.worst, opt.value), bound))

    try:
        sol = solve_p1("cr", fs, C, instance, cr_solver="cutting_plane")
        results.append(_audit_line("cr", _min_ratio(sol.worst, opt.value), sol.bound))
    except UnsupportedError as e:
        logger.info("cr skipped: %s", e)

    try:
        sol = solve_p1("ea", fs, C, instance)
    except UnsupportedError as e:
        logger.info("ea skipped: %s", e)
    else:
        if sol.bound is not None:
            results.append(_audit_line("ea", _min_ratio(sol.worst, opt.value), sol.bound))
    return results


def _audit_p2(instance, gs, eps, budget) -> List[Tuple[str, bool]]:
    C = instance.constraint
    opt = brute_force_solve("P2", gs=gs, constraint=C, budget=budget)
    target = BicriteriaTarget(eps)
    results = []
    if isinstance(C, CardinalityUpper):
        S, _ = saturate_robust_max(gs, C.k, eps)
        value = min(g.value(S) for g in gs)
        results.append(
            _audit_line("saturate", _max_ratio(value, opt.value), target.objective_factor, upper=False)
        )
        results.append(
            _audit_line("saturate_size", len(S) / C.k, target.size_factor(len(gs)))
        )
    elif isinstance(C, Knapsacks):
        S, report = multiknapsack_robust_max(gs, C, eps)
        value = min(g.value(S) for g in gs)
        results.append(
            _audit_line("multiknapsack", _max_ratio(value, opt.value), target.objective_factor, upper=False)
        )
        results.append(_audit_line("multiknapsack_violation", report.violation, report.bound))
    return results


def _audit_p3(instance, fs, gs, eps, budget) -> List[Tuple[str, bool]]:
    opt = brute_force_solve("P3", fs=fs, gs=gs, targets=instance.targets, budget=budget)
    results = []
    for method in ("aa", "mmin"):
        sol = robust_scsc(fs, gs, instance.targets, method, eps)
        if sol.bound is None:
            continue
        cost_bound, coverage_bound = sol.bound
        results.append(_audit_line(method, _min_ratio(sol.objective, opt.value), cost_bound))
        results.append(_audit_line(f"{method}_coverage", sol.rho, coverage_bound, upper=False))
    return results


def _audit_p4(instance, fs, gs, eps, budget) -> List[Tuple[str, bool]]:
    opt = brute_force_solve("P4", fs=fs, gs=gs, budgets=instance.budgets, budget=budget)
    results = []
    for method in ("mmin", "aa"):
        sol = robust_scsk(fs, gs, instance.budgets, method, eps)
        if sol.bound is None:
            continue
        value_bound, violation_bound = sol.bound
        results.append(
            _audit_line(method, _max_ratio(sol.objective, opt.value), value_bound, upper=False)
        )
        results.append(_audit_line(f"{method}_violation", sol.sigma, violation_bound))
    return results


def run_audit(path: str, budget: Optional[OracleBudget] = None) -> Tuple[int, List[str]]:
    """Audits the solvers of an instance against the exhaustive optimum.

    Each line reads ``method, empirical ratio, bound, pass|fail``. Instances
    too large for the oracle are skipped with exit code 0.

    Returns:
        Tuple[int, List[str]]: The exit code and the printed lines.
    """

    instance, code = _load(path)
    if instance is None:
        return code, []
    fs, gs = instance.functions()
    eps = instance.eps
    try:
        if instance.problem == "P1":
            results = _audit_p1(instance, fs, budget)
        elif instance.problem == "P2":
            results = _audit_p2(instance, gs, eps, budget)
        elif instance.problem == "P3":
            results = _audit_p3(instance, fs, gs, eps, budget)
        else:
            results = _audit_p4(instance, fs, gs, eps, budget)
    except OracleBudgetError as e:
        line = f"audit skipped: {e}"
        print(line)
        return EXIT_OK, [line]
    except (InfeasibleError, RoundingError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INFEASIBLE, []
    except RobsubError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID, []

    lines = [line for line, _ in results]
    for line in lines:
        print(line)
    failed = [line for line, passed in results if not passed]
    if failed:
        logger.error("%d audit check(s) failed", len(failed))
        return EXIT_AUDIT_FAILED, lines
    return EXIT_OK, lines


@dataclass(frozen=True)
class ExperimentResult:
    """Rows and summary of an experiment sweep.

    Attributes:
        rows (Tuple[Dict[str, str], ...]): One row per (run, l, method).
        medians (Dict[Tuple[int, str], float]): Median worst value per (l, method).
        trend_ok (bool): Whether median MMin stayed at or below median AA for every l.
        csv_text (str): The rows rendered as CSV with a header.
    """

    rows: Tuple[Dict[str, str], ...]
    medians: Dict[Tuple[int, str], float]
    trend_ok: bool
    csv_text: str


def child_seeds(seed: int, runs: int) -> List[int]:
    """Per-run seeds spawned from one root seed."""
    children = np.random.SeedSequence(seed).spawn(runs)
    return [int(child.generate_state(1)[0]) for child in children]


def _experiment_run(
    child_seed: int,
    kind: str,
    n: int,
    l: int,
    k: int,
    blocks: int,
    methods: Sequence[str],
    timing: bool,
) -> List[Dict[str, str]]:
    instance = instances.get(kind)(n=n, count=l, k=k, seed=child_seed, blocks=blocks)
    fs, _ = instance.functions()
    rows = []
    for method in methods:
        start = time.perf_counter()
        sol = solve_p1(method, fs, instance.constraint, instance)
        wall_ms = (time.perf_counter() - start) * 1000.0 if timing else 0.0
        rows.append(
            {
                "seed": str(child_seed),
                "l": str(l),
                "method": method,
                "worst_value": _format_float(sol.worst),
                "wall_ms": f"{wall_ms:.3f}",
            }
        )
    return rows


def run_experiment(
    kind: str = "synthetic",
    n: int = 50,
    l: Sequence[int] = (3,),
    k: int = 10,
    runs: int = 20,
    seed: int = 7,
    blocks: int = 5,
    methods: Sequence[str] = EXPERIMENT_METHODS,
    out: Optional[str] = None,
    timing: bool = False,
    workers: int = 1,
) -> ExperimentResult:
    """Runs every method on ``runs`` generated instances for each l.

    Every instance minimizes the worst of l clustered square-root functions
    subject to |X| >= k. Run seeds are spawned from ``seed`` and wall time is
    recorded only when ``timing`` is set, so by default the CSV is
    byte-identical across invocations.

    Raises:
        KeyError: If ``kind`` names no generator.
    """

    instances.get(kind)
    seeds = child_seeds(seed, runs)
    rows: List[Dict[str, str]] = []
    for count in l:
        job = partial(
            _experiment_run,
            kind=kind,
            n=n,
            l=count,
            k=k,
            blocks=blocks,
            methods=tuple(methods),
            timing=timing,
        )
        if workers > 1:
            with multiprocessing.Pool(workers) as pool:
                chunks = pool.map(job, seeds)
        else:
            chunks = [job(s) for s in seeds]
        for chunk in chunks:
            rows.extend(chunk)

    medians = {}
    for count in l:
        for method in methods:
            values = [float(r["worst_value"]) for r in rows if r["l"] == str(count) and r["method"] == method]
            medians[(count, method)] = statistics.median(values)

    trend_ok = True
    if "mmin" in methods and "aa" in methods:
        for count in l:
            if medians[(count, "mmin")] > medians[(count, "aa")]:
                trend_ok = False
                logger.warning(
                    "median MMin %.6g exceeds median AA %.6g at l=%d",
                    medians[(count, "mmin")],
                    medians[(count, "aa")],
                    count,
                )

    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=EXPERIMENT_FIELDS)
    writer.writeheader()
    writer.writerows(rows)
    csv_text = buffer.getvalue()

    if out:
        with open(out, "w", newline="", encoding="utf-8") as f:
            f.write(csv_text)
        meta = {
            "kind": kind,
            "rng": instances.RNG_ALGORITHM,
            "seed": seed,
            "runs": runs,
            "n": n,
            "l": list(l),
            "k": k,
            "blocks": blocks,
            "methods": list(methods),
            "timing": timing,
            "problem": "minimize max_i f_i(X) subject to |X| >= k",
            "version": __version__,
        }
        with open(out + ".meta.json", "w", encoding="utf-8") as f:
            json.dump(meta, f, indent=2, sort_keys=True)
            f.write("\n")

    return ExperimentResult(tuple(rows), medians, trend_ok, csv_text)


def run_validate(path: str, seed: int = 0) -> int:
    """Parses an instance, samples its functions and checks its targets."""
    instance, code = _load(path)
    if instance is None:
        return code
    try:
        fs = [
            build_function(spec, instance.ground_set, True, seed=seed)
            for spec in instance.f_specs
        ]
        gs = [
            build_function(spec, instance.ground_set, True, seed=seed)
            for spec in instance.g_specs
        ]
        for f, cert in zip(fs, instance.certificates):
            cert.verify(f, seed=seed)
        if instance.problem == "P3":
            everything = instance.ground_set.elements
            for j, (g, c) in enumerate(zip(gs, instance.targets)):
                if c > g.value(everything) + 1e-9:
                    raise InfeasibleError(f"target {c} of g[{j}] exceeds g[{j}](V)")
    except InfeasibleError as e:
        print(f"error: infeasible instance: {e}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except RobsubError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID
    print(f"{path}: ok ({instance.problem}, n={instance.ground_set.n})")
    return EXIT_OK


def run_generate(
    kind: str = "synthetic",
    n: int = 50,
    l: int = 3,
    k: int = 10,
    seed: int = 7,
    blocks: int = 5,
    out: Optional[str] = None,
) -> InstanceFile:
    """Builds an instance with a named generator and writes or prints it."""
    instance = instances.get(kind)(n=n, count=l, k=k, seed=seed, blocks=blocks)
    if out:
        instance.dump(out)
    else:
        sys.stdout.write(instance.dumps())
    return instance


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="robsub", description="Robust submodular minimization and maximization."
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--verbose", "-v", action="store_true", help="log debug messages")
    commands = parser.add_subparsers(dest="command", required=True)

    solve = commands.add_parser("solve", help="solve an instance file")
    solve.add_argument("instance")
    solve.add_argument("--method", help="solver name; the problem's default when omitted")
    solve.add_argument("--eps", type=float, help="override the instance accuracy")
    solve.add_argument("--out", help="append the result record to this CSV file")
    solve.add_argument("--no-timing", action="store_true", help="record 0 as wall time")

    audit = commands.add_parser("audit", help="compare solvers with the exhaustive optimum")
    audit.add_argument("instance")
    audit.add_argument("--max-sets", type=int, help="oracle subset budget")

    experiment = commands.add_parser("experiment", help="run a generated sweep")
    experiment.add_argument("kind", nargs="?", default="synthetic")
    experiment.add_argument("--n", type=int, default=50)
    experiment.add_argument("--l", type=int, nargs="+", default=[3])
    experiment.add_argument("--k", type=int, default=10)
    experiment.add_argument("--runs", type=int, default=20)
    experiment.add_argument("--seed", type=int, default=7)
    experiment.add_argument("--blocks", type=int, default=5)
    experiment.add_argument("--method", nargs="+", default=list(EXPERIMENT_METHODS))
    experiment.add_argument("--out", help="CSV output; a .meta.json sidecar is written next to it")
    experiment.add_argument("--workers", type=int, default=1)
    experiment.add_argument("--timing", action="store_true", help="record wall time in the rows")

    validate = commands.add_parser("validate", help="check an instance file")
    validate.add_argument("instance")
    validate.add_argument("--seed", type=int, default=0, help="seed of the sampled checks")

    generate = commands.add_parser("generate", help="write a generated instance")
    generate.add_argument("kind", nargs="?", default="synthetic")
    generate.add_argument("--n", type=int, default=50)
    generate.add_argument("--l", type=int, default=3)
    generate.add_argument("--k", type=int, default=10)
    generate.add_argument("--seed", type=int, default=7)
    generate.add_argument("--blocks", type=int, default=5)
    generate.add_argument("--out", help="instance path; printed to stdout when omitted")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        format="%(asctime)s |%(levelname)s: %(message)s",
        level=logging.DEBUG if args.verbose else LOG_LEVEL,
    )

    if args.command == "solve":
        code, _ = run_solve(args.instance, args.method, args.out, args.eps, not args.no_timing)
        return code
    if args.command == "audit":
        budget = None if args.max_sets is None else OracleBudget(max_sets=args.max_sets)
        code, _ = run_audit(args.instance, budget)
        return code
    if args.command == "validate":
        return run_validate(args.instance, args.seed)

    try:
        if args.command == "generate":
            run_generate(args.kind, args.n, args.l, args.k, args.seed, args.blocks, args.out)
            return EXIT_OK
        result = run_experiment(
            kind=args.kind,
            n=args.n,
            l=args.l,
            k=args.k,
            runs=args.runs,
            seed=args.seed,
            blocks=args.blocks,
            methods=args.method,
            out=args.out,
            timing=args.timing,
            workers=args.workers,
        )
    except KeyError as e:
        print(f"error: {e.args[0]}", file=sys.stderr)
        return EXIT_INVALID
    except (InfeasibleError, RoundingError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except RobsubError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID

    if not args.out:
        sys.stdout.write(result.csv_text)
    for (count, method), median in sorted(result.medians.items()):
        print(f"l={count} {method}: median worst value {median:.6g}", file=sys.stderr)
    return EXIT_OK
