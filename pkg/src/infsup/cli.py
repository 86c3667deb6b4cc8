"""Command-line entry point: batch diagnostics with deterministic JSON reports.

Subcommands: ``modulus``, ``bnb``, ``kikuchi``, ``parabolic``.  Reports go to
stdout as JSON with sorted keys (wall time lives outside the result payload,
so identical inputs reproduce byte-identical results); every error path
writes a machine-parsable ``{"error": ...}`` object to stderr and exits with
2 for input problems, 3 for numeric preconditions, 4 for violated model
assumptions.  Set INFSUP_THREADS to cap BLAS parallelism.
"""

from __future__ import annotations

import os

if os.environ.get("INFSUP_THREADS"):
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(_var, os.environ["INFSUP_THREADS"])

import argparse
import hashlib
import json
import math
import sys
import time

import numpy as np

from . import kato_examples, modulus, parabolic
from .bnb import check_bnb
from .expr import EvalError, ParseError
from .linalg import NoConvergence, NotPositiveDefinite
from .spaces import CsvFormatError, DimensionMismatch, GramSpace, read_matrix_csv

SCHEMA = "infsup-report/1"

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERIC = 3
EXIT_ASSUMPTION = 4


class CliError(Exception):
    def __init__(self, code: int, kind: str, message: str, **details):
        super().__init__(message)
        self.code = code
        self.kind = kind
        self.details = details


def _digest(path: str) -> str:
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def _jsonable(value):
    """Recursively convert report values; non-finite floats become null."""
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, (np.floating, float)):
        v = float(value)
        return v if math.isfinite(v) else None
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.bool_,)):
        return bool(value)
    return value


def _emit(command: str, inputs: dict, tolerances: dict, results: dict, started: float) -> int:
    report = {
        "schema": SCHEMA,
        "command": command,
        "inputs": _jsonable(inputs),
        "tolerances": _jsonable(tolerances),
        "results": _jsonable(results),
        "wall_time_s": time.perf_counter() - started,
    }
    json.dump(report, sys.stdout, sort_keys=True)
    sys.stdout.write("\n")
    return EXIT_OK


def _load_gram(path: str) -> GramSpace:
    matrix = read_matrix_csv(path)
    try:
        return GramSpace(matrix)
    except (NotPositiveDefinite, ValueError) as exc:
        raise CliError(EXIT_NUMERIC, "invalid-gram", f"{path}: {exc}") from exc


def _load_operator(matrix_csv: str, gram_v_csv: str, gram_w_csv: str) -> modulus.DiscreteOperator:
    matrix = read_matrix_csv(matrix_csv)
    domain = _load_gram(gram_v_csv)
    test = _load_gram(gram_w_csv)
    try:
        return modulus.DiscreteOperator(domain=domain, test_space=test, matrix=matrix)
    except DimensionMismatch as exc:
        raise CliError(EXIT_INPUT, "dimension-mismatch", str(exc)) from exc


def _gamma_fields(value: float) -> dict:
    infinite = math.isinf(value)
    return {"value": None if infinite else value, "infinite": infinite}


def cmd_modulus(args) -> int:
    started = time.perf_counter()
    op = _load_operator(args.matrix, args.gram_v, args.gram_w)
    report = modulus.modulus_report(op, args.rel_tol)
    results = {
        "mu": report.mu,
        "gamma": _gamma_fields(report.gamma),
        "gamma_adjoint": _gamma_fields(report.gamma_adjoint),
        "rank": report.rank,
        "kernel_dim": report.kernel_basis.shape[1],
        "kernel_basis": report.kernel_basis.T,
        "gap_ratio": report.gap_ratio,
    }
    inputs = {
        "matrix": _digest(args.matrix),
        "gram_v": _digest(args.gram_v),
        "gram_w": _digest(args.gram_w),
    }
    return _emit("modulus", inputs, {"rel_tol": report.rel_tol}, results, started)


def cmd_bnb(args) -> int:
    started = time.perf_counter()
    op = _load_operator(args.matrix, args.gram_v, args.gram_w)
    verdict = check_bnb(op, args.rel_tol)
    results = {
        "cond_i": verdict.cond_i,
        "cond_ii": verdict.cond_ii,
        "cond_iii": verdict.cond_iii,
        "beta": verdict.beta,
        "beta_adjoint": verdict.beta_adjoint,
        "borderline": verdict.borderline,
        "agreement_ok": verdict.agreement_ok,
        "rank": verdict.rank,
        "rank_adjoint": verdict.rank_adjoint,
        "cutoff": verdict.cutoff,
        "gap_ratio": verdict.gap_ratio,
        "witnesses": {k: v for k, v in verdict.witnesses.items()},
    }
    inputs = {
        "matrix": _digest(args.matrix),
        "gram_v": _digest(args.gram_v),
        "gram_w": _digest(args.gram_w),
    }
    return _emit("bnb", inputs, {"rel_tol": verdict.rel_tol}, results, started)


def cmd_kikuchi(args) -> int:
    started = time.perf_counter()
    if (args.cells is None) == (args.sweep is None):
        raise CliError(EXIT_INPUT, "bad-flags", "pass exactly one of --cells or --sweep")
    if args.cells is not None:
        levels = [args.cells]
    else:
        try:
            levels = [int(s) for s in args.sweep.split(",") if s.strip()]
        except ValueError as exc:
            raise CliError(EXIT_INPUT, "bad-flags", f"--sweep must be integers: {exc}") from exc
        if len(levels) < 2 or any(b <= a for a, b in zip(levels, levels[1:])):
            raise CliError(EXIT_INPUT, "bad-flags", "--sweep needs >= 2 increasing cell counts")
    if any(n < 2 for n in levels):
        raise CliError(EXIT_INPUT, "bad-flags", "cell counts must be >= 2")

    instances = kato_examples.kikuchi_family(levels, args.kind)
    rows = []
    slope = None
    diagnosis = None
    if args.sweep is not None:
        trend = modulus.closed_range_probe(
            [inst.operator for inst in instances], levels=[float(n) for n in levels]
        )
        slope = trend.slope
        diagnosis = trend.diagnosis
        gammas = trend.gammas
    else:
        gammas = [modulus.reduced_minimum_modulus(inst.operator)[0] for inst in instances]
    for inst, gamma in zip(instances, gammas):
        rows.append({"n": inst.cells, "h": inst.h, "gamma": gamma})

    if args.csv:
        with open(args.csv, "w", encoding="utf-8") as fh:
            if slope is None:
                fh.write("n,h,gamma\n")
                for row in rows:
                    fh.write(f"{row['n']},{row['h']!r},{row['gamma']!r}\n")
            else:
                fh.write("n,h,gamma,slope\n")
                for row in rows:
                    fh.write(f"{row['n']},{row['h']!r},{row['gamma']!r},{slope!r}\n")

    dumped = None
    if args.dump_operator:
        from .spaces import write_matrix_csv

        inst = instances[-1]
        dumped = {
            "matrix": f"{args.dump_operator}_matrix.csv",
            "gram": f"{args.dump_operator}_gram.csv",
        }
        write_matrix_csv(dumped["matrix"], inst.operator.matrix)
        write_matrix_csv(dumped["gram"], inst.operator.domain.gram)

    results = {"kind": args.kind, "levels": rows}
    if dumped is not None:
        results["dumped_files"] = dumped
    if slope is not None:
        results["slope"] = slope
        results["diagnosis"] = diagnosis
    inputs = {"cells": levels, "kind": args.kind}
    return _emit("kikuchi", inputs, {}, results, started)


def cmd_parabolic(args) -> int:
    started = time.perf_counter()
    try:
        with open(args.config, "r", encoding="utf-8") as fh:
            cfg = json.load(fh)
    except json.JSONDecodeError as exc:
        raise CliError(
            EXIT_INPUT, "config-error", f"{args.config}: {exc}", offset=exc.pos
        ) from exc
    try:
        problem = parabolic.problem_from_config(cfg)
    except ParseError as exc:
        raise CliError(
            EXIT_INPUT, "parse-error", str(exc),
            offset=exc.offset, expected=list(exc.expected),
        ) from exc
    except ValueError as exc:
        raise CliError(EXIT_INPUT, "config-error", str(exc)) from exc

    def level_report(prob: parabolic.ParabolicProblem) -> tuple[dict, parabolic.ParabolicAssembly, parabolic.ParabolicSolution]:
        assembly = parabolic.assemble_space_time(prob, sample_density=args.sample_density)
        beta_h = parabolic.infsup_constant(assembly)
        continuity = parabolic.continuity_constant(assembly)
        solution = parabolic.solve_parabolic(assembly)
        c = assembly.constants
        results = {
            "nx": prob.nx,
            "nt": prob.nt,
            "alpha": c.alpha,
            "M": c.M,
            "nu0": c.nu0,
            "c0": c.c0,
            "C_P": c.C_P,
            "C_tr_h": continuity.c_tr_h,
            "beta_h": beta_h,
            "mu_h": continuity.mu_h,
            "C_max": continuity.c_max_h,
            "continuity_within_bound": continuity.within_bound,
            "proof_lower_bound": parabolic.proof_lower_bound(c),
            "solution_norms": solution.norms,
            "apriori_ok": solution.apriori_ok,
            "residual_rel": solution.residual_rel,
        }
        return results, assembly, solution

    results, assembly, solution = level_report(problem)

    if args.sweep:
        levels = [results]
        prev = (assembly, solution)
        diffs_v, diffs_h = [], []
        prob = problem
        for _ in range(args.sweep - 1):
            prob = prob.refined(2)
            lvl, fine_assembly, fine_solution = level_report(prob)
            levels.append(lvl)
            coarse_assembly, _coarse_sol = prev
            exact, exact_dx = _interpolants(fine_assembly, fine_solution)
            dv, dh = parabolic.solution_error(
                coarse_assembly, prev[1].coefficients, exact, exact_dx
            )
            diffs_v.append(dv)
            diffs_h.append(dh)
            prev = (fine_assembly, fine_solution)
        results = {"levels": levels, "difference_norms": {"l2_v": diffs_v, "l2_h": diffs_h}}
        if len(diffs_v) >= 2:
            results["rates"] = {
                "l2_v": [math.log2(a / b) for a, b in zip(diffs_v, diffs_v[1:])],
                "l2_h": [math.log2(a / b) for a, b in zip(diffs_h, diffs_h[1:])],
            }

    if args.dump_solution:
        grid = solution.nodal_values(assembly)
        with open(args.dump_solution, "w", encoding="utf-8") as fh:
            fh.write("t,x,u\n")
            for k in range(assembly.nt + 1):
                t_k = k * assembly.tau
                for i in range(assembly.nx + 1):
                    fh.write(f"{t_k!r},{i * assembly.h!r},{grid[k, i]!r}\n")

    inputs = {"config": _digest(args.config)}
    tolerances = {"sample_density": args.sample_density}
    return _emit("parabolic", inputs, tolerances, results, started)


def _interpolants(assembly: parabolic.ParabolicAssembly, solution: parabolic.ParabolicSolution):
    def exact(x, t):
        return parabolic.evaluate_solution(assembly, solution.coefficients, x, t)[0]

    def exact_dx(x, t):
        return parabolic.evaluate_solution(assembly, solution.coefficients, x, t)[1]

    return exact, exact_dx


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="infsup",
        description="Minimum-modulus / inf-sup diagnostics and the space-time parabolic pipeline.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_mod = sub.add_parser("modulus", help="moduli of an operator given as CSV matrices")
    p_mod.add_argument("matrix")
    p_mod.add_argument("gram_v")
    p_mod.add_argument("gram_w")
    p_mod.add_argument("--rel-tol", type=float, default=None, dest="rel_tol")
    p_mod.set_defaults(func=cmd_modulus)

    p_bnb = sub.add_parser("bnb", help="well-posedness verdict for a CSV operator")
    p_bnb.add_argument("matrix")
    p_bnb.add_argument("gram_v")
    p_bnb.add_argument("gram_w")
    p_bnb.add_argument("--rel-tol", type=float, default=None, dest="rel_tol")
    p_bnb.set_defaults(func=cmd_bnb)

    p_kik = sub.add_parser("kikuchi", help="multiplication-by-t closed-range probe")
    p_kik.add_argument("--cells", type=int, default=None)
    p_kik.add_argument("--sweep", type=str, default=None, help="comma-separated cell counts")
    p_kik.add_argument("--kind", choices=("p0", "p1"), default="p0")
    p_kik.add_argument("--csv", type=str, default=None, help="write the plot table here")
    p_kik.add_argument(
        "--dump-operator", type=str, default=None, dest="dump_operator",
        help="write <prefix>_matrix.csv and <prefix>_gram.csv for the last level",
    )
    p_kik.set_defaults(func=cmd_kikuchi)

    p_par = sub.add_parser("parabolic", help="space-time well-posedness pipeline")
    p_par.add_argument("config", help="JSON file with {T, nx, nt, nu, b, c, F, u0}")
    p_par.add_argument("--dump-solution", type=str, default=None, dest="dump_solution")
    p_par.add_argument("--sweep", type=int, default=None, help="number of nx=nt doubling levels")
    p_par.add_argument("--sample-density", type=int, default=4, dest="sample_density")
    p_par.set_defaults(func=cmd_parabolic)
    return parser


def _error_exit(code: int, kind: str, message: str, **details) -> int:
    payload = {"error": {"code": code, "kind": kind, "message": message, **details}}
    json.dump(_jsonable(payload), sys.stderr, sort_keys=True)
    sys.stderr.write("\n")
    return code


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        return _error_exit(exc.code, exc.kind, str(exc), **exc.details)
    except CsvFormatError as exc:
        return _error_exit(EXIT_INPUT, "csv-error", str(exc), file=exc.path, line=exc.line)
    except FileNotFoundError as exc:
        return _error_exit(EXIT_INPUT, "missing-file", str(exc))
    except ParseError as exc:
        return _error_exit(
            EXIT_INPUT, "parse-error", str(exc), offset=exc.offset, expected=list(exc.expected)
        )
    except EvalError as exc:
        return _error_exit(EXIT_INPUT, "eval-error", str(exc), x=exc.x, t=exc.t)
    except parabolic.EmptySpace as exc:
        return _error_exit(EXIT_INPUT, "empty-space", str(exc))
    except parabolic.AssumptionViolated as exc:
        return _error_exit(
            EXIT_ASSUMPTION, "assumption-violated", str(exc),
            condition=exc.condition, x=exc.x, t=exc.t, value=exc.value,
        )
    except (NotPositiveDefinite, NoConvergence, parabolic.SingularSystem) as exc:
        return _error_exit(EXIT_NUMERIC, "numeric-precondition", str(exc))
    except DimensionMismatch as exc:
        return _error_exit(EXIT_INPUT, "dimension-mismatch", str(exc))


if __name__ == "__main__":
    sys.exit(main())
