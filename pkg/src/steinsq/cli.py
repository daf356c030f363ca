"""Command-line entry point: ``steinsq {gen,solve,certify,check-lemma,min-n}``.

Summaries go to stdout as ``key=value`` lines. Exit codes:
0 ok, 2 infeasible parameters, 3 input/output or parse error,
4 time limit hit (best result still written), 5 certification failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import __version__
from .certify import audit_transversal, check_certificate, verify_structure
from .construct import generate, shuffle
from .errors import (
    DimensionMismatch,
    GridFormatError,
    HardCapExceeded,
    InfeasibleParams,
    InvalidTransversal,
    StructureNotVerified,
    SymmetricInfeasible,
    TimeLimitExceeded,
)
from .grid import PartialTransversal, read_grid, write_grid
from .layout import ConstructionParams, feasibility, layout_from_json, layout_to_json, max_feasible_b, min_feasible_n
from .seq import as_fraction, build_sequence_plan, check_p1, check_squares
from .solve import NibbleConfig, default_threads, solve_brute, solve_exact, solve_greedy, solve_nibble

EXIT_OK = 0
EXIT_INFEASIBLE = 2
EXIT_IO = 3
EXIT_TIMEOUT = 4
EXIT_CERT = 5


def _emit(**kv):
    for k, v in kv.items():
        if isinstance(v, bool):
            v = str(v).lower()
        print(f"{k}={v}")


def _err(msg):
    print(f"error: {msg}", file=sys.stderr)


def _b_arg(text):
    if text == "auto":
        return None
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError("--b must be auto or a nonnegative integer")
    return v


def _frac_arg(text):
    try:
        return as_fraction(text)
    except (ValueError, TypeError, ZeroDivisionError) as e:
        raise argparse.ArgumentTypeError(str(e))


def cmd_gen(args) -> int:
    variant = args.variant.replace("-", "_")
    try:
        p = ConstructionParams(
            n=args.n,
            cx=args.cx,
            slack_mode=args.slack,
            b=args.b,
            cb=args.cb,
            fill=args.fill,
            seed=args.seed,
            variant=variant,
            pad=args.pad,
        )
        g, layout, part = generate(p)
    except InfeasibleParams as e:
        _err(str(e))
        _emit(status="infeasible", condition=e.condition, lhs=e.lhs, rhs=e.rhs)
        return EXIT_INFEASIBLE
    except SymmetricInfeasible as e:
        _err(str(e))
        _emit(status="infeasible", condition=e.constraint)
        return EXIT_INFEASIBLE
    except ValueError as e:
        _err(str(e))
        return EXIT_IO
    if args.shuffle is not None:
        g, layout, part = shuffle(g, layout, part, args.shuffle)

    cert = verify_structure(g, layout, part)
    base = args.output
    try:
        write_grid(g, f"{base}.grid")
        with open(f"{base}.layout.json", "w") as fh:
            fh.write(layout_to_json(layout, part))
        with open(f"{base}.cert.json", "w") as fh:
            fh.write(cert.to_json())
    except OSError as e:
        _err(str(e))
        return EXIT_IO

    _emit(
        status="ok",
        n=g.n,
        m=g.m,
        variant=variant,
        n0=layout.n0,
        b_size=part.b_size,
        structure_ok=cert.structure_ok,
        bound=cert.bound,
        sharp_bound=cert.sharp_bound,
        deficiency_certified=cert.deficiency_certified,
    )
    if not cert.deficiency_certified:
        print("note=no deficiency certified (|B| = 0)")
    for c in feasibility(p):
        _emit(**{f"margin_{c.name}": c.margin})
    _emit(files=f"{base}.grid,{base}.layout.json,{base}.cert.json")
    return EXIT_OK


def cmd_solve(args) -> int:
    try:
        g = read_grid(args.grid)
    except (OSError, GridFormatError) as e:
        _err(str(e))
        return EXIT_IO
    threads = args.threads if args.threads is not None else default_threads()
    code = EXIT_OK
    try:
        if args.method == "exact":
            res = solve_exact(g, time_limit=args.time_limit, force=args.force, threads=threads)
        elif args.method == "brute":
            res = solve_brute(g)
        elif args.method == "greedy":
            res = solve_greedy(g, restarts=args.restarts, seed=args.seed)
        else:
            cfg = NibbleConfig(
                epsilon=args.epsilon,
                round_fraction=args.round_fraction,
                max_rounds=args.max_rounds,
                seed=args.seed,
                greedy_finish=not args.no_greedy_finish,
            )
            res = solve_nibble(g, cfg)
    except TimeLimitExceeded as e:
        res = e.result
        code = EXIT_TIMEOUT
    except HardCapExceeded as e:
        _err(str(e))
        return EXIT_IO
    _emit(
        method=res.method,
        n=g.n,
        size=res.size,
        optimal=res.optimal,
        nodes_explored=res.nodes_explored,
        rounds=res.rounds,
        elapsed=f"{res.elapsed:.3f}",
    )
    if code == EXIT_TIMEOUT:
        print("note=time limit reached; best found reported")
    if args.output:
        try:
            with open(args.output, "w") as fh:
                json.dump(res.to_dict(), fh, indent=1)
                fh.write("\n")
        except OSError as e:
            _err(str(e))
            return EXIT_IO
    return code


def _load_witness(path) -> PartialTransversal:
    with open(path) as fh:
        data = json.load(fh)
    if isinstance(data, dict):
        data = data["witness"]
    return PartialTransversal(data)


def cmd_certify(args) -> int:
    try:
        g = read_grid(args.grid)
        with open(args.layout) as fh:
            layout, part = layout_from_json(fh.read())
    except (OSError, GridFormatError, ValueError, KeyError) as e:
        _err(str(e))
        return EXIT_IO
    try:
        cert = verify_structure(g, layout, part, strict=args.strict)
    except DimensionMismatch as e:
        _err(str(e))
        _emit(structure_ok=False, reason="dimension-mismatch")
        return EXIT_CERT
    _emit(n=g.n, m=g.m, b_size=cert.b_size, structure_ok=cert.structure_ok)
    for c in cert.checked_conditions:
        _emit(**{c.name: "ok" if c.ok else "FAIL"})
        if not c.ok:
            if c.detail:
                print(f"{c.name}_detail={c.detail}")
            if c.violations:
                cells = ";".join(f"{r},{col}" for r, col in c.violations)
                print(f"{c.name}_cells={cells}")
    _emit(bound=cert.bound, sharp_bound=cert.sharp_bound, every_symbol_n_times=cert.every_symbol_n_times)
    code = EXIT_OK if cert.structure_ok else EXIT_CERT

    if args.check:
        try:
            with open(args.check) as fh:
                claimed = json.load(fh)
        except (OSError, ValueError) as e:
            _err(str(e))
            return EXIT_IO
        same = check_certificate(claimed, g, layout, part)
        _emit(certificate_reproduced=same)
        if not same:
            code = EXIT_CERT

    if args.audit:
        try:
            t = _load_witness(args.audit)
            audit = audit_transversal(g, layout, part, t, cert)
        except (OSError, ValueError, KeyError, IndexError) as e:
            _err(str(e))
            return EXIT_IO
        except InvalidTransversal as e:
            _err(f"witness is not a partial transversal: {e}")
            return EXIT_CERT
        except StructureNotVerified as e:
            _err(str(e))
            return EXIT_CERT
        _emit(
            audit_size=audit.size,
            audit_sum_z=sum(audit.z),
            audit_used_b=audit.used_b,
            audit_predicted_missed=audit.predicted_missed_lower_bound,
            audit_actual_missed=audit.actual_missed,
            audit_ok=audit.ok,
        )
        for step in audit.failed_steps:
            print(f"audit_failed_step={step}")
        if not audit.ok:
            code = EXIT_CERT

    if args.output:
        try:
            with open(args.output, "w") as fh:
                fh.write(cert.to_json())
        except OSError as e:
            _err(str(e))
            return EXIT_IO
    return code


def cmd_check_lemma(args) -> int:
    plan = build_sequence_plan(args.n, args.cx)
    p1 = check_p1(plan)
    sq = check_squares(plan)
    _emit(
        n=plan.n,
        cx=f"{plan.cx.numerator}/{plan.cx.denominator}",
        n0=plan.n0,
        blocks_total=plan.total,
        p1_holds=p1.holds,
        p1_worst_t=p1.worst_t,
        p1_worst_value=p1.worst_value,
        p1_limit=f"{plan.n}/4",
        sum_sq=sq.sum_sq,
        intermediate_holds=sq.intermediate_holds,
        paper_bound_holds=sq.paper_bound_holds,
    )
    if not sq.paper_bound_holds:
        print("note=n ln n / 10 bound not reached (only promised for huge n)")
    # largest |B| passing the layout conditions, per slack criterion
    best = None
    for slack in ("paper", "tight"):
        mfb = max_feasible_b(args.n, args.cx, slack)
        _emit(**{f"max_feasible_b_{slack}": "none" if mfb is None else mfb})
        if mfb is not None and (best is None or mfb > best):
            best = mfb
    _emit(max_feasible_b="none" if best is None else best)
    return EXIT_OK


def cmd_min_n(args) -> int:
    n = min_feasible_n(args.k, args.cx, args.slack, n_max=args.n_max)
    _emit(k=args.k, cx=f"{args.cx.numerator}/{args.cx.denominator}", slack=args.slack, min_n="none" if n is None else n)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="steinsq", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="construct a grid, its layout and certificate")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--cx", type=_frac_arg, default=as_fraction("1/3"))
    g.add_argument("--slack", choices=["paper", "tight"], default="paper")
    g.add_argument("--b", type=_b_arg, default=None, help="auto or an explicit |B|")
    g.add_argument("--cb", type=_frac_arg, default=as_fraction("1/20"))
    g.add_argument("--fill", choices=["balanced", "random"], default="balanced")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--variant", choices=["plain", "symmetric", "bipartite-deleted"], default="plain")
    g.add_argument("--pad", type=int, default=0)
    g.add_argument("--shuffle", type=int, default=None, metavar="SEED", help="permute rows/columns/symbols")
    g.add_argument("-o", "--output", required=True, help="output basename")
    g.set_defaults(func=cmd_gen)

    s = sub.add_parser("solve", help="search for a large partial transversal")
    s.add_argument("grid")
    s.add_argument("--method", choices=["exact", "brute", "greedy", "nibble"], default="exact")
    s.add_argument("--time-limit", type=float, default=None)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--restarts", type=int, default=10)
    s.add_argument("--epsilon", type=float, default=0.01)
    s.add_argument("--round-fraction", type=float, default=0.1)
    s.add_argument("--max-rounds", type=int, default=50)
    s.add_argument("--no-greedy-finish", action="store_true")
    s.add_argument("--threads", type=int, default=None, help="default: $STEIN_THREADS or 1")
    s.add_argument("--force", action="store_true", help="ignore the exact-solver size cap")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_solve)

    c = sub.add_parser("certify", help="verify structure and emit a certificate")
    c.add_argument("grid")
    c.add_argument("--layout", required=True)
    c.add_argument("--audit", help="witness JSON (solve output or a list of [row, col])")
    c.add_argument("--check", help="existing certificate to re-verify")
    c.add_argument("--strict", action="store_true", help="require n occurrences of every B symbol")
    c.add_argument("-o", "--output")
    c.set_defaults(func=cmd_certify)

    lm = sub.add_parser("check-lemma", help="check the block-size inequalities for one n")
    lm.add_argument("--n", type=int, required=True)
    lm.add_argument("--cx", type=_frac_arg, default=as_fraction("1/3"))
    lm.set_defaults(func=cmd_check_lemma)

    mn = sub.add_parser("min-n", help="smallest n found where an explicit |B| = k is feasible")
    mn.add_argument("--k", type=int, default=1)
    mn.add_argument("--cx", type=_frac_arg, default=as_fraction("1/3"))
    mn.add_argument("--slack", choices=["paper", "tight"], default="paper")
    mn.add_argument("--n-max", type=int, default=10**7)
    mn.set_defaults(func=cmd_min_n)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "threads", None) is None and "STEIN_THREADS" in os.environ:
        args.threads = default_threads()
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
