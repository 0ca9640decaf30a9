"""Command-line entry point: identity suites, density runs and scans.

Exit codes: 0 success, 1 identity failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import random
import sys
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from . import charsums as cs
from .arith import DomainError, gauss_sum_sign, primes_upto, qr_table, quadratic_gauss_sum
from .curves import ShortWeierstrass
from .density import fejer_pair, rank_bound, reports_to_csv, reports_to_json
from .families import FAMILY_NAMES, family_average, family_data, get_family, square_divisor_stat

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

SCAN_KINDS = ("conjecture71", "integer_analogue", "cubic", "appendix_b", "countC", "square_divisors", "three_var")


class UsageError(Exception):
    pass


# -- verification suites ------------------------------------------------------

@dataclass
class SuiteResult:
    name: str
    cases: int
    max_error: float
    failure: str | None = None

    @property
    def ok(self) -> bool:
        return self.failure is None


def _corrupted_T_closed(h: int, k: int, p: int) -> cs.CharSumValue:
    v = cs.T_closed(h, k, p)
    return cs.CharSumValue(v.value.conjugate(), v.method, p, (h, k))


def _table_suite(name: str, brute: Callable[[int], np.ndarray], closed: Callable, ps: Sequence[int]) -> SuiteResult:
    worst, cases = 0.0, 0
    for p in ps:
        err = np.abs(brute(p) - cs.closed_table(closed, p)) / p ** 1.5
        cases += err.size
        worst = max(worst, float(err.max()))
        if err.max() >= 1e-8:
            h, k = np.unravel_index(int(np.argmax(err >= 1e-8)), err.shape)
            return SuiteResult(name, cases, worst, f"p={p} h={h} k={k}")
    return SuiteResult(name, cases, worst)


def _gauss_suite(p_max: int) -> list[SuiteResult]:
    worst, cases, fail = 0.0, 0, None
    for p in primes_upto(min(p_max, 100)):
        if p == 2:
            continue
        x = np.arange(p)
        for a in range(p):
            for b in range(p):
                direct = np.exp(2j * math.pi * ((a * x * x + b * x) % p) / p).sum()
                err = abs(direct - quadratic_gauss_sum(a, b, p)) / math.sqrt(p)
                cases += 1
                worst = max(worst, err)
                if err >= 1e-8 and fail is None:
                    fail = f"p={p} a={a} b={b}"
    out = [SuiteResult("gauss", cases, worst, fail)]
    worst, cases, fail = 0.0, 0, None
    for p in primes_upto(max(p_max, 500)):
        if p == 2:
            continue
        chi = qr_table(p).astype(float)
        g = (chi * np.exp(2j * math.pi * np.arange(p) / p)).sum()
        err = abs(g - gauss_sum_sign(p) * math.sqrt(p)) / math.sqrt(p)
        cases += 1
        worst = max(worst, err)
        if err >= 1e-8 and fail is None:
            fail = f"p={p}"
    out.append(SuiteResult("eps_p", cases, worst, fail))
    return out


def _kloosterman_suite(p_max: int) -> SuiteResult:
    cases, fail = 0, None
    for p in primes_upto(min(p_max, 50)):
        if p == 2:
            continue
        for h in range(1, p):
            for k in range(1, p):
                cases += 1
                if not cs.kloosterman_identity_check(h, k, p) and fail is None:
                    fail = f"p={p} h={h} k={k}"
    return SuiteResult("kloosterman", cases, 0.0, fail)


def _reciprocity_suite(p_max: int) -> SuiteResult:
    cases, fail = 0, None
    for u in range(1, p_max + 1):
        for v in range(1, p_max + 1):
            if math.gcd(u, v) != 1:
                continue
            cases += 1
            if cs.reciprocity_check(u, v) != 0 and fail is None:
                fail = f"u={u} v={v}"
    return SuiteResult("reciprocity", cases, 0.0, fail)


def verify_charsums(p_max: int, inject_fault: bool = False) -> list[SuiteResult]:
    if p_max < 5:
        raise UsageError("p_max must be >= 5")
    ps = [p for p in primes_upto(p_max) if p >= 5]
    t_closed = _corrupted_T_closed if inject_fault else cs.T_closed
    results = [
        _table_suite("T", cs.T_table, t_closed, ps),
        _table_suite("Tprime", cs.Tprime_table, cs.Tprime_closed, ps),
    ]
    results += _gauss_suite(p_max)
    results.append(_kloosterman_suite(p_max))
    results.append(_reciprocity_suite(p_max))
    return results


def cmd_verify_charsums(args, out) -> int:
    results = verify_charsums(args.p_max, args.inject_fault)
    out.write(f"{'suite':<12} {'cases':>8} {'max_err':>10}  status\n")
    for r in results:
        out.write(f"{r.name:<12} {r.cases:>8} {r.max_error:>10.2e}  {'ok' if r.ok else 'FAIL ' + r.failure}\n")
    failed = [r for r in results if not r.ok]
    if failed:
        sys.stderr.write(f"identity failure in {failed[0].name}: {failed[0].failure}\n")
        return EXIT_FAIL
    return EXIT_OK


# -- density ------------------------------------------------------------------

def _floats(s: str) -> list[float]:
    try:
        return [float(t) for t in s.split(",") if t.strip()]
    except ValueError as exc:
        raise UsageError(f"bad number list {s!r}") from exc


def _ints(s: str) -> list[int]:
    return [int(round(v)) for v in _floats(s)]


def _base(s: str | None) -> ShortWeierstrass | None:
    if not s:
        return None
    a, b = (int(t) for t in s.split(","))
    return ShortWeierstrass(a, b)


def _family(name: str, base: str | None):
    if name not in FAMILY_NAMES:
        raise UsageError(f"unknown family {name!r}; choose from {', '.join(FAMILY_NAMES)}")
    return get_family(name, _base(base))


def cmd_density(args, out) -> int:
    nu = float(Fraction(args.nu))
    if not nu > 0:
        raise UsageError("nu must be positive")
    if not args.family:
        raise UsageError("--family is required")
    spec = _family(args.family, args.base)
    Xs = _floats(args.X)
    if not Xs or min(Xs) < 2:
        raise UsageError("every X must be >= 2")
    tf = fejer_pair(Fraction(args.nu))
    reports = [family_average(spec, X, tf, threads=args.threads, ledger=args.ledger,
                              small_primes=args.small_primes) for X in Xs]
    if args.format == "json":
        out.write(reports_to_json(reports, ledger=args.ledger))
    else:
        out.write(reports_to_csv(reports))
    return EXIT_OK


# -- scans --------------------------------------------------------------------

_DEFAULT_DELTA = {"integer_analogue": 1 / 60}


def _scan_reports(args) -> list[cs.ScanReport]:
    kind = args.kind
    if args.delta is None:
        args.delta = _DEFAULT_DELTA.get(kind, 1 / 48)
    if kind == "conjecture71":
        return [cs.conjecture_prime_sum(k, P, args.delta) for k in _ints(args.k or "2") for P in _ints(args.P or "500")]
    if kind == "integer_analogue":
        out = []
        for P in _ints(args.P or "200,400,800"):
            ks = _ints(args.k) if args.k else cs.admissible_ks(P, args.delta, args.count)
            out += [cs.integer_analogue_sum(P, args.delta, k) for k in ks]
        return out
    if kind == "cubic":
        return [cs.cubic_scan(k, P, args.residue) for k in _ints(args.k or "1") for P in _ints(args.P or "50,100,200")]
    if kind == "three_var":
        out = []
        for P in _ints(args.P or "1000"):
            H = int(args.H) if args.H else math.floor(P ** (2 / 3))
            K = int(args.K) if args.K else math.floor(math.sqrt(H ** 3 / P))
            out.append(cs.sum_S_three_var(H, K, P, delta=args.delta))
        return out
    if kind == "appendix_b":
        rng = random.Random(args.seed)
        out = []
        for M in _ints(args.M or "32"):
            for N in _ints(args.N or "32"):
                for Y in _floats(args.Y or "1000"):
                    c = [rng.choice((-1.0, 1.0)) for _ in range(N)] if args.random_coefficients else None
                    S, bound = cs.appendix_b_sum(M, N, Y, c)
                    case = cs.appendix_b_bound(M, N, Y)[1]
                    out.append(cs.ScanReport("appendix_b", (("M", M), ("N", N), ("Y", Y)), S, bound,
                                             {"case": case, "C": cs.APPENDIX_B_C}))
        return out
    if kind == "countC":
        out = []
        for Y in _ints(args.Y or "1000"):
            total, nz = cs.count_C(Y)
            norm = max(Y * (1 + math.log(Y)) ** 2, 1.0) if Y > 0 else 1.0
            out.append(cs.ScanReport("countC", (("Y", Y),), total, norm, {"nonzero": nz}))
        return out
    if kind == "square_divisors":
        spec = _family(args.family or "full", args.base)
        out = []
        for X in _floats(args.X or "1e4,1e5,1e6"):
            stat = square_divisor_stat(spec, X)
            data = family_data(spec, X)
            logs = math.fsum((data.weights * data.log_N).tolist())
            cstat = logs / (data.weight_total * math.log(data.X_eff))
            out.append(cs.ScanReport("square_divisors", (("family", spec.label), ("X", X)), stat, 1.0,
                                     {"conductor_stat": cstat, "count": data.count}))
        return out
    raise UsageError(f"unknown scan kind {kind!r}")


def cmd_scan(args, out) -> int:
    reports = _scan_reports(args)
    if args.format == "json":
        rows = [r.as_dict() for r in reports]
        out.write(json.dumps(rows, indent=1) + "\n")
    else:
        out.write(cs.scans_to_csv(reports))
    return EXIT_OK


def cmd_rank_bound(args, out) -> int:
    try:
        nu = Fraction(args.nu)
    except (ValueError, ZeroDivisionError) as exc:
        raise UsageError(f"bad rational {args.nu!r}") from exc
    if nu <= 0:
        raise UsageError("nu must be positive")
    r = rank_bound(nu)
    out.write(f"{r} ≈ {float(r):.4f}\n")
    return EXIT_OK


# -- parser -------------------------------------------------------------------

def read_config(path: str) -> dict[str, str]:
    """Plain ``key = value`` lines; '#' starts a comment."""
    cfg = {}
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{n}: expected key = value")
            k, v = line.split("=", 1)
            cfg[k.strip().replace("-", "_")] = v.strip()
    return cfg


def _positive_int(s: str) -> int:
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--threads", type=_positive_int, default=None, help="worker threads (env ECDENSITY_THREADS overrides)")
    common.add_argument("--config", default=None, help="key = value file; flags take precedence")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--output", "-o", default=None, help="write here instead of stdout")
    common.add_argument("--seed", type=int, default=0)

    parser = argparse.ArgumentParser(prog="ecdensity", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify-charsums", parents=[common], help="exhaustive complete-sum identity suites")
    v.add_argument("--p-max", type=int, default=97)
    v.add_argument("--inject-fault", action="store_true", help="corrupt one closed form (test mode)")
    v.set_defaults(func=cmd_verify_charsums)

    d = sub.add_parser("density", parents=[common], help="family averages of the explicit-formula statistic")
    d.add_argument("--family", default=None)
    d.add_argument("--X", default="1e4,1e5,1e6", help="comma-separated ladder")
    d.add_argument("--nu", default="0.4", help="Fejer support radius (rational allowed)")
    d.add_argument("--base", default=None, help="a,b of the base curve for twist_cubic")
    d.add_argument("--small-primes", choices=("tate", "clamp"), default="tate")
    d.add_argument("--ledger", action="store_true", help="include per-prime contributions (json)")
    d.set_defaults(func=cmd_density)

    for name in ("scan", "conductor-check"):
        s = sub.add_parser(name, parents=[common],
                           help="exploratory sums and counts" if name == "scan" else "alias of scan square_divisors")
        if name == "scan":
            s.add_argument("kind", choices=SCAN_KINDS)
        else:
            s.set_defaults(kind="square_divisors")
        for opt in ("--k", "--P", "--Y", "--M", "--N", "--X", "--H", "--K", "--family", "--base"):
            s.add_argument(opt, default=None)
        s.add_argument("--delta", type=float, default=None, help="default 1/60 for integer_analogue, else 1/48")
        s.add_argument("--count", type=int, default=5, help="admissible k per P (integer_analogue)")
        s.add_argument("--residue", type=int, default=None, help="restrict cubic scan to p = residue mod 3")
        s.add_argument("--random-coefficients", action="store_true")
        s.set_defaults(func=cmd_scan)

    r = sub.add_parser("rank-bound", parents=[common], help="exact 1/2 + 1/nu")
    r.add_argument("nu")
    r.set_defaults(func=cmd_rank_bound)
    return parser


def parse_args(argv: Sequence[str] | None) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        cfg = read_config(args.config)
        subparser = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest for a in subparser._actions}
        unknown = sorted(set(cfg) - known)
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(unknown)}")
        flags = {a.dest for a in subparser._actions if isinstance(a, argparse._StoreTrueAction)}
        for key in flags & set(cfg):
            cfg[key] = cfg[key].lower() in ("1", "true", "yes", "on")
        subparser.set_defaults(**cfg)
        args = parser.parse_args(argv)
    env = os.environ.get("ECDENSITY_THREADS")
    if env:
        args.threads = _positive_int(env)
    return args


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    except (UsageError, argparse.ArgumentTypeError, ValueError) as exc:
        sys.stderr.write(f"usage error: {exc}\n")
        return EXIT_USAGE
    out = open(args.output, "w", encoding="utf-8", newline="") if args.output else sys.stdout
    try:
        return args.func(args, out)
    except (UsageError, DomainError) as exc:
        sys.stderr.write(f"usage error: {exc}\n")
        return EXIT_USAGE
    finally:
        if out is not sys.stdout:
            out.close()


if __name__ == "__main__":
    sys.exit(main())
