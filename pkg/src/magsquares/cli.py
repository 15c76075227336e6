"""Command-line front end: ``magsquares <command> [options]``.

Every command writes CSV (header always present) or a JSON document with
the configuration, library version, seed and wall-clock time.  Exact
integers and fractions are written as decimal strings.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from decimal import Decimal, localcontext
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__, limits, verify
from .enumeration import (
    DEFAULT_ENUM_CAP,
    DEFAULT_STATE_CAP,
    ResourceCapExceeded,
    enumerate_matrices,
    exact_statistic_pmf,
    spectrum_of,
    transfer_count_H,
)
from .permutation import ComponentSpectrum, make_rng
from .sampler import (
    ENGINES,
    importance_estimate,
    parse_statistic,
    project,
    rejection_sample_spectrum,
    sample_colored,
    weight,
)
from .series import CountTable, f_r2, f_table_from_H, h_r2, spectra, spectrum_count

SEED_ENV = "MAGSQ_SEED"
EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_CAP = 0, 1, 2, 3

# exact H(n, 2) is cheap up to here (a few seconds at the top end)
EXACT_H_MAX = 20_000
# side-by-side exact expectation in `estimate` runs over all partitions of n
EXACT_VALUE_MAX = 30
ESTIMATE_CHUNK = 20_000

COLUMNS = {
    "count": ["n", "r", "H", "f", "ratio", "ratio_decimal"],
    "enumerate": ["index", "matrix", "spectrum"],
    "spectrum-pmf": ["value", "probability", "probability_decimal"],
    "sample-colored": ["index", "blue", "red", "spectrum", "weight"],
    "sample-uniform": ["index", "trials", "blue", "red", "spectrum"],
    "estimate": ["statistic", "n", "sample_count", "engine", "seed", "estimate",
                 "self_normalized", "ess", "exact", "exact_decimal", "raw_weighted_sum",
                 "weight_sum", "weight_sq_sum"],
    "limits": ["kind", "key", "value", "error_bound"],
    "verify": ["id", "name", "status", "seconds", "time_limit", "detail", "measured"],
}

EPILOG = """\
CSV columns (header row always written):
  count          n, r, H, f, ratio (f/H reduced fraction), ratio_decimal
  enumerate      index, matrix (rows joined by ';', entries by ','), spectrum
  spectrum-pmf   value, probability (fraction), probability_decimal
  sample         colored: index, blue, red, spectrum, weight
                 uniform: index, trials, blue, red, spectrum
  estimate       statistic, n, sample_count, engine, seed, estimate,
                 self_normalized, ess, exact, exact_decimal,
                 raw_weighted_sum, weight_sum, weight_sq_sum
  limits         kind, key, value, error_bound
  verify         id, name, status, seconds, time_limit, detail, measured (JSON)

Permutations are written as 1-based images separated by spaces; spectra as
'size:count' pairs.  The default seed comes from $MAGSQ_SEED (else 0).

Exit codes: 0 success, 1 failed criterion, 2 usage error, 3 resource cap.
"""


class UsageError(Exception):
    pass


def _decimal(q: Fraction, digits: int = 30) -> str:
    with localcontext() as ctx:
        ctx.prec = digits
        return str(Decimal(q.numerator) / Decimal(q.denominator))


def _fmt_spectrum(s: ComponentSpectrum) -> str:
    return " ".join(f"{k}:{c}" for k, c in s.parts)


def _fmt_perm(arr) -> str:
    return " ".join(str(int(v) + 1) for v in arr)


# ------------------------------------------------------------------- cache

def _load_cache(path: str | None) -> list[CountTable]:
    if not path or not Path(path).exists():
        return []
    try:
        data = json.loads(Path(path).read_text())
        items = data if isinstance(data, list) else [data]
        return [CountTable.from_json(json.dumps(d)) for d in items]
    except (ValueError, KeyError, TypeError) as exc:
        raise UsageError(f"unreadable count cache {path}: {exc}") from None


def _save_cache(path: str, tables: list[CountTable]) -> None:
    items = [json.loads(t.to_json()) for t in sorted(tables, key=lambda t: (t.kind, t.r))]
    Path(path).write_text(json.dumps(items, indent=1) + "\n")


def _h_table(r: int, n: int, state_cap: int, cache_path: str | None) -> CountTable:
    tables = _load_cache(cache_path)
    table = next((t for t in tables if t.r == r and t.kind == "H"), None)
    if table is None:
        table = CountTable(r, {})
        tables.append(table)
    missing = [k for k in range(n + 1) if k not in table]
    for k in missing:
        table.values[k] = h_r2(k) if r == 2 else transfer_count_H(k, r, state_cap)
    if cache_path and missing:
        _save_cache(cache_path, tables)
    return table


# ---------------------------------------------------------------- commands

def cmd_count(a) -> tuple[list[dict], dict]:
    if a.n < 1 or a.r < 0:
        raise UsageError("count needs --n >= 1 and --r >= 0")
    H = _h_table(a.r, a.n, a.state_cap, a.cache)
    if a.r == 2:
        f = {k: f_r2(k) for k in range(1, a.n + 1)}
    else:
        f = f_table_from_H(H, a.n).values
    rows = []
    for k in range(1, a.n + 1):
        ratio = Fraction(f[k], H[k])
        rows.append({"n": k, "r": a.r, "H": str(H[k]), "f": str(f[k]),
                     "ratio": str(ratio), "ratio_decimal": _decimal(ratio)})
    return rows, {}


def cmd_enumerate(a) -> tuple[list[dict], dict]:
    if a.n < 1:
        raise UsageError("enumerate needs --n >= 1")
    rows = []
    for i, A in enumerate(enumerate_matrices(a.n, a.r, a.cap), start=1):
        dense = A.to_dense()
        rows.append({"index": i, "matrix": ";".join(",".join(map(str, row)) for row in dense),
                     "spectrum": _fmt_spectrum(spectrum_of(A))})
    return rows, {"total": str(len(rows))}


def cmd_spectrum_pmf(a) -> tuple[list[dict], dict]:
    if a.n < 1:
        raise UsageError("spectrum-pmf needs --n >= 1")
    try:
        pmf = exact_statistic_pmf(a.n, a.r, a.stat or "C", a.cap)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    rows = [{"value": v, "probability": str(p), "probability_decimal": _decimal(p)}
            for v, p in zip(pmf.support, pmf.probs)]
    return rows, {"mean": str(pmf.mean()), "mean_decimal": _decimal(pmf.mean())}


def cmd_sample(a) -> tuple[list[dict], dict]:
    if a.n < 1 or a.N < 1:
        raise UsageError("sample needs --n >= 1 and --N >= 1")
    rng = make_rng(a.seed)
    rows = []
    if a.mode == "colored":
        for i in range(1, a.N + 1):
            g = sample_colored(a.n, rng)
            _A, spec = project(g)
            rows.append({"index": i, "blue": _fmt_perm(g.blue.to_array()),
                         "red": _fmt_perm(g.red.to_array()),
                         "spectrum": _fmt_spectrum(spec), "weight": str(weight(spec))})
    else:
        for i in range(1, a.N + 1):
            spec, trials, (blue, red) = rejection_sample_spectrum(a.n, rng, a.max_trials)
            rows.append({"index": i, "trials": trials, "blue": _fmt_perm(blue),
                         "red": _fmt_perm(red), "spectrum": _fmt_spectrum(spec)})
    return rows, {}


def exact_expectation(stat, n: int) -> Fraction:
    """E stat over Uniform(M(n, 2)) summed over all spectra (exact for integer-valued stats)."""
    f = CountTable(2, {k: f_r2(k) for k in range(1, n + 1)}, kind="f")
    total = Fraction(0)
    for s in spectra(n):
        total += Fraction(spectrum_count(2, s, f)) * Fraction(stat(s))
    return total / h_r2(n)


def _estimate_chunk(args):
    stat, n, size, child, H, engine = args
    return importance_estimate(stat, n, size, rng=child, H_value=H, engine=engine)


def cmd_estimate(a) -> tuple[list[dict], dict]:
    if a.n < 1 or a.N < 1:
        raise UsageError("estimate needs --n >= 1 and --N >= 1")
    if not a.stat:
        raise UsageError("estimate needs --stat")
    try:
        stat = parse_statistic(a.stat)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if a.engine not in ENGINES:
        raise UsageError(f"unknown engine {a.engine!r}")
    H = h_r2(a.n) if a.n <= EXACT_H_MAX else None
    # fixed chunking: the result does not depend on --threads
    sizes = [ESTIMATE_CHUNK] * (a.N // ESTIMATE_CHUNK)
    if a.N % ESTIMATE_CHUNK:
        sizes.append(a.N % ESTIMATE_CHUNK)
    children = np.random.SeedSequence(a.seed).spawn(len(sizes))
    jobs = [(stat, a.n, s, c, H, a.engine) for s, c in zip(sizes, children)]
    with ThreadPoolExecutor(max_workers=max(1, a.threads)) as pool:
        parts = list(pool.map(_estimate_chunk, jobs))
    report = parts[0]
    for p in parts[1:]:
        report = report.merge(p)
    report.seed = a.seed
    row = report.to_dict()
    row["exact"] = row["exact_decimal"] = None
    if a.n <= EXACT_VALUE_MAX:
        ex = exact_expectation(stat, a.n)
        row["exact"], row["exact_decimal"] = str(ex), _decimal(ex)
    return [row], {}


def cmd_limits(a) -> tuple[list[dict], dict]:
    rows = []
    kmax = a.n or 10
    for i in range(1, kmax + 1):
        rows.append({"kind": "poisson_rate", "key": i, "value": repr(limits.poisson_rate(i, a.r)),
                     "error_bound": "0"})
    if a.r == 2:
        for s in range(1, kmax + 1):
            rows.append({"kind": "smallest_pmf", "key": s,
                         "value": repr(limits.smallest_limit_pmf(s)), "error_bound": "0"})
        for m in range(0, a.moments + 1):
            q = limits.largest_moment_limit(m)
            rows.append({"kind": "largest_moment", "key": m, "value": repr(q.value),
                         "error_bound": repr(q.abs_error_bound)})
    return rows, {}


def cmd_verify(a) -> tuple[list[dict], dict]:
    cache = _load_cache(a.cache) if a.cache else None
    results = verify.run_suite(a.suite, a.budget, cache)
    rows = []
    for res in results:
        print(res.line(), file=sys.stderr)
        d = res.to_dict()
        if a.no_clock:
            d["seconds"] = None
        d["measured"] = json.dumps(d["measured"], sort_keys=True)
        rows.append(d)
    failed = [r for r in results if r.status == verify.FAIL]
    return rows, {"failed": len(failed), "exit": EXIT_FAIL if failed else EXIT_OK}


COMMANDS = {
    "count": cmd_count,
    "enumerate": cmd_enumerate,
    "spectrum-pmf": cmd_spectrum_pmf,
    "sample": cmd_sample,
    "estimate": cmd_estimate,
    "limits": cmd_limits,
    "verify": cmd_verify,
}


# ------------------------------------------------------------------ output

def _env_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None or raw == "":
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"${SEED_ENV} must be an integer, got {raw!r}") from None


def _config(a) -> dict:
    skip = {"func", "no_clock"}
    return {k: v for k, v in sorted(vars(a).items()) if k not in skip}


def _render(a, rows: list[dict], extra: dict, seconds: float) -> str:
    if a.format == "csv":
        key = f"sample-{a.mode}" if a.command == "sample" else a.command
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=COLUMNS[key], extrasaction="ignore", lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: ("" if v is None else v) for k, v in row.items()})
        return buf.getvalue()
    doc = {
        "tool": "magsquares",
        "version": __version__,
        "command": a.command,
        "config": _config(a),
        "seed": a.seed,
        "wall_clock_seconds": None if a.no_clock else round(seconds, 3),
        "summary": {k: v for k, v in extra.items() if k != "exit"},
        "rows": rows,
    }
    return json.dumps(doc, indent=1) + "\n"


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="magsquares", description=__doc__.splitlines()[0],
                                epilog=EPILOG, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--version", action="version", version=f"magsquares {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--format", choices=("csv", "json"), default="csv")
        sp.add_argument("--out", metavar="PATH", help="write here instead of stdout")
        sp.add_argument("--seed", type=int, default=None,
                        help=f"RNG seed (default: ${SEED_ENV} or 0)")
        sp.add_argument("--no-clock", action="store_true",
                        help="omit timings so JSON output is byte-reproducible")

    c = sub.add_parser("count", help="exact H(n, r), f(n, r) and f/H for 1..n", epilog=EPILOG,
                       formatter_class=argparse.RawDescriptionHelpFormatter)
    c.add_argument("--n", type=int, required=True)
    c.add_argument("--r", type=int, required=True)
    c.add_argument("--cache", metavar="PATH", help="JSON count cache, read and extended")
    c.add_argument("--state-cap", type=int, default=DEFAULT_STATE_CAP)
    common(c)

    e = sub.add_parser("enumerate", help="list every element of M(n, r)")
    e.add_argument("--n", type=int, required=True)
    e.add_argument("--r", type=int, required=True)
    e.add_argument("--cap", type=int, default=DEFAULT_ENUM_CAP)
    common(e)

    s = sub.add_parser("spectrum-pmf", help="exact law of S, L, C or chi_k by enumeration")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--r", type=int, required=True)
    s.add_argument("--stat", default="C")
    s.add_argument("--cap", type=int, default=DEFAULT_ENUM_CAP)
    common(s)

    sm = sub.add_parser("sample", help="colored pairs (weighted) or exact uniform draws for r = 2")
    sm.add_argument("--n", type=int, required=True)
    sm.add_argument("--N", type=int, default=1)
    sm.add_argument("--mode", choices=("colored", "uniform"), default="uniform")
    sm.add_argument("--max-trials", type=int, default=10**6)
    common(sm)

    es = sub.add_parser("estimate", help="importance-sampling estimate of E h(A) on M(n, 2)")
    es.add_argument("--stat", required=True,
                    help="one, components, smallest, largest, chi_k, largest_frac_moment_m, "
                         "components_normalized, or base=value for an indicator")
    es.add_argument("--n", type=int, required=True)
    es.add_argument("--N", type=int, required=True)
    es.add_argument("--threads", type=int, default=1)
    es.add_argument("--engine", choices=ENGINES, default="pairs")
    common(es)

    li = sub.add_parser("limits", help="tabulate limit laws (Poisson rates, smallest, largest)")
    li.add_argument("--r", type=int, default=2)
    li.add_argument("--n", type=int, default=10, help="largest component size tabulated")
    li.add_argument("--moments", type=int, default=2, help="largest moment order of L/n")
    common(li)

    v = sub.add_parser("verify", help="run the acceptance checks")
    v.add_argument("--suite", choices=("identities", "limits", "all"), default="identities")
    v.add_argument("--budget", type=int, default=None,
                   help="max samples a stochastic check may use; larger ones are SKIPPED")
    v.add_argument("--cache", metavar="PATH", help="count cache to check against recomputation")
    common(v)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        a = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if a.seed is None:
            a.seed = _env_seed()
        if getattr(a, "r", 0) is not None and getattr(a, "r", 0) < 0:
            raise UsageError("--r must be >= 0")
        t0 = time.perf_counter()
        rows, extra = COMMANDS[a.command](a)
        text = _render(a, rows, extra, time.perf_counter() - t0)
    except UsageError as exc:
        print(f"magsquares {a.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ResourceCapExceeded as exc:
        print(f"magsquares {a.command}: resource cap: {exc}", file=sys.stderr)
        return EXIT_CAP
    except ValueError as exc:
        print(f"magsquares {a.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if a.out:
        Path(a.out).write_text(text)
    else:
        sys.stdout.write(text)
    return extra.get("exit", EXIT_OK)


if __name__ == "__main__":
    sys.exit(main())
