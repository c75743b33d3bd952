"""Command-line front end: one subcommand per analysis, reproducible outputs.

Each run writes its payload (to ``--out`` atomically, or to stdout) and then
emits a manifest naming the subcommand, parameters, seed, version and the
SHA-256 digest of every output.  With ``--out`` the manifest goes to stdout;
without it the payload owns stdout and the manifest is written to stderr.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import sys
import tempfile
from fractions import Fraction

from . import SCHEMA_VERSION, __version__
from . import core, distributions as dists, geometry, passage, stochastic
from .errors import BudgetError, InvariantViolation, WindowTooLarge
from .selftest import run_selftest
from .streams import MASK64


def u64(text: str) -> int:
    value = int(text, 10)
    if not 0 <= value <= MASK64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return value


def positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def fraction_arg(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational number: {text}")


def int_list(text: str) -> list[int]:
    return [int(t) for t in text.split(",") if t.strip()]


def write_atomic(path: str, data: bytes) -> None:
    folder = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=folder, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def csv_bytes(header, rows) -> bytes:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue().encode("utf-8")


def json_bytes(obj) -> bytes:
    return (json.dumps(obj, indent=2, sort_keys=True) + "\n").encode("utf-8")


def table_bytes(fmt: str, header, rows) -> bytes:
    if fmt == "json":
        return json_bytes([dict(zip(header, r)) for r in rows])
    return csv_bytes(header, rows)


class Outputs:
    """Collects payloads and their digests for the manifest."""

    def __init__(self, out_path):
        self.out_path = out_path
        self.digests = {}

    def main(self, data: bytes) -> None:
        if self.out_path:
            write_atomic(self.out_path, data)
            self.digests[self.out_path] = hashlib.sha256(data).hexdigest()
        else:
            sys.stdout.write(data.decode("utf-8"))
            sys.stdout.flush()
            self.digests["<stdout>"] = hashlib.sha256(data).hexdigest()

    def extra(self, path: str, data: bytes) -> None:
        write_atomic(path, data)
        self.digests[path] = hashlib.sha256(data).hexdigest()


# subcommand handlers: (args, outputs) -> None


def cmd_orbit(args, out: Outputs) -> None:
    step = core.collatz_step if args.collatz else core.syracuse_step
    n = args.n_start
    seq = [n]
    for _ in range(args.steps):
        n = step(n)
        seq.append(n)
    out.main((" ".join(str(v) for v in seq) + "\n").encode("utf-8"))


def _load_dist(args):
    if args.float or args.n > dists.EXACT_CEILING:
        return dists.syracuse_dist_float(args.n, budget_mb=args.budget_mb)
    return dists.syracuse_dist_exact(args.n)


def _dist_payload(dist, fmt: str) -> bytes:
    if isinstance(dist, dists.Dist3Adic):
        header = ("residue", "prob_num", "prob_den")
    else:
        header = ("residue", "prob")
    return table_bytes(fmt, header, dists.to_csv_rows(dist))


def cmd_dist(args, out: Outputs) -> None:
    out.main(_dist_payload(_load_dist(args), args.format))


def cmd_project(args, out: Outputs) -> None:
    out.main(_dist_payload(dists.project(_load_dist(args), args.k), args.format))


def cmd_osc(args, out: Outputs) -> None:
    dist = _load_dist(args)
    value = dists.oscillation(dist, args.m)
    row = {"n": args.n, "m": args.m, "osc": str(value), "osc_float": float(value)}
    out.main(table_bytes(args.format, tuple(row), [tuple(row.values())]))


def cmd_charfn(args, out: Outputs) -> None:
    rows = dists.char_probe_table(
        args.levels, extra=args.extra, seed=args.seed, xis=args.xi, budget_mb=args.budget_mb
    )
    header = ("n", "xi", "re", "im", "abs")
    out.main(table_bytes(args.format, header, [tuple(r[h] for h in header) for r in rows]))


def cmd_charosc(args, out: Outputs) -> None:
    rows = []
    for n in range(1, args.n_max + 1):
        rep = dists.char_osc_inequality_check(n)
        rows.append((n, str(rep.oscillation), rep.max_abs_char, rep.max_excess, rep.checked, rep.ok))
    out.main(table_bytes(args.format, ("n", "osc", "max_abs_char", "max_excess", "checked", "ok"), rows))
    if not all(r[-1] for r in rows):
        raise InvariantViolation("char-vs-osc inequality failed")


def cmd_valuation_tv(args, out: Outputs) -> None:
    rows = []
    for n in args.n:
        for m in args.m:
            r = stochastic.tv_valuation_vs_geom(n, m)
            rows.append((n, m, str(r.tv), str(r.escaped_mass_model), str(r.escaped_mass_geom)))
    out.main(table_bytes(args.format, ("n", "m", "tv", "escaped_mass_model", "escaped_mass_geom"), rows))


def cmd_firstpass(args, out: Outputs) -> None:
    cfg = passage.ExperimentConfig(args.x, args.alpha, args.samples, args.seed, args.cap)
    report = passage.passage_experiment(cfg, threads=args.threads)
    if args.emit_locations:
        rows = [(tag, n, t, loc, repr(p)) for tag, n, t, loc, p in report.rows()]
        out.extra(args.emit_locations, csv_bytes(("y_tag", "N", "time", "location", "predicted_time"), rows))
    out.main(json_bytes(report.summary()))


def _window_args(sp) -> None:
    sp.add_argument("--n", type=int, required=True, help="3-adic level")
    sp.add_argument("--xi", type=int, required=True, help="frequency, not divisible by 3")
    sp.add_argument("--eps", type=fraction_arg, default=Fraction(1, 100), help="black threshold (default 1/100)")


def _context(args) -> geometry.FreqContext:
    return geometry.FreqContext(args.n, args.xi, args.eps)


def cmd_triangles(args, out: Outputs) -> None:
    ctx = _context(args)
    dec = geometry.decompose_black(ctx, args.jmin, args.jmax, args.lmin, args.lmax)
    if not (dec.partition_ok and dec.all_black_ok and dec.corner_ok):
        raise InvariantViolation("triangle decomposition does not partition the black set")
    out.main(json_bytes([t.to_json() for t in dec.triangles]))


def cmd_gridmap(args, out: Outputs) -> None:
    ctx = _context(args)
    span = (args.jmax - args.jmin + 1) * (args.lmax - args.lmin + 1)
    if span > geometry.DEFAULT_WINDOW_BUDGET:
        raise WindowTooLarge(f"{span} grid points exceeds the window budget")
    rows = list(geometry.grid_rows(ctx, args.jmin, args.jmax, args.lmin, args.lmax))
    out.main(table_bytes(args.format, ("j", "l", "color", "theta_num"), rows))


def cmd_renewal(args, out: Outputs) -> None:
    st = geometry.renewal_statistics(args.s, args.samples, args.seed, args.threads)
    hold = geometry.hold_statistics(args.samples, args.seed, args.threads)
    stats = {
        "s": st.s,
        "samples": st.samples,
        "seed": args.seed,
        "mean_j": st.mean_j,
        "mean_l": st.mean_l,
        "mean_overshoot": st.mean_overshoot,
        "p_overshoot_gt_20": st.p_overshoot_gt_20,
        "hold_mean_j": hold.mean_j,
        "hold_mean_l": hold.mean_l,
        "hold_p_1_3": hold.p_first_is_3,
    }
    out.main(json_bytes(stats))


def cmd_qest(args, out: Outputs) -> None:
    ctx = _context(args)
    est, se = geometry.estimate_Q(ctx, args.j, args.l, args.samples, args.seed, args.threads)
    out.main(json_bytes({"estimate": est, "stderr": se, "samples": args.samples, "seed": args.seed}))


def cmd_whitebound(args, out: Outputs) -> None:
    ctx = _context(args)
    est, se = geometry.white_hit_bound(ctx, args.samples, args.seed, args.threads)
    out.main(json_bytes({"estimate": est, "stderr": se, "samples": args.samples, "seed": args.seed}))


def cmd_selftest(args, out: Outputs) -> None:
    results = run_selftest(corrupt=args.inject_corruption)
    lines = [f"{'PASS' if r.ok else 'FAIL'} {r.name}" + (f": {r.detail}" if r.detail else "") for r in results]
    out.main(("\n".join(lines) + "\n").encode("utf-8"))
    failed = [r.name for r in results if not r.ok]
    if failed:
        raise InvariantViolation("selftest failed: " + ", ".join(failed))


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=u64, default=0, help="unsigned 64-bit seed (decimal)")
    common.add_argument("--threads", type=positive_int, default=1, help="worker cap; results do not depend on it")
    common.add_argument("--out", default=None, help="output file (default: stdout)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--budget-mb", type=float, default=dists.DEFAULT_BUDGET_MB, help="memory budget for float tables")

    parser = argparse.ArgumentParser(prog="syracuse-lab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_text):
        sp = sub.add_parser(name, parents=[common], help=help_text)
        sp.set_defaults(func=func)
        return sp

    sp = add("orbit", cmd_orbit, "print an orbit")
    sp.add_argument("--n-start", type=positive_int, required=True)
    sp.add_argument("--steps", type=int, default=10)
    sp.add_argument("--collatz", action="store_true", help="iterate Col instead of Syr")

    for name, func, help_text in (
        ("dist", cmd_dist, "3-adic Syracuse distribution"),
        ("project", cmd_project, "project a distribution to a lower level"),
        ("osc", cmd_osc, "oscillation of a distribution"),
    ):
        sp = add(name, func, help_text)
        sp.add_argument("--n", type=int, required=True)
        sp.add_argument("--float", action="store_true", help="use the double-precision path")
        if name == "project":
            sp.add_argument("--k", type=int, required=True)
        if name == "osc":
            sp.add_argument("--m", type=int, required=True)

    sp = add("charfn", cmd_charfn, "character sums on the float path")
    sp.add_argument("--levels", type=int_list, required=True, help="comma-separated levels")
    sp.add_argument("--xi", type=int_list, default=None, help="comma-separated frequencies")
    sp.add_argument("--extra", type=int, default=0, help="random extra frequencies per level")

    sp = add("charosc", cmd_charosc, "exhaustive char-vs-osc check")
    sp.add_argument("--n-max", type=int, default=6)

    sp = add("valuation-tv", cmd_valuation_tv, "TV between valuation law and Geom(2)^n")
    sp.add_argument("--n", type=int_list, required=True)
    sp.add_argument("--m", type=int_list, required=True)

    sp = add("firstpass", cmd_firstpass, "first-passage experiment")
    sp.add_argument("--x", type=float, required=True)
    sp.add_argument("--alpha", type=float, default=1.25)
    sp.add_argument("--samples", type=positive_int, default=10 ** 5)
    sp.add_argument("--cap", type=positive_int, default=None)
    sp.add_argument("--emit-locations", default=None, help="CSV of per-sample passages")

    for name, func, help_text in (
        ("triangles", cmd_triangles, "black-set triangle decomposition"),
        ("gridmap", cmd_gridmap, "plot-ready colour map of a window"),
    ):
        sp = add(name, func, help_text)
        _window_args(sp)
        sp.add_argument("--jmin", type=int, required=True)
        sp.add_argument("--jmax", type=int, required=True)
        sp.add_argument("--lmin", type=int, required=True)
        sp.add_argument("--lmax", type=int, required=True)

    sp = add("renewal", cmd_renewal, "renewal first-passage statistics")
    sp.add_argument("--s", type=int, default=400)
    sp.add_argument("--samples", type=positive_int, default=10 ** 5)

    sp = add("qest", cmd_qest, "Monte Carlo estimate of Q(j, l)")
    _window_args(sp)
    sp.add_argument("--j", type=int, required=True)
    sp.add_argument("--l", type=int, required=True)
    sp.add_argument("--samples", type=positive_int, default=10 ** 5)

    sp = add("whitebound", cmd_whitebound, "white-hit bound estimate")
    _window_args(sp)
    sp.add_argument("--samples", type=positive_int, default=10 ** 5)

    sp = add("selftest", cmd_selftest, "run the exact consistency checks")
    sp.add_argument("--inject-corruption", action="store_true", help=argparse.SUPPRESS)
    return parser


def manifest(args, digests: dict) -> dict:
    params = {}
    for key, value in sorted(vars(args).items()):
        if key in ("func", "command"):
            continue
        params[key] = str(value) if isinstance(value, Fraction) else value
    return {
        "schema_version": SCHEMA_VERSION,
        "subcommand": args.command,
        "params": params,
        "seed": args.seed,
        "version": __version__,
        "outputs": digests,
    }


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    out = Outputs(args.out)
    try:
        args.func(args, out)
    except BudgetError as exc:
        print(f"{parser.prog}: budget error: {exc}", file=sys.stderr)
        return 3
    except InvariantViolation as exc:
        print(f"{parser.prog}: invariant violation: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        parser.print_usage(sys.stderr)
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return 2
    stream = sys.stdout if args.out else sys.stderr
    stream.write(json.dumps(manifest(args, out.digests), sort_keys=True) + "\n")
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
