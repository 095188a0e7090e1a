"""Command line front end.

One verb per analysis: exact trajectory tables, level words, spread
identities, return matrices, the transfer-operator density, and the
experiment drivers with CSV/JSON/plot emission.  `verify` runs the
acceptance checks and is the only verb whose exit status encodes a result:
0 when every check passes, 1 otherwise.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
from fractions import Fraction

from .cf import (
    classify_cell,
    gap_trajectory,
    parse_theta_spec,
)
from .exact import exact_str
from .experiments import (
    EmitError,
    ExperimentConfig,
    IteratedLogFamily,
    emit,
    run_bounded_pq_check,
    run_growth_experiment,
    run_limsup_probe,
    run_trimmed_sums,
    tool_version,
)
from .measure import (
    THRESHOLD_FAMILIES,
    build_ulam,
    khinchin_experiment,
    stationary_density,
)
from .substitution import (
    A,
    ReturnMatrix,
    build_rule,
    expand_word,
    lengths_by_level,
    matrices_along,
    stats_by_level,
)
from . import verify as verify_mod

_CONFIG_FIELDS = {f.name for f in dataclasses.fields(ExperimentConfig)}


def _resolve_theta_spec(spec: str, den_bound: int | None) -> str:
    """Expand the CLI-only dec: form into an exact rat: spec."""
    if not spec.startswith("dec:"):
        return spec
    if den_bound is None:
        raise ValueError("dec: input needs --den-bound to fix the approximation")
    if den_bound < 2:
        raise ValueError("--den-bound must be at least 2")
    try:
        value = Fraction(spec[4:])
    except ValueError as exc:
        raise ValueError(f"cannot read decimal {spec[4:]!r}") from exc
    if not 0 < value < 1:
        raise ValueError("decimal theta must lie strictly between 0 and 1")
    value = value.limit_denominator(den_bound)
    return f"rat:{value.numerator}/{value.denominator}"


def _add_theta(parser: argparse.ArgumentParser, required: bool = True) -> None:
    parser.add_argument(
        "--theta",
        required=required,
        help="rotation number: rat:p/q, cf:[a1,a2,...], cfper:[pre][per], "
        "or dec:0.123 with --den-bound",
    )
    parser.add_argument(
        "--den-bound",
        type=int,
        default=None,
        help="largest denominator when converting a dec: input",
    )


def _add_config(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", default=None, help="JSON file of config fields")
    parser.add_argument("--depth", type=int, default=None)
    parser.add_argument("--orbit-length", type=int, default=None)
    parser.add_argument("--samples", type=int, default=None)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--k", type=int, default=None, help="threshold family depth")
    parser.add_argument(
        "--epsilon", type=float, default=None, help="threshold family exponent bump"
    )


def _add_emit(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--fmt", choices=("csv", "json", "plot"), default="csv")
    parser.add_argument("--out", default=None, help="output path (default: summary only)")
    parser.add_argument(
        "--plot-fields", default=None, help="X,Y field names for --fmt plot"
    )


def _build_config(args: argparse.Namespace) -> ExperimentConfig:
    merged = {}
    if getattr(args, "config", None):
        with open(args.config) as fh:
            loaded = json.load(fh)
        bad = set(loaded) - _CONFIG_FIELDS
        if bad:
            raise ValueError(f"unknown config fields: {sorted(bad)}")
        merged.update(loaded)
    for name in ("depth", "orbit_length", "samples", "seed", "k", "epsilon"):
        value = getattr(args, name, None)
        if value is not None:
            merged[name] = value
    theta = getattr(args, "theta", None)
    if theta is not None:
        merged["theta_spec"] = _resolve_theta_spec(theta, getattr(args, "den_bound", None))
    elif "theta_spec" in merged and merged["theta_spec"]:
        merged["theta_spec"] = _resolve_theta_spec(
            merged["theta_spec"], getattr(args, "den_bound", None)
        )
    return ExperimentConfig(**merged)


def _emit_or_summarize(args, records, meta, summary_lines) -> None:
    if args.out is not None:
        plot_fields = None
        if args.plot_fields is not None:
            parts = [p.strip() for p in args.plot_fields.split(",")]
            if len(parts) != 2:
                raise ValueError("--plot-fields wants exactly two names: X,Y")
            plot_fields = (parts[0], parts[1])
        path = emit(records, args.fmt, args.out, meta=meta, plot_fields=plot_fields)
        print(f"wrote {len(records)} records to {path}")
    for line in summary_lines:
        print(line)


def _parse_theta(args: argparse.Namespace):
    return parse_theta_spec(_resolve_theta_spec(args.theta, args.den_bound))


# ---------------------------------------------------------------------------
# verbs


def cmd_traj(args) -> int:
    theta = _parse_theta(args)
    traj = gap_trajectory(theta, args.depth)
    rows = []
    for n, step in enumerate(traj.steps):
        rows.append(
            {
                "n": n,
                "theta_n": float(step.value),
                "cell": str(classify_cell(step.cf)),
                "a1": step.a1,
                "e": step.e,
                "delta": exact_str(step.delta),
            }
        )
    if args.json:
        print(json.dumps({"theta_spec": args.theta, "levels": rows}, indent=2))
        return 0
    print(f"{'n':>3} {'theta_n':>20} {'a1':>6} {'E':>3}  cell / delta")
    for r in rows:
        print(
            f"{r['n']:>3} {r['theta_n']:>20.15f} {r['a1']:>6} {r['e']:>3}"
            f"  {r['cell']}   delta = {r['delta']}"
        )
    return 0


def cmd_word(args) -> int:
    theta = _parse_theta(args)
    traj = gap_trajectory(theta, args.level)
    rules = [build_rule(s.cf) for s in traj.steps[: args.level]]
    word = expand_word(rules, args.letter, max_len=args.max_len)
    print(word)
    return 0


def cmd_rho(args) -> int:
    theta = _parse_theta(args)
    traj = gap_trajectory(theta, args.level)
    rules = [build_rule(s.cf) for s in traj.steps[: args.level]]
    levels = stats_by_level(rules)
    lens = lengths_by_level(rules)
    rows = []
    half = 0
    for n in range(1, args.level + 1):
        half += traj.steps[n - 1].e // 2
        stats = levels[n][A]
        rows.append(
            {
                "n": n,
                "rho": stats.rho,
                "halfsum": half,
                "xi": stats.rho - half,
                "length": lens[n][0],
            }
        )
    if args.json:
        print(json.dumps({"theta_spec": args.theta, "levels": rows}, indent=2))
        return 0
    print(f"{'n':>3} {'rho':>8} {'halfsum':>8} {'xi':>4} {'length':>12}")
    for r in rows:
        print(
            f"{r['n']:>3} {r['rho']:>8} {r['halfsum']:>8} {r['xi']:>4}"
            f" {r['length']:>12}"
        )
    return 0


def cmd_matrix(args) -> int:
    theta = _parse_theta(args)
    mats = matrices_along(theta, args.level)
    prod = ReturnMatrix.identity()
    rows = []
    for n, m in enumerate(mats, start=1):
        prod = m @ prod
        (a, b), (c, d) = prod.rows()
        rows.append(
            {
                "n": n,
                "step": list(map(list, m.rows())),
                "product": [[a, b], [c, d]],
                "lengths": list(prod.apply((1, 1))),
                "top_eigenvalue": prod.top_eigenvalue(),
            }
        )
    if args.json:
        print(json.dumps({"theta_spec": args.theta, "levels": rows}, indent=2))
        return 0
    for r in rows:
        (a, b), (c, d) = r["product"]
        print(
            f"n={r['n']:>2}  step={r['step']}  product=[[{a},{b}],[{c},{d}]]"
            f"  lengths={tuple(r['lengths'])}  top~{r['top_eigenvalue']:.4f}"
        )
    return 0


def cmd_ulam(args) -> int:
    op = build_ulam(args.bins)
    density = stationary_density(op, tol=args.tol)
    summary = {
        "bins": density.bins,
        "residual": density.residual,
        "row_defect": op.row_defect,
        "min_density": density.min_density,
        "max_density": density.max_density,
        "mass_upper_half": density.mass_upper_half,
        "version": tool_version(),
    }
    if args.out is not None:
        with open(args.out, "w") as fh:
            json.dump(density.to_json(), fh)
        print(f"wrote density to {args.out}")
    if args.json:
        print(json.dumps(summary, indent=2))
    else:
        print(
            f"bins {summary['bins']}, residual {summary['residual']:.3e}, "
            f"density in [{summary['min_density']:.4f}, {summary['max_density']:.4f}], "
            f"upper-half mass {summary['mass_upper_half']:.6f}"
        )
    return 0


def cmd_khinchin(args) -> int:
    cfg = _build_config(args)
    window = None
    if args.window is not None:
        lo, _, hi = args.window.partition(",")
        try:
            window = (int(lo), int(hi))
        except ValueError:
            raise ValueError(f"--window wants lo,hi integers, got {args.window!r}")
    result = khinchin_experiment(
        args.family,
        samples=cfg.samples,
        n_max=args.n_max,
        rng_seed=cfg.seed,
        window=window,
    )
    meta = cfg.to_meta()
    meta.update(
        family=result.family,
        n_max=result.n_max,
        window_lo=result.window[0],
        window_hi=result.window[1],
        median_count=result.median_count,
        resamples=result.resamples,
    )
    _emit_or_summarize(
        args,
        result.records,
        meta,
        [
            f"family {result.family}: {result.samples} samples over "
            f"window {result.window}",
            f"median exceedances {result.median_count:g}, total "
            f"{result.total_count}, first-half total {result.total_half_count}",
        ],
    )
    return 0


def cmd_growth(args) -> int:
    cfg = _build_config(args)
    family = IteratedLogFamily(cfg.k, cfg.epsilon)
    records = run_growth_experiment(cfg, family)
    meta = cfg.to_meta()
    last = records[-1]
    exceed = sum(
        1 for r in records if not math.isnan(r.f_of_n) and r.rho_omega >= r.f_of_n
    )
    _emit_or_summarize(
        args,
        records,
        meta,
        [
            f"depth {last.n}: rho {last.rho_omega}, halfsum {last.halfsum}, "
            f"f(n) {last.f_of_n:.4f}, F(n) {last.F_of_n:.4f}",
            f"{exceed} of {len(records)} levels at or above the threshold",
        ],
    )
    return 0


def cmd_trimmed(args) -> int:
    cfg = _build_config(args)
    try:
        checkpoints = tuple(int(c) for c in args.checkpoints.split(","))
    except ValueError:
        raise ValueError(
            f"--checkpoints wants comma-separated integers, got {args.checkpoints!r}"
        )
    records, summary = run_trimmed_sums(cfg, checkpoints=checkpoints)
    meta = cfg.to_meta()
    lines = [
        f"n={n}: median trimmed ratio {v:.4f}"
        for n, v in sorted(summary["median_ratio"].items())
    ]
    _emit_or_summarize(args, records, meta, lines)
    return 0


def cmd_boundedpq(args) -> int:
    cfg = _build_config(args)
    x0 = Fraction(args.x0)
    records, summary = run_bounded_pq_check(cfg, x0=x0)
    meta = cfg.to_meta()
    meta["theta_spec"] = summary["theta_spec"]
    lo, hi = summary["ratio_band"]
    _emit_or_summarize(
        args,
        records,
        meta,
        [
            f"theta {summary['theta_spec']}, x0 {x0}",
            f"rho/log N in [{lo:.4f}, {hi:.4f}] "
            f"(band ratio {hi / lo:.3f}), monotone={summary['monotone']}",
        ],
    )
    return 0


def cmd_limsup(args) -> int:
    cfg = _build_config(args)
    records, summary = run_limsup_probe(cfg)
    meta = cfg.to_meta()
    meta["fraction_still_climbing"] = summary["fraction_still_climbing"]
    _emit_or_summarize(
        args,
        records,
        meta,
        [
            f"{len(records)} samples at depth {cfg.depth}: "
            f"{summary['fraction_still_climbing']:.2f} still climbing in the "
            "final third (records this rare are expected at desk scale)",
        ],
    )
    return 0


def cmd_verify(args) -> int:
    numbers = None
    if args.only is not None:
        numbers = [int(tok) for tok in args.only.split(",")]
    verdicts = verify_mod.run_all(numbers)
    if args.json:
        print(json.dumps([dataclasses.asdict(v) for v in verdicts], indent=2))
    else:
        for v in verdicts:
            mark = "PASS" if v.passed else "FAIL"
            print(f"{mark} {v.criterion:>2} {v.name:<20} {v.seconds:7.2f}s  {v.details}")
    return 0 if verify_mod.all_passed(verdicts) else 1


# ---------------------------------------------------------------------------
# wiring


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gaprenorm",
        description="Renormalization toolkit for half-discrepancy sums of "
        "irrational rotations.",
    )
    parser.add_argument("--version", action="version", version=tool_version())
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("traj", help="exact trajectory table of the gap dynamics")
    _add_theta(p)
    p.add_argument("--depth", type=int, default=12)
    p.add_argument("--json", action="store_true")
    p.set_defaults(fn=cmd_traj)

    p = sub.add_parser("word", help="expand the level word")
    _add_theta(p)
    p.add_argument("--level", type=int, required=True)
    p.add_argument("--letter", choices=("A", "B", "C"), default=A)
    p.add_argument("--max-len", type=int, default=100_000)
    p.set_defaults(fn=cmd_word)

    p = sub.add_parser("rho", help="level spreads against their half-sums")
    _add_theta(p)
    p.add_argument("--level", type=int, default=20)
    p.add_argument("--json", action="store_true")
    p.set_defaults(fn=cmd_rho)

    p = sub.add_parser("matrix", help="return matrices and their running product")
    _add_theta(p)
    p.add_argument("--level", type=int, default=10)
    p.add_argument("--json", action="store_true")
    p.set_defaults(fn=cmd_matrix)

    p = sub.add_parser("ulam", help="stationary density of the transfer operator")
    p.add_argument("--bins", type=int, default=512)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--out", default=None, help="write the density as JSON")
    p.add_argument("--json", action="store_true")
    p.set_defaults(fn=cmd_ulam)

    p = sub.add_parser("khinchin", help="window exceedances of the leading quotient")
    p.add_argument("--family", choices=sorted(THRESHOLD_FAMILIES), default="linear")
    p.add_argument("--n-max", type=int, default=5000)
    p.add_argument("--window", default=None, help="lo,hi window of orbit steps")
    _add_config(p)
    _add_emit(p)
    p.set_defaults(fn=cmd_khinchin)

    p = sub.add_parser("growth", help="per-level spread against a threshold family")
    _add_theta(p, required=False)
    _add_config(p)
    _add_emit(p)
    p.set_defaults(fn=cmd_growth)

    p = sub.add_parser("trimmed", help="half-sums with the largest term removed")
    _add_config(p)
    _add_emit(p)
    p.add_argument("--checkpoints", default="25,50,100,200")
    p.set_defaults(fn=cmd_trimmed)

    p = sub.add_parser("boundedpq", help="orbit spread over log N, bounded quotients")
    _add_theta(p, required=False)
    _add_config(p)
    _add_emit(p)
    p.add_argument("--x0", default="0", help="orbit base point, as p/q")
    p.set_defaults(fn=cmd_boundedpq)

    p = sub.add_parser("limsup", help="running max of the scaled spread per sample")
    _add_config(p)
    _add_emit(p)
    p.set_defaults(fn=cmd_limsup)

    p = sub.add_parser("verify", help="run the acceptance checks")
    p.add_argument("--only", default=None, help="comma-separated criteria numbers")
    p.add_argument("--json", action="store_true")
    p.set_defaults(fn=cmd_verify)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ValueError, ArithmeticError, EmitError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
