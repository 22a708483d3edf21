"""Command-line interface.

Exit codes: 0 ok, 2 dimension or range error, 3 degenerate readout,
4 parse error, 5 non-Hermitian input, 64 usage error.
"""

import argparse
import io
import json
import math
import sys

from . import echo, matcore, moments, qubit, sampler
from .errors import (
    DegenerateReadout,
    DimensionMismatch,
    GridTooSmall,
    InvalidAxis,
    NotHermitian,
    NotNormalized,
    NotUnitary,
    OutOfRange,
    ParseError,
)

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_RANGE = 2
EXIT_DEGENERATE = 3
EXIT_PARSE = 4
EXIT_NOT_HERMITIAN = 5
EXIT_USAGE = 64

_EXIT_CODES = (
    (NotHermitian, EXIT_NOT_HERMITIAN),
    (ParseError, EXIT_PARSE),
    (DegenerateReadout, EXIT_DEGENERATE),
    ((DimensionMismatch, OutOfRange, InvalidAxis, GridTooSmall, NotUnitary, NotNormalized), EXIT_RANGE),
)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _fmt(x):
    return format(float(x), ".17g")


def _read(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from exc


def _load_unitary(path):
    return matcore.check_unitary(matcore.matrix_from_json(_read(path)))


def _load_hermitian(path):
    return matcore.check_hermitian(matcore.matrix_from_json(_read(path)))


def _load_ensemble(path, default_n):
    try:
        obj = json.loads(_read(path))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    if not isinstance(obj, dict) or obj.get("kind") not in ("haar", "user"):
        raise ParseError(f'{path}: "kind" must be "haar" or "user"')
    if obj["kind"] == "haar":
        n = obj.get("n", default_n)
        if not isinstance(n, int):
            raise ParseError(f'{path}: "n" must be an integer')
        return sampler.EnsembleSpec.haar(n)
    states = obj.get("states")
    if not isinstance(states, list) or not states:
        raise ParseError(f'{path}: a user ensemble needs a nonempty "states" list')
    return sampler.EnsembleSpec.user([matcore.state_from_json(json.dumps(s)) for s in states])


def _emit_json(obj, out):
    text = json.dumps(obj, indent=2, allow_nan=False) + "\n"
    _emit_text(text, out)


def _emit_text(text, out):
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _csv(header, rows):
    buf = io.StringIO()
    buf.write(header + "\n")
    for row in rows:
        buf.write(",".join(_fmt(v) for v in row) + "\n")
    return buf.getvalue()


def _seed(value):
    seed = int(value)
    if not 0 <= seed < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return seed


def _positive_int(value):
    n = int(value)
    if n < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return n


def _check_samples(n):
    if n < sampler.MIN_SAMPLES:
        raise UsageError(f"-n must be at least {sampler.MIN_SAMPLES}")


def _header(extra=None):
    out = {"schema_version": SCHEMA_VERSION}
    out.update(extra or {})
    return out


def run_exact(args):
    u1, u2 = _load_unitary(args.u1), _load_unitary(args.u2)
    closed = moments.exact_stats(u1, u2)
    perm = moments.exact_stats_permsum(u1, u2)
    return _header({"closed_form": closed.to_dict(), "perm_sum": perm.to_dict()})


def run_sample(args):
    u1, u2 = _load_unitary(args.u1), _load_unitary(args.u2)
    _check_samples(args.n)
    ens = _load_ensemble(args.ensemble, args.n) if args.ensemble else sampler.EnsembleSpec.haar(args.n)
    _check_samples(ens.n_samples)
    rng = sampler.RngStream(args.seed)
    rep = sampler.mc_stats(u1, u2, ens, rng, args.chunk_size, args.threads)
    out = _header({"seed": args.seed, "ensemble": ens.kind.value})
    out.update(rep.to_dict())
    out["stderr_mean1"] = rep.stderr_mean1
    out["stderr_mean2"] = rep.stderr_mean2
    return out


def run_qubit(args):
    delta = args.delta
    if not 0.0 <= delta <= math.pi:
        raise OutOfRange("delta must lie in [0, pi]")
    n1, n2 = qubit.axes_at_angle(delta)
    c1 = qubit.RamseyControl(args.theta1, n1)
    c2 = qubit.RamseyControl(args.theta2, n2)
    closed = float(qubit.closed_form_pcc(delta))
    rep = moments.exact_stats(qubit.rotation(c1), qubit.rotation(c2))
    return _header({
        "theta1": c1.theta, "theta2": c2.theta, "delta": delta,
        "pcc_closed_form": closed, "pcc_exact": rep.pcc,
        "agree": abs(closed - rep.pcc) <= 1e-10,
        "exact": rep.to_dict(),
    })


def run_sweep(args):
    return _csv("delta,pcc", qubit.pcc_sweep(args.points))


def _parse_axis(text):
    try:
        parts = [float(v) for v in text.split(",")]
    except ValueError as exc:
        raise UsageError(f"--axis expects x,y,z, got {text!r}") from exc
    if len(parts) != 3:
        raise UsageError(f"--axis expects three components, got {text!r}")
    return qubit.normalize_axis(parts)


def _parse_grid(text):
    try:
        p, a = (int(v) for v in text.lower().split("x"))
    except ValueError as exc:
        raise UsageError(f"--grid expects PxA, got {text!r}") from exc
    return p, a


def run_fringe(args):
    c = qubit.RamseyControl(args.theta, _parse_axis(args.axis))
    return _csv("polar,azimuth,x,y,z,fidelity", qubit.fringe_grid(c, *_parse_grid(args.grid)))


def _parse_times(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise UsageError(f"--times expects a comma-separated list, got {text!r}") from exc


def run_echo(args):
    h1, h2 = _load_hermitian(args.h1), _load_hermitian(args.h2)
    _check_samples(args.n)
    cfg = echo.EchoConfig(h1, h2, _parse_times(args.times))
    ens = sampler.EnsembleSpec.haar(args.n)
    rng = sampler.RngStream(args.seed)
    report = echo.short_time_pcc_gap(cfg, ens, rng.substream(1), exact=not args.mc,
                                     chunk_size=args.chunk_size, threads=args.threads)
    fit = echo.affine_rigidity_fit(h1, h2, ens, rng.substream(2), chunk_size=args.chunk_size)
    out = _header({"seed": args.seed, "route": "monte_carlo" if args.mc else "exact"})
    out.update(report.to_dict())
    out["rigidity"] = {"slope": fit.slope, "intercept": fit.intercept,
                       "residual_rms": fit.residual_rms,
                       "negative_slope_feasible": fit.negative_slope_feasible}
    return out


def run_contrast(args):
    u1, u2 = _load_unitary(args.u1), _load_unitary(args.u2)
    rep = moments.optimal_contrast(moments.exact_stats(u1, u2), n_grid=args.grid)
    out = _header()
    out.update(rep.to_dict())
    return out


def run_probe(args):
    u1, u2 = _load_unitary(args.u1), _load_unitary(args.u2)
    _check_samples(args.n)
    pcc = moments.exact_stats(u1, u2).pcc
    rng = sampler.RngStream(args.seed)
    overlap = sampler.min_overlap_probe(u1, u2, args.n, rng.substream(1))
    violation = sampler.complement_violation(u1, u2, args.n, rng.substream(2))
    return _header({
        "seed": args.seed,
        "max_overlap": {"value": overlap.max_overlap, "min_sampled": overlap.min_sampled,
                        "pass": overlap.max_overlap >= 1 - 1e-9},
        "complement_violation": {"value": violation, "pass": violation > 1e-3},
        "pcc_min_bound_check": {"pcc": pcc, "pass": pcc > -1 + 1e-9},
    })


def build_parser():
    parser = _Parser(prog="sfcorr", description="Self-fidelity correlation statistics of unitary pairs.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, seeded=False):
        p.add_argument("--out", help="write the report here instead of stdout")
        p.add_argument("--threads", type=_positive_int, default=1,
                       help="worker threads; results do not depend on it")
        if seeded:
            p.add_argument("-n", type=int, default=100_000, help="number of sampled states (>= 100)")
            p.add_argument("--seed", type=_seed, default=0, help="64-bit RNG seed")
            p.add_argument("--chunk-size", type=_positive_int, default=sampler.DEFAULT_CHUNK,
                           help="samples per RNG substream; part of the reproducibility key")

    def pair(p):
        p.add_argument("--u1", required=True, help="JSON matrix file for U1")
        p.add_argument("--u2", required=True, help="JSON matrix file for U2")

    p = sub.add_parser("exact", help="closed-form and permutation-sum statistics")
    pair(p)
    common(p)
    p.set_defaults(func=run_exact, kind="json")

    p = sub.add_parser("sample", help="Monte Carlo statistics over sampled states")
    pair(p)
    common(p, seeded=True)
    p.add_argument("--ensemble", help='ensemble JSON {"kind": "haar"|"user", "n": int, "states": [...]}')
    p.set_defaults(func=run_sample, kind="json")

    p = sub.add_parser("qubit", help="closed-form qubit correlation with an exact cross-check")
    p.add_argument("--theta1", type=float, default=math.pi, help="rotation angle of U1 in (0, 2pi)")
    p.add_argument("--theta2", type=float, default=math.pi, help="rotation angle of U2 in (0, 2pi)")
    p.add_argument("--delta", type=float, required=True, help="angle between the axes in [0, pi]")
    common(p)
    p.set_defaults(func=run_qubit, kind="json")

    p = sub.add_parser("sweep", help="CSV of correlation versus axis angle")
    p.add_argument("--points", type=int, default=181, help="number of delta values (>= 2)")
    common(p)
    p.set_defaults(func=run_sweep, kind="csv")

    p = sub.add_parser("fringe", help="CSV fringe on a polar x azimuth grid (poles and the 0/2pi seam included)")
    p.add_argument("--theta", type=float, required=True, help="rotation angle in (0, 2pi)")
    p.add_argument("--axis", default="0,0,1", help="rotation axis x,y,z (normalised)")
    p.add_argument("--grid", default="181x361", help="grid size PxA")
    common(p)
    p.set_defaults(func=run_fringe, kind="csv")

    p = sub.add_parser("echo", help="short-time Loschmidt-echo analysis")
    p.add_argument("--h1", required=True, help="JSON matrix file for H1")
    p.add_argument("--h2", required=True, help="JSON matrix file for H2")
    p.add_argument("--times", required=True, help="comma-separated positive times, ascending")
    p.add_argument("--mc", action="store_true", help="estimate correlations by sampling instead of exactly")
    common(p, seeded=True)
    p.set_defaults(func=run_echo, kind="json")

    p = sub.add_parser("contrast", help="optimal linear contrast and its variance floor")
    pair(p)
    p.add_argument("--grid", type=int, default=201, help="points on the kappa curve")
    common(p)
    p.set_defaults(func=run_contrast, kind="json")

    p = sub.add_parser("probe", help="no-inversion, no-complement and P > -1 witnesses")
    pair(p)
    common(p, seeded=True)
    p.set_defaults(func=run_probe, kind="json")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        result = args.func(args)
    except UsageError as exc:
        print(f"sfcorr: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:
        for types, code in _EXIT_CODES:
            if isinstance(exc, types):
                print(f"sfcorr: {type(exc).__name__}: {exc}", file=sys.stderr)
                return code
        raise
    if args.kind == "csv":
        _emit_text(result, args.out)
    else:
        _emit_json(result, args.out)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
