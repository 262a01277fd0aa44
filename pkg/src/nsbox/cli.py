"""``nsbox`` command line interface.

Exit codes: 0 success (or a locality verdict), 1 I/O or parse error,
2 validation or constraint failure, 3 locality undecided at tolerance.
"""
from __future__ import annotations

import argparse
import sys
from importlib.metadata import PackageNotFoundError, version

from . import gallery
from .box import (
    MarginalTable,
    QuasiBox,
    Scenario,
    SignallingError,
    StructuralError,
    canonical_marginals,
    from_marginals,
    is_nonsignalling,
    validate,
)
from .classical import (
    ClassicalModel,
    build_negative_measurements,
    build_negative_state,
    compress,
    evaluate,
    negativity,
    sample_signed,
)
from .io import ParseError, dumps, format_rational, loads
from .locality import DEFAULT_CAP, DEFAULT_TOL, UndecidedError, VertexCapError, chsh_functional, is_local
from .quantum import QuantumModel, evaluate_trace, lift, verify

EXIT_OK, EXIT_IO, EXIT_INVALID, EXIT_UNDECIDED = 0, 1, 2, 3

BUILDERS = {"neg-meas": build_negative_measurements, "neg-state": build_negative_state}


class CommandError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


def _read(path):
    try:
        if path in (None, "-"):
            return loads(sys.stdin.read())
        with open(path) as fh:
            return loads(fh.read())
    except OSError as exc:
        raise CommandError(f"cannot read {path}: {exc.strerror}", EXIT_IO) from exc


def _read_as(path, *types):
    obj = _read(path)
    if not isinstance(obj, types):
        names = " or ".join(t.__name__ for t in types)
        raise CommandError(f"expected a {names} file, got {type(obj).__name__}", EXIT_IO)
    return obj


def _write(args, obj):
    text = dumps(obj)
    if args.output in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(args.output, "w") as fh:
            fh.write(text)


def _report(args, pairs):
    """Print ``(key, value)`` pairs as ``key: value`` or ``key=value`` lines."""
    sep = "=" if args.format == "machine" else ": "
    for key, value in pairs:
        print(f"{key}{sep}{value}")


def _tuple(t):
    return ",".join(str(i) for i in t)


def _strategy(f):
    return ";".join(_tuple(p) for p in f)


def _require_box(q: QuasiBox) -> QuasiBox:
    report = validate(q)
    if not report.normalized:
        x, total = report.normalization_failures[0]
        raise CommandError(f"box is not normalised at x={_tuple(x)} (sum {total})", EXIT_INVALID)
    check = is_nonsignalling(q)
    if not check:
        raise CommandError(str(SignallingError(check.witness)), EXIT_INVALID)
    return q


def cmd_validate(args):
    q = _read_as(args.file, QuasiBox)
    report = validate(q, require_nonnegative=args.nonnegative)
    ns = is_nonsignalling(q) if report.normalized else None
    pairs = [("normalized", str(report.normalized).lower())]
    for x, total in report.normalization_failures:
        pairs.append((f"sum[{_tuple(x)}]", format_rational(total)))
    if args.nonnegative:
        pairs.append(("nonnegative", str(not report.negatives).lower()))
        for a, x, v in report.negatives:
            pairs.append((f"negative[{_tuple(a)}|{_tuple(x)}]", format_rational(v)))
    if ns is not None:
        pairs.append(("nonsignalling", str(bool(ns)).lower()))
        if not ns:
            pairs.append(("witness", str(ns.witness)))
    _report(args, pairs)
    return EXIT_OK if report.ok and ns else EXIT_INVALID


def cmd_marginals(args):
    q = _require_box(_read_as(args.file, QuasiBox))
    _write(args, canonical_marginals(q))
    return EXIT_OK


def cmd_from_marginals(args):
    _write(args, from_marginals(_read_as(args.file, MarginalTable)))
    return EXIT_OK


def _model_from(obj, kind, compressed):
    if isinstance(obj, ClassicalModel):
        m = obj
    else:
        m = BUILDERS[kind](_require_box(obj))
    return compress(m) if compressed else m


def cmd_model(args):
    _write(args, _model_from(_read_as(args.file, QuasiBox), args.kind, args.compressed))
    return EXIT_OK


def cmd_eval(args):
    m = _read_as(args.file, ClassicalModel, QuantumModel)
    _write(args, evaluate(m) if isinstance(m, ClassicalModel) else evaluate_trace(m))
    return EXIT_OK


def cmd_compress(args):
    _write(args, compress(_read_as(args.file, ClassicalModel)))
    return EXIT_OK


def cmd_quantum(args):
    obj = _read_as(args.file, QuasiBox, ClassicalModel)
    _write(args, lift(_model_from(obj, args.kind, args.compressed)))
    return EXIT_OK


def cmd_quantum_verify(args):
    qm = _read_as(args.file, QuantumModel)
    r = verify(qm)
    _report(
        args,
        [
            ("kind", qm.kind.value),
            ("dims", "x".join(str(d) for d in qm.dims)),
            ("completeness", str(r.complete).lower()),
            ("trace", format_rational(r.trace)),
            ("commuting", str(r.commuting).lower()),
            ("state_positive", str(r.state_positive).lower()),
            ("measurements_positive", str(r.measurements_positive).lower()),
            ("measurements_deterministic", str(r.measurements_deterministic).lower()),
            ("negative_state_entries", len(r.negative_state_entries)),
            ("negative_measurement_entries", len(r.negative_measurement_entries)),
            ("ok", str(r.ok).lower()),
        ],
    )
    return EXIT_OK if r.ok else EXIT_INVALID


def cmd_local(args):
    q = _require_box(_read_as(args.file, QuasiBox))
    functional = chsh_functional() if args.functional == "chsh" else None
    if functional is not None and q.scenario != gallery.CHSH_SCENARIO:
        raise CommandError("the CHSH functional needs the 2,2/2,2 scenario", EXIT_INVALID)
    cert = is_local(q, tol=args.tol, cap=args.cap, functional=functional)
    pairs = [("verdict", cert.verdict)]
    if cert.is_local:
        for strategy, w in cert.weights.items():
            pairs.append((f"weight[{_strategy(strategy)}]", format_rational(w)))
    else:
        pairs += [("box_value", format_rational(cert.box_value)), ("local_bound", format_rational(cert.local_bound))]
        for a, x, _ in q.items():
            c = cert.bell[tuple(i - 1 for i in (*a, *x))]
            if c != 0:
                pairs.append((f"bell[{_tuple(a)}|{_tuple(x)}]", format_rational(c)))
    _report(args, pairs)
    return EXIT_OK


def cmd_negativity(args):
    m = _read_as(args.file, ClassicalModel)
    neg = negativity(m)
    _report(args, [("state", format_rational(neg.state)), ("response", format_rational(neg.response))])
    return EXIT_OK


def cmd_sample(args):
    m = _read_as(args.file, ClassicalModel)
    try:
        x = tuple(int(t) for t in args.input.split(","))
    except ValueError as exc:
        raise CommandError(f"bad --input {args.input!r}", EXIT_INVALID) from exc
    est = sample_signed(m, x, args.shots, args.seed)
    pairs = [("input", _tuple(x)), ("shots", est.shots)]
    for a, mu, se in zip(est.outcomes, est.mean, est.stderr):
        pairs += [(f"p[{_tuple(a)}]", repr(float(mu))), (f"se[{_tuple(a)}]", repr(float(se)))]
    _report(args, pairs)
    return EXIT_OK


def _parse_strategy(text):
    # "1,2;2,1": per party, the outcome for each input
    try:
        return tuple(tuple(int(v) for v in part.split(",")) for part in text.split(";"))
    except ValueError as exc:
        raise CommandError(f"bad --strategy {text!r}", EXIT_INVALID) from exc


def cmd_gallery(args):
    s = Scenario.parse(args.scenario)
    name = args.name
    if name in ("pr", "tsirelson"):
        if s != gallery.CHSH_SCENARIO:
            raise CommandError(f"{name} is only defined for 2,2/2,2", EXIT_INVALID)
        box = gallery.pr_box() if name == "pr" else gallery.tsirelson_box()
    elif name == "uniform":
        box = gallery.uniform_box(s)
    elif name == "deterministic":
        strategy = _parse_strategy(args.strategy) if args.strategy else tuple((1,) * X for X in s.inputs)
        box = gallery.deterministic_box(s, strategy)
    elif name == "random-ns":
        box = gallery.random_nonsignalling_box(s, args.seed)
    else:
        box = gallery.random_local_box(s, args.seed)
    _write(args, box)
    return EXIT_OK


def _package_version():
    try:
        return version("nsbox")
    except PackageNotFoundError:
        return "unknown"


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=["text", "machine"], default="text", help="report style")
    common.add_argument("-o", "--output", help="output path (default: stdout)")

    parser = argparse.ArgumentParser(prog="nsbox", description="Exact toolkit for non-signalling boxes.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {_package_version()}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help, file_help="input file (default: stdin)"):
        p = sub.add_parser(name, parents=[common], help=help, description=help)
        if file_help:
            p.add_argument("file", nargs="?", help=file_help)
        p.set_defaults(func=func)
        return p

    p = add("validate", cmd_validate, "check normalisation, sign and non-signalling of a box")
    p.add_argument("--nonnegative", action="store_true", help="also report negative entries")
    add("marginals", cmd_marginals, "write the canonical marginal table of a box")
    add("from-marginals", cmd_from_marginals, "rebuild a box from a canonical marginal table")
    for name, func, help in [
        ("model", cmd_model, "build a quasi-classical hidden-variable model of a box"),
        ("quantum", cmd_quantum, "build a commuting diagonal operator model of a box"),
    ]:
        p = add(name, func, help)
        p.add_argument("--kind", choices=sorted(BUILDERS), default="neg-state")
        p.add_argument("--compressed", action="store_true", help="merge labels that always answer the last outcome")
    add("eval", cmd_eval, "evaluate a classical or quantum model back to a box")
    add("compress", cmd_compress, "compress a classical model")
    add("quantum-verify", cmd_quantum_verify, "check completeness, trace, positivity and commutation")
    p = add("local", cmd_local, "decide locality with an exactly verified certificate")
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)
    p.add_argument("--cap", type=int, default=DEFAULT_CAP, help="maximum number of deterministic strategies")
    p.add_argument("--functional", choices=["lp", "chsh"], default="lp", help="non-local witness to try first")
    add("negativity", cmd_negativity, "report the negativity of a classical model")
    p = add("sample", cmd_sample, "estimate a model's outcome distribution by signed sampling")
    p.add_argument("--input", required=True, help="input tuple, e.g. 1,2")
    p.add_argument("--shots", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p = add("gallery", cmd_gallery, "write a reference or random box", file_help=None)
    p.add_argument("name", choices=["pr", "tsirelson", "uniform", "deterministic", "random-ns", "random-local"])
    p.add_argument("--scenario", default="2,2/2,2", help="outputs/inputs, e.g. 2,2,2/2,2,2")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--strategy", help="deterministic outcomes per party, e.g. '1,2;2,1'")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CommandError as exc:
        print(f"nsbox: {exc}", file=sys.stderr)
        return exc.code
    except (ParseError, StructuralError) as exc:
        print(f"nsbox: {exc}", file=sys.stderr)
        return EXIT_IO
    except UndecidedError as exc:
        print(f"nsbox: {exc}", file=sys.stderr)
        return EXIT_UNDECIDED
    except (SignallingError, VertexCapError, ValueError) as exc:
        print(f"nsbox: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"nsbox: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
