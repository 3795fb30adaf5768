"""Command-line front end.

JSON reports go to stdout (or ``--out``); a short human summary goes to
stderr.  Exit codes: 0 success, 2 bad input, 3 capacity exceeded, 4 solver
did not converge, 5 internal invariant violated.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import coulomb, radical, toydft
from .errors import HKError, InvariantViolation, ParseError, StructuralError
from .poly import SparsePolynomial, parse_rational


def _read_json(path: str):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON: {exc}") from None


def _emit(args, document) -> None:
    text = json.dumps(document, separators=(",", ":")) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _say(message: str) -> None:
    print(message, file=sys.stderr)


def cmd_eliminate(args) -> int:
    family = radical.eliminate_radicals(args.n, n_max=args.n_max)
    report = radical.check_structure(family)
    _say(f"n={family.n}: {len(family.members)} members, term counts {family.term_counts()}")
    if not report.ok:
        raise InvariantViolation("; ".join(report.violations))
    _emit(args, family.to_json())
    return 0


def cmd_oracle(args) -> int:
    family = radical.sign_product_family(args.n, n_max=args.n_max)
    _say(f"n={family.n}: sign product, term counts {family.term_counts()}")
    _emit(args, family.to_json())
    return 0


def cmd_verify(args) -> int:
    family = radical.eliminate_radicals(args.n, n_max=args.n_max)
    structure = radical.check_structure(family)
    sweep = radical.verify_sweep(family, args.trials, args.seed, args.perturbation)
    document = {"structure": structure.to_json(), "identity": sweep.to_json()}
    if args.oracle:
        document["oracle_equal"] = family == radical.sign_product_family(args.n, n_max=args.n_max)
    _emit(args, document)
    _say(
        f"n={args.n}: residual zero in {sweep.vanishing}/{sweep.trials} trials, "
        f"nonzero off the constraint in {sweep.perturbed_nonzero}/{sweep.trials}"
    )
    if not structure.ok:
        raise InvariantViolation("; ".join(structure.violations))
    if not sweep.all_vanish or document.get("oracle_equal") is False:
        raise InvariantViolation("the relation failed to vanish or disagrees with the oracle")
    return 0


def _load_pair(args):
    v = coulomb.parse_potential(_read_json(args.a))
    v2 = coulomb.parse_potential(_read_json(args.b))
    return v, v2


def cmd_distinguish(args) -> int:
    v, v2 = _load_pair(args)
    verdict = coulomb.distinguish(v, v2, args.N, args.trials, args.seed, n_max=args.n_max)
    document = verdict.to_json()
    if args.consistency and not verdict.equal:
        check = coulomb.consistency_check(
            verdict.difference, args.N, args.consistency, args.seed, verdict.vanishing_polynomial
        )
        document["consistency"] = check.to_json()
        if check.exact_zeros != check.trials:
            raise InvariantViolation("certificate did not vanish at an engineered configuration")
    _emit(args, document)
    if verdict.equal:
        _say("potentials are identical")
    else:
        P = verdict.vanishing_polynomial
        _say(
            f"potentials differ: certificate with {len(P)} terms over {list(P.variable_names)}; "
            f"{verdict.sampling.zero_hits} zeros in {verdict.sampling.trials} samples at c=0"
        )
    return 0


def cmd_sample(args) -> int:
    document = _read_json(args.poly)
    if isinstance(document, dict) and "certificate" in document:
        if document["certificate"] is None:
            raise ParseError("verdict has no certificate (the potentials were equal)", "certificate")
        document = document["certificate"]
    P = SparsePolynomial.from_json(document)
    v, v2 = _load_pair(args)
    d = coulomb.potential_difference(v, v2)
    if "c" in P.variable_names:
        c = SparsePolynomial.constant(P.variable_names, parse_rational(args.c or "0", "--c"))
        P = P.substitute({"c": c}).project(coulomb.u_names(args.N, d.m))
    elif args.c is not None:
        raise StructuralError("--c given but the polynomial has no variable 'c'")
    report = coulomb.measure_zero_sample(P, d, args.N, args.trials, args.seed)
    _emit(args, report.to_json())
    _say(f"{report.zero_hits} exact zeros in {report.trials} samples (min |P| = {report.abs_min:.3e})")
    return 0


def cmd_toy_solve(args) -> int:
    config = toydft.parse_scan_config(_read_json(args.config))
    results = [toydft.solve(s, config.tol) for s in config.systems]
    first = config.systems[0]
    _emit(args, {
        "x": [float(x) for x in first.grid],
        "results": [r.to_json() for r in results],
    })
    for k, r in enumerate(results):
        _say(f"potential {k}: E0 = {r.E0:.12g}, residual {r.residual:.2e}, degenerate={r.degeneracy_flag}")
    return 0


def cmd_toy_scan(args) -> int:
    config = toydft.parse_scan_config(_read_json(args.config))
    report = toydft.hk_scan(config.systems, config.tol_density, config.tol, config.tol_shift)
    _emit(args, report.to_json())
    _say(
        f"{len(config.systems)} potentials in {len(set(report.classes))} constant-shift classes; "
        f"max within-class density distance {report.within_class_max:.3e}"
    )
    if not report.within_class_ok:
        raise InvariantViolation("densities differ inside a constant-shift class")
    return 0


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="write JSON here instead of stdout")
    common.add_argument("--n-max", type=int, default=radical.DEFAULT_N_MAX,
                        help="largest number of summands to eliminate (default %(default)s)")

    parser = argparse.ArgumentParser(prog="hkcert", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eliminate", parents=[common], help="build the relation family by induction")
    p.add_argument("--n", type=int, required=True)
    p.set_defaults(func=cmd_eliminate)

    p = sub.add_parser("oracle", parents=[common], help="build the family from the sign product")
    p.add_argument("--n", type=int, required=True)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("verify", parents=[common], help="check structure and exact vanishing")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--trials", type=_positive, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--perturbation", type=parse_rational, default="1/1",
                   help="offset added to delta for the off-constraint check")
    p.add_argument("--oracle", action="store_true", help="also compare with the sign product")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("distinguish", parents=[common], help="certify that two potentials differ")
    p.add_argument("--a", required=True, help="potential JSON file")
    p.add_argument("--b", required=True, help="potential JSON file")
    p.add_argument("--N", type=_positive, default=1, help="number of electrons")
    p.add_argument("--trials", type=_positive, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--consistency", type=int, default=0, metavar="T",
                   help="also run T engineered-c checks")
    p.set_defaults(func=cmd_distinguish)

    p = sub.add_parser("sample", parents=[common], help="count exact zeros of a certificate")
    p.add_argument("--poly", required=True, help="polynomial or verdict JSON")
    p.add_argument("--a", required=True, help="potential JSON the certificate was built from")
    p.add_argument("--b", required=True, help="second potential JSON")
    p.add_argument("--N", type=_positive, default=1)
    p.add_argument("--c", default=None, help="value for a symbolic c (default 0)")
    p.add_argument("--trials", type=_positive, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.set_defaults(func=cmd_sample)

    toy = sub.add_parser("toy", help="1D grid ground states")
    toy_sub = toy.add_subparsers(dest="toy_command", required=True)
    p = toy_sub.add_parser("solve", parents=[common])
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_toy_solve)
    p = toy_sub.add_parser("scan", parents=[common])
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_toy_scan)
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except HKError as exc:
        _say(f"error: {exc}")
        return exc.exit_code


def main() -> None:
    sys.exit(run())
