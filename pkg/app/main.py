"""
MHK Command Line
argparse front end over the library: every subcommand reads JSON (a path or
"-" for stdin), writes one JSON document to stdout or --out, and exits 0 on
success, 1 on a mathematical Fail (witness in the output) and 2 on input errors
"""
import argparse
import json
import logging
import os
import sys
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np
from pydantic import TypeAdapter, ValidationError

# Add project root to path
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from config.settings import settings
from app import algebra, blaschke, cara, interp, sampling, schur, spaces, symm
from app.acceptance import get_runner
from app.errors import InputFormatError, InvalidArgument, MhkError
from app.models import (
    CMatModel,
    HerglotzModel,
    InterpolationDataModel,
    RealizationModel,
    RunConfig,
    SeriesModel,
    Verdict,
    jsonable,
)
from app.mps import (
    MatrixPowerSeries,
    contour_eval,
    evaluate,
    radius_report,
    star_inverse,
    star_mul,
)
from app.numkit import fro

logger = logging.getLogger("mhk")

Handler = Callable[[argparse.Namespace, RunConfig], Tuple[Dict[str, Any], int]]


# ============== Input ==============

def _read_text(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise InputFormatError(f"cannot read {path}: {exc.strerror}", witness={"path": path}) from exc


def load(path: str, schema: Any) -> Any:
    """
    Parse a JSON file against a pydantic schema

    Args:
        path: File path, or "-" for stdin
        schema: Model class or typing form accepted by TypeAdapter

    Returns:
        The validated value

    Raises:
        InputFormatError: malformed JSON (with line and column) or schema violations (with location)
    """
    text = _read_text(path)
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputFormatError(
            f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}",
            witness={"path": path, "line": exc.lineno, "column": exc.colno},
        ) from exc
    try:
        return TypeAdapter(schema).validate_python(raw)
    except ValidationError as exc:
        errors = [{"loc": ".".join(str(x) for x in e["loc"]), "msg": e["msg"]} for e in exc.errors()]
        first = errors[0] if errors else {"loc": "", "msg": "invalid"}
        raise InputFormatError(f"{path}: {first['loc'] or '<root>'}: {first['msg']}",
                               witness={"path": path, "errors": errors}) from exc


def load_series(path: str) -> MatrixPowerSeries:
    return load(path, SeriesModel).to_series()


def load_cmat(path: str) -> np.ndarray:
    return load(path, CMatModel).to_array()


def load_points(path: Optional[str]) -> List[np.ndarray]:
    if path is None:
        return []
    return [m.to_array() for m in load(path, List[CMatModel])]


def _require(args: argparse.Namespace, *names: str) -> None:
    missing = ["--" + n.replace("_", "-") for n in names if getattr(args, n) is None]
    if missing:
        raise InvalidArgument(f"{args.command} {args.action} needs {', '.join(missing)}")


# actions that read each tolerance flag; every other action rejects it
TOLERANCE_USERS: Dict[str, Tuple[Tuple[str, str], ...]] = {
    "tol_abs": (("schur", "leech"), ("symm", "check")),
    "tol_rel": (("algebra", "realize"), ("blaschke", "divide")),
}


def _check_tolerances(args: argparse.Namespace) -> None:
    for name, users in TOLERANCE_USERS.items():
        if getattr(args, name) is None or (args.command, args.action) in users:
            continue
        flag = "--" + name.replace("_", "-")
        raise InvalidArgument(
            f"{flag} has no effect on {' '.join(filter(None, (args.command, args.action)))}",
            witness={"flag": flag, "used_by": [" ".join(u) for u in users]},
        )


def _tolerance(args: argparse.Namespace, name: str, keyword: str) -> Dict[str, float]:
    """Keyword arguments forwarding a tolerance flag, empty when the library default applies."""
    value = getattr(args, name)
    return {} if value is None else {keyword: value}


# ============== series ==============

def cmd_series(args: argparse.Namespace, cfg: RunConfig) -> Tuple[Dict[str, Any], int]:
    _require(args, "F")
    f = load_series(args.F)
    if args.action == "mul":
        _require(args, "G")
        g = load_series(args.G)
        return {"series": star_mul(f, g, max_order=None if args.order is None else cfg.order)}, 0
    if args.action == "inv":
        order = f.order if args.order is None else cfg.order
        return {"series": star_inverse(f, order)}, 0
    _require(args, "A")
    a = load_cmat(args.A)
    if args.action == "eval":
        return {"value": evaluate(f, a), "radius_estimate": radius_report(f)}, 0
    _require(args, "radius")
    value = contour_eval(f, a, args.radius, args.points)
    return {"value": value, "series_value": evaluate(f, a), "gap": fro(value - evaluate(f, a))}, 0


# ============== space ==============

WEIGHTS = {
    "hardy": spaces.WeightSequence.hardy,
    "fock": spaces.WeightSequence.fock,
    "dirichlet": spaces.WeightSequence.dirichlet,
}


def cmd_space(args: argparse.Namespace, cfg: RunConfig) -> Tuple[Dict[str, Any], int]:
    if args.action == "kernel":
        _require(args, "W")
        w = load_cmat(args.W)
        return {"series": spaces.szego_kernel(w, cfg.order), "tail_bound": spaces.kernel_tail_bound(w, cfg.order)}, 0

    _require(args, "F")
    f = load_series(args.F)
    if args.action == "inner":
        g = f if args.G is None else load_series(args.G)
        order = min(f.order, g.order)
        w = WEIGHTS[args.weight](order)
        value = spaces.weighted_inner(f.truncate(order), g.truncate(order), w)
        return {"weight": args.weight, "value": value, "trace": complex(np.trace(value))}, 0

    if args.weight == "fock":
        quad = spaces.gaussian_quadrature_fock(f)
        exact = spaces.weighted_inner(f, f, spaces.WeightSequence.fock(f.order))
    else:
        _require(args, "radius")
        points = max(args.points, 2 * (f.order + 1))
        quad = spaces.radial_quadrature(f, args.radius, points)
        exact = spaces.radial_coefficient_sum(f, args.radius)
    return {"quadrature": quad, "coefficient_sum": exact, "gap": fro(quad - exact)}, 0


# ============== blaschke ==============

def cmd_blaschke(args: argparse.Namespace, cfg: RunConfig) -> Tuple[Dict[str, Any], int]:
    _require(args, "A")
    bf = blaschke.build(load_cmat(args.A), cfg.order)
    if args.action == "build":
        return {
            "a": bf.a, "gamma": bf.gamma, "l": bf.l, "l_sqrt": bf.l_sqrt, "series": bf.series,
            "residuals": bf.invariant_residuals(),
            "closed_forms": blaschke.closed_form_discrepancy(bf),
        }, 0
    if args.action == "realize":
        r = blaschke.realization(bf)
        return {"realization": r, "weighted_unitarity": blaschke.check_weighted_unitary(r)}, 0
    _require(args, "H")
    h = load_series(args.H)
    g = blaschke.divide_blaschke(h, bf, **_tolerance(args, "tol_rel", "tol"))
    return {"quotient": g}, 0


# ============== interp ==============

def cmd_interp(args: argparse.Namespace, cfg: RunConfig) -> Tuple[Dict[str, Any], int]:
    _require(args, "data")
    raw = load(args.data, InterpolationDataModel)
    data = interp.InterpolationData.of([m.to_array() for m in raw.nodes], [m.to_array() for m in raw.values])
    sol = interp.with_theta(interp.solve_min(data, cfg.order))
    g = None if args.param is None else load_series(args.param)
    out: Dict[str, Any] = {
        "gram": sol.gram,
        "lambda_min": sol.lambda_min,
        "fmin": sol.fmin,
        "theta": sol.theta,
        "residuals": interp.residuals(sol, g),
    }
    if g is not None:
        out["parametrized"] = interp.parametrize(sol, g)
    return out, 0


# ============== schur ==============

def cmd_schur(args: argparse.Namespace, cfg: RunConfig) -> Tuple[Dict[str, Any], int]:
    if args.action == "counterexample":
        report = schur.counterexample_suite(cfg.order, cfg.seed)
        return report, 0 if report["passed"] else 1
    if args.action == "realize":
        _require(args, "U")
        u = load(args.U, RealizationModel).to_realization()
        s = schur.realization_to_series(u, cfg.order)
        return {"series": s, "toeplitz_norm": schur.toeplitz_contraction(s, cfg.order)[0]}, 0
    if args.action == "leech":
        _require(args, "P", "Q")
        pp, qq = load_series(args.P), load_series(args.Q)
        sample = load_points(args.points) or sampling.leech_sample(sampling.rng_for(cfg.seed), pp.p)
        res = schur.leech_solve(pp, qq, sample, cfg.order, **_tolerance(args, "tol_abs", "tol"))
        return {
            "series": res.series, "realization": res.realization, "rank": res.rank,
            "lambda_min": res.gram_min_eig, "residual": res.residual, "norm": res.toeplitz_norm,
            "within_tol": res.within_tol,
        }, 0 if res.within_tol else 1

    _require(args, "S")
    s = load_series(args.S)
    if args.action == "check":
        report = schur.check_multiplier(s, cfg.order, load_points(args.points))
        return {"report": report}, 1 if report.verdict == Verdict.FAIL else 0
    model = schur.coisometric_extract(s, cfg.order)
    return {
        "t": model.t_op, "f": model.f_op, "g": model.g_op, "h": model.h_op,
        "model_dim": model.model_dim,
        "reconstruction_residual": model.reconstruction_residual,
        "coisometry_residual": model.coisometry_residual,
    }, 0


# ============== cara ==============

def cmd_cara(args: argparse.Namespace, cfg: RunConfig) -> Tuple[Dict[str, Any], int]:
    if args.action == "synth":
        _require(args, "data")
        raw = load(args.data, HerglotzModel)
        data = cara.HerglotzData.of(raw.imag_part.to_array(), [(a.t, a.m.to_array()) for a in raw.atoms])
        return {"series": cara.herglotz_series(data, cfg.order)}, 0

    _require(args, "Phi")
    phi = load_series(args.Phi)
    if args.action == "check":
        depth = min(phi.order, cfg.order if args.depth is None else args.depth)
        ok, lam = cara.moment_check(phi, depth, split_imaginary=not args.no_split)
        out: Dict[str, Any] = {"moment_psd": ok, "moment_lambda_min": lam, "depth": depth}
        verdict = Verdict.PASS if ok else Verdict.FAIL
        points = load_points(args.points)
        if points:
            gram = cara.cara_kernel_gram(phi, points)
            out["kernel_lambda_min"] = gram.min_eig
            if not gram.psd:
                verdict = Verdict.FAIL
                out["witness"] = gram.witness()
        out["verdict"] = verdict
        return out, 1 if verdict == Verdict.FAIL else 0

    report = cara.realization_recovery(phi, cfg.order)
    return {
        "c0": report.c0, "r0": report.r0, "model_dim": report.model_dim,
        "residuals": report.residuals, "convention": report.convention,
        "phi0_normalization": report.phi0_normalization,
        "invariance_residual": report.invariance_residual,
    }, 0


# ============== algebra ==============

def cmd_algebra(args: argparse.Namespace, cfg: RunConfig) -> Tuple[Dict[str, Any], int]:
    _require(args, "F")
    f = load_series(args.F)
    if args.action == "invert":
        order = f.order if args.order is None else cfg.order
        g = algebra.wplus_invert(algebra.WienerSeries(f), order, seed=cfg.seed)
        return {"series": g, "residual": algebra.inversion_residual(f, g, min(order, f.order))}, 0
    r = algebra.hankel_realize(f, **_tolerance(args, "tol_rel", "tol"))
    return {"realization": r, "state_dim": r.state_dim}, 0


# ============== symm ==============

def _symmetry(args: argparse.Namespace) -> symm.Symmetry:
    if args.kind == "quaternionic":
        return symm.quaternionic(args.h)
    if args.kind == "split":
        return symm.split(args.h)
    if args.kind == "conjugation":
        return symm.conjugation(2 * args.h)
    _require(args, "J")
    return symm.custom(load_cmat(args.J), similarity=args.similarity)


def cmd_symm(args: argparse.Namespace, cfg: RunConfig) -> Tuple[Dict[str, Any], int]:
    if args.action == "embed":
        _require(args, "a1", "a2")
        a1, a2 = load_cmat(args.a1), load_cmat(args.a2)
        if args.kind == "quaternionic":
            m, phi = symm.embed_quaternion(a1, a2), symm.quaternionic(a1.shape[0])
        elif args.kind == "split":
            m, phi = symm.embed_split(a1, a2), symm.split(a1.shape[0])
        else:
            raise InvalidArgument(f"embedding is defined for quaternionic and split, not {args.kind}")
        return {"matrix": m, "fixed": symm.is_fixed(phi, m)}, 0

    phi = _symmetry(args)
    rng = sampling.rng_for(cfg.seed)
    samples = [(sampling.random_cmat(rng, phi.n), sampling.random_cmat(rng, phi.n)) for _ in range(args.samples)]
    report = symm.admissible_check(phi, samples, max(cfg.tol_abs, 1e-12))
    out: Dict[str, Any] = {"report": report, "passed": report.passed, "violated": report.violated}
    if args.node is not None:
        out["blaschke_gap"] = symm.blaschke_symmetry_check(phi, load_cmat(args.node), cfg.order)
    return out, 0 if report.passed else 1


# ============== verify-all ==============

def cmd_verify(args: argparse.Namespace, cfg: RunConfig) -> Tuple[Dict[str, Any], int]:
    report = get_runner(cfg.seed).run()
    return {"report": report}, 0 if report.success else 1


# ============== Parser ==============

ACTIONS: Dict[str, Tuple[Tuple[str, ...], Handler]] = {
    "series": (("mul", "inv", "eval", "contour"), cmd_series),
    "space": (("inner", "kernel", "quadrature"), cmd_space),
    "blaschke": (("build", "realize", "divide"), cmd_blaschke),
    "interp": (("solve",), cmd_interp),
    "schur": (("check", "realize", "leech", "extract", "counterexample"), cmd_schur),
    "cara": (("synth", "check", "recover"), cmd_cara),
    "algebra": (("invert", "realize"), cmd_algebra),
    "symm": (("check", "embed"), cmd_symm),
}


def _common() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--order", type=int, default=None, help="truncation order N")
    common.add_argument("--tol-abs", type=float, default=None, help="absolute tolerance (symm check, schur leech)")
    common.add_argument("--tol-rel", type=float, default=None, help="relative tolerance (algebra realize, blaschke divide)")
    common.add_argument("--seed", type=int, default=settings.SEED)
    common.add_argument("--out", default=None, help="write JSON here instead of stdout")
    common.add_argument("--verbose", "-v", action="store_true", help="DEBUG logging on stderr")
    return common


def _inputs(parser: argparse.ArgumentParser, command: str) -> None:
    if command == "series":
        parser.add_argument("--F")
        parser.add_argument("--G")
        parser.add_argument("--A")
        parser.add_argument("--radius", type=float)
        parser.add_argument("--points", type=int, default=64)
    elif command == "space":
        parser.add_argument("--F")
        parser.add_argument("--G")
        parser.add_argument("--W")
        parser.add_argument("--weight", choices=sorted(WEIGHTS), default="hardy")
        parser.add_argument("--radius", type=float)
        parser.add_argument("--points", type=int, default=64)
    elif command == "blaschke":
        parser.add_argument("--A")
        parser.add_argument("--H")
    elif command == "interp":
        parser.add_argument("--data")
        parser.add_argument("--param")
    elif command == "schur":
        parser.add_argument("--S")
        parser.add_argument("--U")
        parser.add_argument("--P")
        parser.add_argument("--Q")
        parser.add_argument("--points", help="JSON list of CMat sample points")
    elif command == "cara":
        parser.add_argument("--data")
        parser.add_argument("--Phi")
        parser.add_argument("--depth", type=int)
        parser.add_argument("--points", help="JSON list of CMat sample points")
        parser.add_argument("--no-split", action="store_true", help="require Phi_0 Hermitian")
    elif command == "algebra":
        parser.add_argument("--F")
    elif command == "symm":
        parser.add_argument("--kind", choices=["quaternionic", "split", "conjugation", "custom"],
                            default="quaternionic")
        parser.add_argument("--h", type=int, default=1, help="block size of J")
        parser.add_argument("--J")
        parser.add_argument("--similarity", action="store_true", help="use J conj(A) J^{-1}")
        parser.add_argument("--samples", type=int, default=16)
        parser.add_argument("--node", help="phi-fixed node for the Blaschke symmetry check")
        parser.add_argument("--a1")
        parser.add_argument("--a2")


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="mhk", description=f"{settings.APP_NAME} {settings.APP_VERSION}")
    parser.add_argument("--version", action="version", version=settings.APP_VERSION)
    commands = parser.add_subparsers(dest="command", required=True)
    for command, (actions, _) in ACTIONS.items():
        sub = commands.add_parser(command)
        verbs = sub.add_subparsers(dest="action", required=True)
        for action in actions:
            _inputs(verbs.add_parser(action, parents=[common]), command)
    commands.add_parser("verify-all", parents=[common])
    return parser


# ============== Output ==============

def emit(payload: Dict[str, Any], out: Optional[str]) -> None:
    text = json.dumps(jsonable(payload), sort_keys=True, indent=2)
    if out is None:
        sys.stdout.write(text + "\n")
        return
    with open(out, "w", encoding="utf-8") as fh:
        fh.write(text + "\n")


def configure_logging(verbose: bool) -> None:
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.DEBUG if verbose else getattr(logging, settings.LOG_LEVEL.upper(), logging.WARNING),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        force=True,
    )


# ============== Run ==============

def main(argv: Optional[List[str]] = None) -> int:
    """
    Dispatch one mhk invocation

    Args:
        argv: Arguments without the program name (defaults to sys.argv[1:])

    Returns:
        Exit code: 0 success, 1 mathematical Fail, 2 input or usage error
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    configure_logging(args.verbose)
    if args.command == "verify-all":
        args.action = None

    try:
        try:
            cfg = RunConfig(
                order=settings.DEFAULT_ORDER if args.order is None else args.order,
                tol_abs=settings.TOL_ABS if args.tol_abs is None else args.tol_abs,
                tol_rel=settings.TOL_REL if args.tol_rel is None else args.tol_rel,
                seed=args.seed,
                out=args.out,
            )
        except ValidationError as exc:
            first = exc.errors()[0]
            raise InputFormatError(f"{'.'.join(str(x) for x in first['loc'])}: {first['msg']}") from exc
        _check_tolerances(args)
        handler = cmd_verify if args.command == "verify-all" else ACTIONS[args.command][1]
        payload, code = handler(args, cfg)
    except MhkError as exc:
        logger.error("%s: %s", exc.code, exc.message)
        emit(exc.to_dict(), args.out)
        return exc.exit_code

    emit(payload, cfg.out)
    logger.info("%s %s exit %d", args.command, args.action or "", code)
    return code


if __name__ == "__main__":
    sys.exit(main())
