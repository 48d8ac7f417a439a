import argparse
import logging
import sys
from typing import Dict, List, Optional, Tuple

from app.cli.commands import (
    STAR_CHECKS,
    Runner,
    cmd_check_lambda,
    cmd_classify_codim2,
    cmd_orbit,
    cmd_star,
    cmd_surface,
    execute,
    load_document,
    render,
)
from app.core.config import settings
from app.core.logging_config import configure_logging
from app.schemas.geometry import OrbitRequestModel, load_model, read_document
from app.schemas.report import RunReport

logger = logging.getLogger(__name__)


def _add_input(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("input", nargs="?", help="JSON file with a shape family or surface")
    parser.add_argument("--bundled", metavar="NAME", help=f"bundled example: {', '.join(settings.bundled_names())}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="symspace",
        description="Exact verification of extrinsic symplectic symmetric spaces",
    )
    parser.add_argument("--seed", type=int, default=settings.DEFAULT_SEED, help="seed for every random choice")
    parser.add_argument("--mode", choices=["exact", "float"], default=settings.SCALAR_MODE)
    parser.add_argument("--output", choices=["json", "text"], default="json")
    parser.add_argument("--log-level", default=None, help="overrides LOG_LEVEL")
    subparsers = parser.add_subparsers(dest="command", required=True)

    check = subparsers.add_parser("check-lambda", help="check the defining conditions on shape data")
    _add_input(check)

    surface = subparsers.add_parser("surface", help="verify a surface given by affine generators")
    _add_input(surface)
    surface.add_argument("--verify-symmetry", type=int, default=50, metavar="N", help="number of (x, y) pairs")

    orbit = subparsers.add_parser("orbit", help="evaluate orbits of the transvection group")
    _add_input(orbit)
    orbit.add_argument("--points", metavar="FILE", help='JSON {"points": [{"x": [...], "t": "1/2"}]}')
    orbit.add_argument(
        "--point", nargs=2, action="append", metavar=("X", "T"), help="comma-separated x and a time t; repeatable"
    )

    classify = subparsers.add_parser("classify-codim2", help="sample codimension-two solutions and classify them")
    classify.add_argument("--n", type=int, default=2)
    classify.add_argument("--count", type=int, default=100)

    star = subparsers.add_parser("star", help="Moyal star products on the ambient space or on the surface")
    _add_input(star)
    star.add_argument(
        "--u", required=True, help="expression in z1.. (or x1.. with --on-sigma) and nu, or a JSON term list"
    )
    star.add_argument("--v", required=True)
    star.add_argument("--w", help="third factor for the associativity check")
    star.add_argument("--on-sigma", action="store_true", help="use the induced product on the surface")
    star.add_argument("--check", action="append", default=[], choices=STAR_CHECKS)
    star.add_argument("--x", help="comma-separated tangent direction for the invariance check")
    star.add_argument("--t", default="1")
    return parser


def _orbit_points(args: argparse.Namespace) -> Optional[List[dict]]:
    if args.points:
        return [item.model_dump() for item in load_model(OrbitRequestModel, read_document(args.points)).points]
    if args.point:
        return [{"x": x.split(","), "t": t} for x, t in args.point]
    return None


def dispatch(args: argparse.Namespace) -> Tuple[RunReport, int]:
    if args.command == "classify-codim2":
        return execute(
            args.command, args.seed, args.mode, lambda _: cmd_classify_codim2(args.n, args.count, args.seed, args.mode)
        )
    runners: Dict[str, Runner] = {
        "check-lambda": lambda doc: cmd_check_lambda(doc, args.seed, args.mode),
        "surface": lambda doc: cmd_surface(doc, args.seed, args.mode, args.verify_symmetry),
        "orbit": lambda doc: cmd_orbit(doc, args.seed, args.mode, _orbit_points(args)),
        "star": lambda doc: cmd_star(
            doc,
            args.seed,
            args.mode,
            args.u,
            args.v,
            w=args.w,
            on_sigma=args.on_sigma,
            checks=args.check,
            x=args.x.split(",") if args.x else None,
            t=args.t,
        ),
    }
    return execute(
        args.command, args.seed, args.mode, runners[args.command], lambda: load_document(args.input, args.bundled)
    )


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.log_level)
    logger.debug(f"Running {args.command} with seed {args.seed}")

    report, code = dispatch(args)
    print(render(report, args.output))
    if report.error:
        print(f"symspace {args.command}: {report.error}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
