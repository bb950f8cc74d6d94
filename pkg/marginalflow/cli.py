"""Batch driver: python -m marginalflow {sample,flow,bd,variational,constraints}

Exit codes: 0 every checked bound holds, 1 a bound is violated, 2 the input is outside the regime
the bounds cover (degeneracy and the like), 3 malformed input.
"""
import argparse
import logging
import sys
from typing import List, Optional

from pydantic import ValidationError

from marginalflow.config import settings
from marginalflow.core.experiment_runner import EXIT_VIOLATION, ExperimentRunner
from marginalflow.errors import BoundViolation, ContractError, InputError
from marginalflow.models.experiments import (
    BDConfig, ConstraintsConfig, ExperimentKind, FlowConfig, SampleConfig, VariationalConfig,
)
from marginalflow.models.flow import FlowParams
from marginalflow.utils.report_writer import dumps
from marginalflow.utils.validators import (
    check_qubits, load_amplitudes_file, load_lambdas_file, parse_floats, parse_lambdas, parse_pinned,
    parse_setting,
)

logger = logging.getLogger(__name__)

EXIT_CONTRACT, EXIT_INPUT = 2, 3


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on usage errors; those are input errors here"""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _seed(text: str) -> int:
    """Decimal, or hex/octal/binary with an explicit 0x, 0o or 0b prefix"""
    digits = text.strip().lower()
    value = int(digits, 0) if digits[:2] in ("0x", "0o", "0b") else int(digits, 10)
    if not 0 <= value < 2 ** 64:
        raise ValueError(text)
    return value


def _common(stochastic: bool) -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    system = common.add_mutually_exclusive_group()
    system.add_argument("--setting", help="fermionic setting N,d, e.g. 3,6")
    system.add_argument("--qubits", type=int, help="number of qubits (Higuchi constraints)")
    common.add_argument("--constraint", help="catalog name (pauli, borland-dennis, higuchi[:i], collective:r,s, "
                                             "trivial) or constraint file path[#name]")
    common.add_argument("--seed", type=_seed, required=stochastic,
                        help="unsigned 64-bit seed; sample k uses seed + k")
    common.add_argument("--out", help="output path (stdout when omitted)")
    common.add_argument("--jobs", type=int, default=settings.jobs, help="worker processes (MARGINALFLOW_JOBS)")
    common.add_argument("--tol", type=float, default=settings.tol, help="slack allowed on checked bounds")
    return common


def _flow_options() -> argparse.ArgumentParser:
    options = argparse.ArgumentParser(add_help=False)
    options.add_argument("--t-max", type=float, default=settings.t_max)
    options.add_argument("--stop-d", type=float, default=settings.stop_d, help="converged when D drops below")
    options.add_argument("--gap-tol", type=float, default=settings.gap_tol, help="degeneracy threshold")
    options.add_argument("--dt-initial", type=float, default=settings.dt_initial)
    options.add_argument("--dt-max", type=float, default=settings.dt_max)
    options.add_argument("--snapshot-stride", type=int, default=settings.snapshot_stride)
    return options


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="marginalflow", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    commands = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    flow_options = _flow_options()
    defaults = argparse.ArgumentDefaultsHelpFormatter

    sample = commands.add_parser("sample", parents=[_common(True), flow_options], formatter_class=defaults,
                                 help="flow random states and check the distance and weight bounds")
    sample.add_argument("--samples", type=int, default=100)
    sample.add_argument("--max-d", type=float, default=0.5, help="skip the flow above this D")
    sample.add_argument("--format", choices=["csv", "json", "xlsx"], default="csv")

    flow = commands.add_parser("flow", parents=[_common(False), flow_options], formatter_class=defaults,
                               help="integrate one trajectory and export its trace")
    start = flow.add_mutually_exclusive_group()
    start.add_argument("--amplitudes", help="JSON file of [re, im] amplitude pairs")
    start.add_argument("--pinned", help="weights a,n,m of a pinned Borland-Dennis start")
    flow.add_argument("--derivative-step", type=float, default=1e-4)
    flow.add_argument("--format", choices=["csv", "json", "xlsx"], default="csv")

    bd = commands.add_parser("bd", parents=[_common(True)], formatter_class=defaults,
                             help="check the Borland-Dennis structure and stability bounds on (3,6)")
    bd.add_argument("--samples", type=int, default=100)
    bd.add_argument("--mode", choices=["haar", "quasipinned", "pinned"], default="haar")
    bd.add_argument("--max-d", type=float, default=0.1, help="D cap for quasipinned samples")
    bd.add_argument("--unstable-gap", type=float, default=0.05, help="minimal lambda_3 - lambda_4")
    bd.add_argument("--gap-tol", type=float, default=settings.gap_tol, help="degeneracy threshold")
    bd.add_argument("--format", choices=["json", "csv", "xlsx"], default="json")

    variational = commands.add_parser("variational", parents=[_common(True)], formatter_class=defaults,
                                      help="energy estimates of the facet variational ansatz")
    variational.add_argument("--instances", type=int, default=20)
    variational.add_argument("--coupling", type=float, default=0.1, help="two-body scale g, or U for hubbard")
    variational.add_argument("--model", choices=["random", "hubbard"], default="random")
    variational.add_argument("--sites", type=int, default=3, help="Hubbard chain length")
    variational.add_argument("--hopping", type=float, default=1.0, help="Hubbard hopping t")
    variational.add_argument("--restarts", type=int, default=settings.variational_restarts)
    variational.add_argument("--max-iter", type=int, default=settings.variational_max_iter)
    variational.add_argument("--format", choices=["json", "csv", "xlsx"], default="json")

    constraints = commands.add_parser("constraints", parents=[_common(False)], formatter_class=defaults,
                                      help="evaluate constraints on an occupation vector")
    occupations = constraints.add_mutually_exclusive_group(required=True)
    occupations.add_argument("--lambdas", help="decreasing occupations, comma separated")
    occupations.add_argument("--lambdas-file", help="file holding the occupations")
    constraints.add_argument("--format", choices=["text", "json", "xlsx"], default="text")
    return parser


def _flow_params(args) -> FlowParams:
    return FlowParams(
        t_max=args.t_max, stop_D=args.stop_d, gap_tol=args.gap_tol, dt_initial=args.dt_initial,
        dt_max=max(args.dt_max, args.dt_initial), snapshot_stride=args.snapshot_stride,
    )


def build_config(args):
    common = {
        "setting": parse_setting(args.setting) if args.setting else None,
        "qubits": check_qubits(args.qubits) if args.qubits is not None else None,
        "constraint": args.constraint,
        "seed": args.seed if args.seed is not None else 0,
        "jobs": args.jobs,
        "tol": args.tol,
        "out": args.out,
        "output_format": args.format,
    }
    if args.command == "sample":
        return SampleConfig(**common, samples=args.samples, max_d=args.max_d, flow=_flow_params(args))
    if args.command == "flow":
        if args.seed is None and args.amplitudes is None and args.pinned is None:
            raise InputError("a flow run needs --seed, --amplitudes or --pinned")
        if args.pinned and common["setting"] is None:
            common["setting"] = (3, 6)
        return FlowConfig(
            **common, flow=_flow_params(args), derivative_step=args.derivative_step,
            amplitudes=load_amplitudes_file(args.amplitudes) if args.amplitudes else None,
            pinned=parse_pinned(args.pinned) if args.pinned else None,
        )
    if args.command == "bd":
        return BDConfig(**common, samples=args.samples, mode=args.mode, max_d=args.max_d,
                        unstable_gap=args.unstable_gap, gap_tol=args.gap_tol)
    if args.command == "variational":
        return VariationalConfig(
            **common, instances=args.instances, coupling=args.coupling, model=args.model, sites=args.sites,
            hopping=args.hopping, restarts=args.restarts, max_iter=args.max_iter,
        )
    d = common["qubits"] if common["qubits"] is not None else (common["setting"] or (None, None))[1]
    # local minor eigenvalues carry no ordering
    ordered = common["qubits"] is None
    if args.lambdas_file:
        lambdas = load_lambdas_file(args.lambdas_file, d, ordered)
    elif not ordered:
        lambdas = parse_floats(args.lambdas, "local eigenvalues")
    else:
        lambdas = parse_lambdas(args.lambdas, d)
    return ConstraintsConfig(**common, lambdas=lambdas)


def run(args) -> int:
    config = build_config(args)
    outcome = ExperimentRunner().run(ExperimentKind(args.command), config)
    if outcome.exit_code == EXIT_VIOLATION:
        raise BoundViolation(f"bound violated; first violating row: {dumps(outcome.first_violation).strip()}")
    for path in outcome.output_files:
        logger.info(f"Wrote {path}")
    return outcome.exit_code


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=settings.log_level, stream=sys.stderr,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        return run(args)
    except BoundViolation as e:
        print(f"marginalflow: {e}", file=sys.stderr)
        return EXIT_VIOLATION
    except ContractError as e:
        print(f"marginalflow: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_CONTRACT
    except (InputError, ValidationError) as e:
        print(f"marginalflow: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_INPUT
