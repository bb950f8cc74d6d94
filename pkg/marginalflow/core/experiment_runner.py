"""Batch campaigns behind the CLI subcommands and the HTTP job service.

Per-sample work lives in module-level functions so it can be shipped to worker processes; each
sample derives its own seed as seed + index and rows come back in index order.
"""
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from functools import partial
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from marginalflow.core.borland_dennis import (
    BD_SETTING, MAX_ROTATION_D, check_off_diagonal, check_relaxation_chain, check_theorem_unstable,
    check_theorem_xizeta, expand, pinned_state, quasipinned_state, random_pinned_state, rotate_and_bound,
)
from marginalflow.core.constraints import catalog, evaluate, load_constraint_file, select_constraint
from marginalflow.core.fock import fock_setting, random_state
from marginalflow.core.flow import (
    DISTANCE_TOL, WEIGHT_TOL, StabilizingFlow, flow_system, integrate, terminal_weight, verify_decay,
    verify_derivative_identity, verify_distance_bound, verify_path_bound,
)
from marginalflow.core.hamiltonians import hubbard_hamiltonian, random_hamiltonian
from marginalflow.core.qubits import qubit_state, random_qubit_state
from marginalflow.core.variational import ESTIMATE_TOL, check_energy_estimates
from marginalflow.errors import (
    DegenerateGroundStateError, DegenerateSpectrumError, ExpansionResidualError, InvalidSettingError,
    OutputWriteError,
)
from marginalflow.models.arrays import from_pairs
from marginalflow.models.borland_dennis import BDSampleRecord
from marginalflow.models.constraints import ConstraintSet, LinearConstraint
from marginalflow.models.experiments import (
    BDConfig, BDMode, ConstraintsConfig, ExperimentKind, ExperimentOutcome, FlowConfig, HamiltonianModel,
    RunConfig, SampleConfig, VariationalConfig,
)
from marginalflow.models.flow import TerminationReason
from marginalflow.models.fock import StateVector
from marginalflow.utils.report_writer import (
    WorkbookWriter, snapshots_document, trace_frame, write_csv, write_json,
)

logger = logging.getLogger(__name__)

SAMPLE_COLUMNS = [
    "seed_index", "D_lambda", "flow_converged", "dist_final", "bound_sqrt2D", "weight_outside_PD", "bound_2D",
]

EXIT_OK, EXIT_VIOLATION, EXIT_CONTRACT = 0, 1, 2


def default_constraint_name(config: RunConfig) -> str:
    if config.qubits is not None:
        return "higuchi"
    if config.setting == (3, 6):
        return "borland-dennis"
    return "pauli"


def resolve_constraint(config: RunConfig) -> LinearConstraint:
    spec = config.constraint or default_constraint_name(config)
    return select_constraint(spec, config.N, config.d, config.qubits)


def _map_ordered(fn: Callable, items: Sequence, jobs: int) -> List:
    """Results in input order whatever the worker count"""
    if jobs <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=jobs) as executor:
        return list(executor.map(fn, items, chunksize=max(1, len(items) // (4 * jobs))))


# SAMPLE ROWS

def random_start(config: RunConfig, seed: int):
    if config.qubits is not None:
        return random_qubit_state(config.qubits, seed)
    return random_state(fock_setting(config.N, config.d), seed)


def sample_row(config: SampleConfig, constraint: LinearConstraint, index: int) -> Dict[str, Any]:
    state = random_start(config, config.seed + index)
    system = flow_system(state, constraint)
    D0 = StabilizingFlow(system, config.flow).D(system.spectrum(np.asarray(state.amplitudes)))
    row = {
        "seed_index": index, "D_lambda": D0, "flow_converged": False,
        "dist_final": math.nan, "bound_sqrt2D": math.sqrt(2 * max(D0, 0.0)),
        "weight_outside_PD": math.nan, "bound_2D": 2 * D0,
    }
    if D0 > config.max_d:
        return row
    trace = integrate(state, constraint, config.flow)
    row["flow_converged"] = trace.converged
    row["dist_final"] = float(trace.distances[-1])
    if trace.converged:
        row["weight_outside_PD"] = terminal_weight(state, trace).lhs
    return row


def sample_row_violations(row: Dict[str, Any], tol: float) -> List[str]:
    failed = []
    if not math.isnan(row["dist_final"]) and row["dist_final"] > row["bound_sqrt2D"] + max(tol, DISTANCE_TOL):
        failed.append("distance")
    if not math.isnan(row["weight_outside_PD"]) and row["weight_outside_PD"] > row["bound_2D"] + max(tol, WEIGHT_TOL):
        failed.append("weight_outside")
    return failed


# BORLAND-DENNIS RECORDS

def bd_start(config: BDConfig, seed: int) -> StateVector:
    if config.mode == BDMode.QUASIPINNED:
        return quasipinned_state(seed, max_D=config.max_d)
    if config.mode == BDMode.PINNED:
        return random_pinned_state(seed)
    return random_state(BD_SETTING, seed)


def bd_record(config: BDConfig, index: int) -> Dict[str, Any]:
    state = bd_start(config, config.seed + index)
    try:
        exp = expand(state, config.gap_tol)
    except DegenerateSpectrumError as e:
        return BDSampleRecord(seed_index=index, status="skipped", detail=str(e)).model_dump()
    except ExpansionResidualError as e:
        return BDSampleRecord(seed_index=index, status="fail", detail=str(e)).model_dump()

    tol = config.tol
    checks = [check_theorem_xizeta(exp, tol), check_off_diagonal(exp).check]
    checks.extend(check_relaxation_chain(exp, tol).checks)
    record = {"seed_index": index, "D": exp.D, "xi_zeta": checks[0].lhs}

    gap34 = float(exp.lambdas[2] - exp.lambdas[3])
    if gap34 > config.unstable_gap:
        unstable = check_theorem_unstable(exp, config.unstable_gap, tol)
        checks.append(unstable.check)
        record.update(unstable_lhs=unstable.check.lhs, unstable_bound=unstable.check.rhs)

    if exp.D < MAX_ROTATION_D:
        try:
            rotation = rotate_and_bound(exp, tol)
        except ExpansionResidualError as e:
            return BDSampleRecord(**record, status="fail", detail=str(e)).model_dump()
        checks.extend(rotation.checks)
        residual = next(c for c in rotation.checks if c.name == "residual_weight")
        record.update(residual_weight=residual.lhs, residual_bound=residual.rhs)

    failed = [c.name for c in checks if not c.holds]
    record["status"] = "fail" if failed else "pass"
    if failed:
        record["detail"] = "violated: " + ", ".join(failed)
    return BDSampleRecord(**record).model_dump()


# VARIATIONAL ROWS

def build_hamiltonian(config: VariationalConfig, index: int):
    if config.model == HamiltonianModel.HUBBARD:
        N = config.N if config.N is not None else config.sites
        return hubbard_hamiltonian(config.sites, N, t=config.hopping, U=config.coupling)
    N, d = config.setting or (3, 6)
    return random_hamiltonian(fock_setting(N, d), config.coupling, config.seed + index)


def variational_row(config: VariationalConfig, constraint: LinearConstraint, index: int) -> Dict[str, Any]:
    H = build_hamiltonian(config, index)
    try:
        report = check_energy_estimates(
            H, constraint, restarts=config.restarts, seed=config.seed + index, tol=max(config.tol, ESTIMATE_TOL),
            max_iter=config.max_iter,
        )
    except DegenerateGroundStateError as e:
        logger.warning(f"Instance {index} skipped: {e}")
        return {"instance": index, "status": "skipped", "detail": str(e)}
    row = {"instance": index, "hamiltonian": H.label, **report.export()}
    row["status"] = "pass" if report.holds else "fail"
    if not report.holds:
        row["detail"] = "violated: " + ", ".join(c.name for c in report.checks if not c.holds)
    return row


class ExperimentRunner:
    def __init__(self):
        self.workbook_writer = WorkbookWriter()

    def _write_workbook(self, tables: Dict[str, pd.DataFrame], metadata: Dict[str, Any], path: str) -> str:
        if not self.workbook_writer.generate(tables, metadata, path):
            raise OutputWriteError(f"could not write workbook {path}")
        return path

    def _emit_table(self, frame: pd.DataFrame, config: RunConfig, sheet: str, metadata: Dict[str, Any],
                    document: Optional[Dict[str, Any]] = None) -> List[str]:
        """Write a table as csv, json or xlsx; json carries document when given"""
        fmt = config.output_format
        if fmt == "xlsx":
            if config.out is None:
                raise InvalidSettingError("--format xlsx needs --out")
            return [self._write_workbook({sheet: frame}, metadata, config.out)]
        if fmt == "json":
            payload = document if document is not None else {
                **metadata, "rows": frame.to_dict(orient="records"),
            }
            path = write_json(payload, config.out)
            return [str(path)] if path else []
        path = write_csv(frame, config.out)
        return [str(path)] if path else []

    def sample(self, config: SampleConfig) -> ExperimentOutcome:
        constraint = resolve_constraint(config)
        logger.info(f"Sampling {config.samples} states against {constraint.name} (seed {config.seed})")
        rows = _map_ordered(partial(sample_row, config, constraint), list(range(config.samples)), config.jobs)
        frame = pd.DataFrame(rows, columns=SAMPLE_COLUMNS)

        first_violation = None
        for row in rows:
            failed = sample_row_violations(row, config.tol)
            if failed:
                first_violation = {**row, "violated": failed}
                break
        flowed = int(frame["dist_final"].notna().sum())
        converged = int(frame["flow_converged"].sum())
        metadata = {
            "subcommand": "sample", "constraint": constraint.name, "seed": config.seed,
            "samples": config.samples, "flowed": flowed, "converged": converged,
        }
        files = self._emit_table(frame, config, "Samples", metadata)
        logger.info(f"Sampling finished: {flowed} flowed, {converged} converged")
        return ExperimentOutcome(
            kind=ExperimentKind.SAMPLE, exit_code=EXIT_VIOLATION if first_violation else EXIT_OK,
            summary=metadata, output_files=files, first_violation=first_violation,
        )

    def _flow_start(self, config: FlowConfig):
        if config.amplitudes is not None:
            amplitudes = from_pairs(config.amplitudes)
            if config.qubits is not None:
                state = qubit_state(amplitudes)
                if state.n != config.qubits:
                    raise InvalidSettingError(f"amplitude file holds {state.n} qubits, run uses {config.qubits}")
                return state
            return StateVector(setting=fock_setting(config.N, config.d), amplitudes=amplitudes)
        if config.pinned is not None:
            if config.setting != (3, 6):
                raise InvalidSettingError("pinned starts exist only for N=3, d=6")
            return pinned_state(config.pinned)
        return random_start(config, config.seed)

    def flow(self, config: FlowConfig) -> ExperimentOutcome:
        constraint = resolve_constraint(config)
        state = self._flow_start(config)
        logger.info(f"Integrating the flow for {constraint.name} (seed {config.seed})")
        trace = integrate(state, constraint, config.flow)

        decay = verify_decay(trace)
        distance = verify_distance_bound(trace)
        path = verify_path_bound(trace)
        checks = {"decay": decay.holds, "distance": distance.holds, "path": path.holds}
        weight = None
        if trace.converged:
            weight = terminal_weight(state, trace)
            checks["weight_outside"] = weight.holds
        derivative = None
        if trace.min_gaps[0] >= config.flow.gap_tol and trace.D0 >= config.flow.stop_D:
            try:
                derivative = verify_derivative_identity(state, constraint, config.derivative_step,
                                                        config.flow.gap_tol)
                checks["derivative"] = derivative.holds
            except DegenerateSpectrumError as e:
                logger.warning(f"Derivative identity skipped: {e}")

        summary = {
            "kind": trace.kind.value, "constraint": constraint.name,
            "termination_reason": trace.termination_reason.value, "message": trace.message,
            "D0": trace.D0, "D_final": float(trace.D_values[-1]), "t_final": float(trace.times[-1]),
            "steps": len(trace) - 1, "rejected_steps": trace.rejected_steps,
            "decay": decay.model_dump(), "distance": distance.model_dump(), "path": path.model_dump(),
            "weight_outside": weight.model_dump() if weight else None,
            "derivative": derivative.model_dump() if derivative else None,
            "checks": checks,
        }

        frame = trace_frame(trace)
        files = []
        if config.out is None:
            write_json({"summary": summary, "trace": frame.to_dict(orient="records"),
                        "snapshots": snapshots_document(trace)})
        elif config.output_format == "xlsx":
            snapshot_frame = pd.DataFrame({"t": trace.snapshot_times, "D": trace.snapshot_D})
            metadata = {k: v for k, v in summary.items() if not isinstance(v, dict)}
            files.append(self._write_workbook({"Trace": frame, "Snapshots": snapshot_frame}, metadata, config.out))
        else:
            out = Path(config.out)
            files.append(str(write_csv(frame, out)))
            files.append(str(write_json(snapshots_document(trace), out.with_name(f"{out.stem}_snapshots.json"))))
            write_json(summary)

        failed = [name for name, ok in checks.items() if not ok]
        if trace.termination_reason == TerminationReason.DEGENERATE:
            exit_code = EXIT_CONTRACT
        elif failed:
            exit_code = EXIT_VIOLATION
        else:
            exit_code = EXIT_OK
        return ExperimentOutcome(
            kind=ExperimentKind.FLOW, exit_code=exit_code, summary=summary, output_files=files,
            first_violation={"violated": failed} if failed else None,
        )

    def bd(self, config: BDConfig) -> ExperimentOutcome:
        if config.setting not in (None, (3, 6)) or config.qubits is not None:
            raise InvalidSettingError("the Borland-Dennis sweep runs on N=3, d=6 only")
        logger.info(f"Borland-Dennis sweep: {config.samples} {config.mode.value} samples (seed {config.seed})")
        records = _map_ordered(partial(bd_record, config), list(range(config.samples)), config.jobs)
        statuses = [r["status"] for r in records]
        summary = {
            "subcommand": "bd", "mode": config.mode.value, "seed": config.seed, "samples": config.samples,
            "passed": statuses.count("pass"), "failed": statuses.count("fail"),
            "skipped": statuses.count("skipped"),
        }
        summary["holds"] = summary["failed"] == 0
        if summary["skipped"]:
            logger.warning(f"{summary['skipped']} near-degenerate samples skipped")

        frame = pd.DataFrame(records, columns=list(BDSampleRecord.model_fields))
        files = self._emit_table(frame, config, "Records", summary, {**summary, "records": records})
        first = next((r for r in records if r["status"] == "fail"), None)
        return ExperimentOutcome(
            kind=ExperimentKind.BD, exit_code=EXIT_VIOLATION if first else EXIT_OK,
            summary=summary, output_files=files, first_violation=first,
        )

    def variational(self, config: VariationalConfig) -> ExperimentOutcome:
        if config.model == HamiltonianModel.HUBBARD:
            sites = config.sites
            N = config.N if config.N is not None else sites
            run_config = config.model_copy(update={"setting": (N, 2 * sites)})
            instances = [0]
        else:
            run_config = config if config.setting else config.model_copy(update={"setting": (3, 6)})
            instances = list(range(config.instances))
        constraint = resolve_constraint(run_config)
        logger.info(f"Variational estimates on {len(instances)} {config.model.value} Hamiltonians, "
                    f"facet {constraint.name}")
        rows = _map_ordered(partial(variational_row, run_config, constraint), instances, config.jobs)

        evaluated = [r for r in rows if r["status"] != "skipped"]
        summary = {
            "subcommand": "variational", "model": config.model.value, "constraint": constraint.name,
            "coupling": config.coupling, "seed": config.seed, "instances": len(instances),
            "evaluated": len(evaluated), "skipped_degenerate": len(rows) - len(evaluated),
            "failed": sum(r["status"] == "fail" for r in evaluated),
        }
        if evaluated:
            frame = pd.DataFrame(evaluated)
            summary["slack_eq15"] = frame["slack_eq15"].describe()[["min", "mean", "max"]].to_dict()
            ratios = frame["slack_eq16"].dropna()
            summary["slack_eq16"] = ratios.describe()[["min", "mean", "max"]].to_dict() if len(ratios) else None
            summary["ratio_checks"] = int(len(ratios))
        files = self._emit_table(pd.DataFrame(rows), run_config, "Estimates", summary, {**summary, "rows": rows})
        first = next((r for r in rows if r["status"] == "fail"), None)
        return ExperimentOutcome(
            kind=ExperimentKind.VARIATIONAL, exit_code=EXIT_VIOLATION if first else EXIT_OK,
            summary=summary, output_files=files, first_violation=first,
        )

    def constraint_table(self, config: ConstraintsConfig) -> pd.DataFrame:
        constraints = self._constraint_set(config)
        rows = []
        for c in constraints.constraints:
            D = evaluate(c, config.lambdas)
            saturated = abs(D) < config.tol
            violated = not saturated if c.equality else D < -config.tol
            rows.append({
                "name": c.name, "kappa0": c.kappa0, "kappa": list(c.kappa),
                "equality": c.equality, "D": D, "saturated": saturated, "violated": violated,
            })
        return pd.DataFrame(rows, columns=["name", "kappa0", "kappa", "equality", "D", "saturated", "violated"])

    def _constraint_set(self, config: ConstraintsConfig) -> ConstraintSet:
        spec = config.constraint or default_constraint_name(config)
        path_part, _, member = spec.partition("#")
        if path_part.endswith(".json") or Path(path_part).is_file():
            constraints = load_constraint_file(path_part)
        else:
            constraints = catalog(spec, config.N, config.d, config.qubits)
        if member:
            try:
                chosen = constraints.get(member)
            except KeyError as e:
                raise InvalidSettingError(str(e)) from e
            constraints = constraints.model_copy(update={"constraints": [chosen]})
        return constraints

    def constraints(self, config: ConstraintsConfig) -> ExperimentOutcome:
        frame = self.constraint_table(config)
        summary = {
            "subcommand": "constraints", "lambdas": list(config.lambdas),
            "saturated": frame.loc[frame["saturated"], "name"].tolist(),
            "violated": frame.loc[frame["violated"], "name"].tolist(),
        }
        if config.output_format == "json":
            document = {**summary, "constraints": frame.to_dict(orient="records")}
            path = write_json(document, config.out)
            files = [str(path)] if path else []
        elif config.output_format == "xlsx":
            files = self._emit_table(frame, config, "Constraints", summary)
        else:
            text = frame.to_string(index=False) + "\n"
            files = []
            if config.out is None:
                print(text, end="")
            else:
                Path(config.out).write_text(text, encoding="utf-8")
                files.append(config.out)
        if summary["violated"]:
            logger.warning(f"Occupations violate: {', '.join(summary['violated'])}")
        return ExperimentOutcome(kind=ExperimentKind.CONSTRAINTS, exit_code=EXIT_OK, summary=summary,
                                 output_files=files)

    def run(self, kind: Union[ExperimentKind, str], config: RunConfig) -> ExperimentOutcome:
        handlers = {
            ExperimentKind.SAMPLE: self.sample,
            ExperimentKind.FLOW: self.flow,
            ExperimentKind.BD: self.bd,
            ExperimentKind.VARIATIONAL: self.variational,
            ExperimentKind.CONSTRAINTS: self.constraints,
        }
        return handlers[ExperimentKind(kind)](config)
