"""Stabilizing flow d/dt psi = -(1 - |psi><psi|) D-hat_psi psi and checks of its bounds.

The same engine drives fermions (natural orbitals) and qubits (local eigenbases); a FlowSystem
supplies the spectrum, reference basis and product-basis space for the current state.
"""
import logging
from typing import NamedTuple, Optional, Protocol, Union

import numpy as np

from marginalflow.core.constraints import higuchi_set
from marginalflow.core.dhat import DhatOperator, ProductBasisSpace, ZeroProjector
from marginalflow.core.fock import fock_basis
from marginalflow.core.marginal import require_normalized, spectrum_of
from marginalflow.core.qubits import qubit_register
from marginalflow.errors import DegenerateSpectrumError, InvalidSettingError, LengthMismatchError
from marginalflow.models.constraints import LinearConstraint, SpectrumDomain
from marginalflow.models.fock import FockSetting, StateVector
from marginalflow.models.flow import (
    DecayReport, DerivativeReport, FlowParams, FlowTrace, PathBoundReport, SystemKind, TerminationReason,
)
from marginalflow.models.qubits import QubitState
from marginalflow.models.reports import BoundCheck

logger = logging.getLogger(__name__)

DECAY_TOL = 1e-6
DISTANCE_TOL = 1e-6
WEIGHT_TOL = 1e-6
PATH_TOL = 1e-7
MONOTONE_TOL = 1e-9
# D increases smaller than this are rounding noise
INCREASE_NOISE = 1e-13
DT_GROWTH = 1.5


class Spectrum(NamedTuple):
    values: np.ndarray
    basis: np.ndarray
    gap: float


class FlowSystem(Protocol):
    kind: SystemKind
    constraint: LinearConstraint
    space: ProductBasisSpace

    def spectrum(self, psi: np.ndarray) -> Spectrum: ...

    def ordering_consistent(self, previous: np.ndarray, current: np.ndarray) -> bool: ...


class FermionFlowSystem:
    kind = SystemKind.FERMION

    def __init__(self, setting: FockSetting, constraint: LinearConstraint):
        if constraint.domain != SpectrumDomain.ORDERED:
            raise InvalidSettingError(f"constraint {constraint.name!r} does not act on fermionic occupations")
        if constraint.d != setting.d:
            raise LengthMismatchError(f"constraint {constraint.name!r} has {constraint.d} coefficients, d={setting.d}")
        self.setting = setting
        self.constraint = constraint
        self.space = fock_basis(setting)

    def spectrum(self, psi: np.ndarray) -> Spectrum:
        rho = self.space.one_rdm(psi)
        return Spectrum(*spectrum_of((rho + rho.conj().T) / 2))

    def ordering_consistent(self, previous: np.ndarray, current: np.ndarray) -> bool:
        overlaps = np.abs(previous.conj().T @ current)
        return bool(np.all(np.argmax(overlaps, axis=0) == np.arange(overlaps.shape[1])))


class QubitFlowSystem:
    kind = SystemKind.QUBIT

    def __init__(self, n: int, constraint: LinearConstraint):
        if constraint.domain != SpectrumDomain.LOCAL_MINOR or constraint.d != n:
            raise InvalidSettingError(f"constraint {constraint.name!r} is not a {n}-qubit local constraint")
        self.n = n
        self.constraint = constraint
        self.space = qubit_register(n)

    def spectrum(self, psi: np.ndarray) -> Spectrum:
        spectra = self.space.local_spectra(psi)
        return Spectrum(spectra.minor, spectra.bases, spectra.min_gap)

    def ordering_consistent(self, previous: np.ndarray, current: np.ndarray) -> bool:
        overlaps = np.abs(np.einsum("sij,sik->sjk", previous.conj(), current))
        return bool(np.all(np.argmax(overlaps, axis=1) == np.arange(2)[None, :]))


def flow_system(state: Union[StateVector, QubitState], constraint: LinearConstraint) -> FlowSystem:
    if isinstance(state, QubitState):
        return QubitFlowSystem(state.n, constraint)
    return FermionFlowSystem(state.setting, constraint)


class StabilizingFlow:
    """Explicit RK4 with renormalization, step halving on D increase and growth on success"""

    def __init__(self, system: FlowSystem, params: Optional[FlowParams] = None):
        self.system = system
        self.params = params or FlowParams()
        self.kappa = np.asarray(system.constraint.kappa, dtype=float)

    def D(self, spectrum: Spectrum) -> float:
        return float(self.system.constraint.kappa0 + self.kappa @ spectrum.values)

    def dhat(self, spectrum: Spectrum) -> DhatOperator:
        return DhatOperator(self.system.space, self.system.constraint, spectrum.basis)

    def rhs(self, psi: np.ndarray, spectrum: Optional[Spectrum] = None) -> np.ndarray:
        """-(1 - P_psi) D-hat psi with D-hat rebuilt from psi's own spectrum"""
        norm2 = float(np.vdot(psi, psi).real)
        if spectrum is None:
            spectrum = self.system.spectrum(psi / np.sqrt(norm2))
        if spectrum.gap < self.params.gap_tol:
            raise DegenerateSpectrumError(
                f"spectrum gap {spectrum.gap:.3e} below gap_tol={self.params.gap_tol:g}", gap=spectrum.gap
            )
        d_psi = self.system.space.apply_occupation_operator(
            psi, spectrum.basis, self.system.constraint.kappa0, self.kappa
        )
        mean = np.vdot(psi, d_psi) / norm2
        return -(d_psi - mean * psi)

    def step(self, psi: np.ndarray, dt: float, spectrum: Optional[Spectrum] = None) -> np.ndarray:
        k1 = self.rhs(psi, spectrum)
        k2 = self.rhs(psi + 0.5 * dt * k1)
        k3 = self.rhs(psi + 0.5 * dt * k2)
        k4 = self.rhs(psi + dt * k3)
        out = psi + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        return out / np.linalg.norm(out)

    def integrate(self, psi0: np.ndarray) -> FlowTrace:
        require_normalized(psi0)
        params = self.params
        psi = np.asarray(psi0, dtype=complex) / np.linalg.norm(psi0)
        spectrum = self.system.spectrum(psi)
        D = self.D(spectrum)

        times, d_values, variances, distances, gaps = [], [], [], [], []
        snap_times, snap_d, snapshots = [], [], []

        def record(t, psi, spectrum, D, snapshot):
            times.append(t)
            d_values.append(D)
            variances.append(self.dhat(spectrum).variance(psi))
            distances.append(float(np.linalg.norm(psi - psi0)))
            gaps.append(spectrum.gap)
            if snapshot:
                snap_times.append(t)
                snap_d.append(D)
                snapshots.append(psi.copy())

        record(0.0, psi, spectrum, D, True)
        t, dt, steps, rejected = 0.0, params.dt_initial, 0, 0
        reason, message = TerminationReason.T_MAX, None

        if D < params.stop_D:
            reason = TerminationReason.CONVERGED
        elif spectrum.gap < params.gap_tol:
            reason = TerminationReason.DEGENERATE
            message = f"initial spectrum gap {spectrum.gap:.3e} below gap_tol"
        else:
            while t < params.t_max * (1 - 1e-12):
                dt = min(dt, params.t_max - t)
                try:
                    candidate = self.step(psi, dt, spectrum)
                    new_spectrum = self.system.spectrum(candidate)
                except DegenerateSpectrumError as e:
                    if dt / 2 >= params.dt_min:
                        dt /= 2
                        rejected += 1
                        continue
                    reason, message = TerminationReason.DEGENERATE, str(e)
                    break
                new_D = self.D(new_spectrum)
                if new_D > D + INCREASE_NOISE and dt / 2 >= params.dt_min:
                    logger.debug(f"D increased at t={t:.4f} ({D:.3e} -> {new_D:.3e}), halving dt={dt:.3e}")
                    dt /= 2
                    rejected += 1
                    continue
                if new_D > D + MONOTONE_TOL:
                    # the trace stays non-increasing; the run ends before t_max
                    message = (f"D still increases at dt_min={params.dt_min:g} "
                               f"(t={t:.4f}, {D:.3e} -> {new_D:.3e}); stopped early")
                    logger.warning(f"Flow stalled: {message}")
                    rejected += 1
                    break
                if new_spectrum.gap < params.gap_tol:
                    reason = TerminationReason.DEGENERATE
                    message = f"spectrum gap {new_spectrum.gap:.3e} below gap_tol at t={t + dt:.4f}"
                    break
                if (min(spectrum.gap, new_spectrum.gap) < params.crossing_window
                        and not self.system.ordering_consistent(spectrum.basis, new_spectrum.basis)):
                    reason = TerminationReason.DEGENERATE
                    message = f"eigenvalue ordering and orbital overlaps disagree at t={t + dt:.4f}"
                    break

                psi, spectrum, D = candidate, new_spectrum, new_D
                t += dt
                steps += 1
                done = D < params.stop_D
                record(t, psi, spectrum, D, done or steps % params.snapshot_stride == 0)
                if done:
                    reason = TerminationReason.CONVERGED
                    break
                dt = min(dt * DT_GROWTH, params.dt_max)

        if snap_times[-1] != times[-1]:
            snap_times.append(times[-1])
            snap_d.append(d_values[-1])
            snapshots.append(psi.copy())
        if reason == TerminationReason.DEGENERATE:
            logger.warning(f"Flow stopped on degeneracy: {message}")
        logger.debug(f"Flow finished: {reason.value} after {steps} steps, t={t:.4f}, D={D:.3e}")

        return FlowTrace(
            kind=self.system.kind, constraint=self.system.constraint,
            times=times, D_values=d_values, variances=variances, distances=distances, min_gaps=gaps,
            snapshot_times=snap_times, snapshot_D=snap_d, snapshots=np.array(snapshots),
            terminal_state=psi, termination_reason=reason, rejected_steps=rejected, message=message,
        )


# OPERATIONS

def flow_rhs(state: Union[StateVector, QubitState], constraint: LinearConstraint,
             gap_tol: Optional[float] = None) -> np.ndarray:
    require_normalized(state.amplitudes)
    params = FlowParams() if gap_tol is None else FlowParams(gap_tol=gap_tol)
    return StabilizingFlow(flow_system(state, constraint), params).rhs(np.asarray(state.amplitudes))


def integrate(state0: Union[StateVector, QubitState], constraint: LinearConstraint,
              params: Optional[FlowParams] = None) -> FlowTrace:
    return StabilizingFlow(flow_system(state0, constraint), params).integrate(np.asarray(state0.amplitudes))


def qubit_flow(state: QubitState, i: int, params: Optional[FlowParams] = None) -> FlowTrace:
    """Flow under Higuchi D_i (0-based site i)"""
    if not 0 <= i < state.n:
        raise IndexError(f"site {i} out of range for {state.n} qubits")
    return integrate(state, higuchi_set(state.n).constraints[i], params)


def verify_derivative_identity(state: Union[StateVector, QubitState], constraint: LinearConstraint,
                               h: float = 1e-4, gap_tol: Optional[float] = None) -> DerivativeReport:
    """Central difference of D along the flow against -2 Var"""
    require_normalized(state.amplitudes)
    params = FlowParams() if gap_tol is None else FlowParams(gap_tol=gap_tol)
    flow = StabilizingFlow(flow_system(state, constraint), params)
    psi = np.asarray(state.amplitudes, dtype=complex)
    spectrum = flow.system.spectrum(psi)
    if spectrum.gap < params.gap_tol:
        raise DegenerateSpectrumError(
            f"derivative identity needs a nondegenerate spectrum (gap {spectrum.gap:.3e})", gap=spectrum.gap
        )
    forward = flow.D(flow.system.spectrum(flow.step(psi, h, spectrum)))
    backward = flow.D(flow.system.spectrum(flow.step(psi, -h, spectrum)))
    fd = (forward - backward) / (2 * h)
    var = flow.dhat(spectrum).variance(psi)
    absolute = abs(fd + 2 * var)
    relative = absolute / max(var, 1e-12)
    tolerance = max(1e-6, 10 * h * h)
    return DerivativeReport(
        finite_difference=fd, minus_two_variance=-2 * var, variance=var, step=h,
        relative_error=relative, absolute_error=absolute, tolerance=tolerance,
        holds=bool(relative <= tolerance or absolute <= 1e-10),
    )


def verify_path_bound(trace: FlowTrace, tol: float = PATH_TOL) -> PathBoundReport:
    """||psi(t2) - psi(t1)|| <= sqrt(2 D(t1)) - sqrt(2 D(t2)) over all snapshot pairs t1 < t2"""
    states = trace.snapshots
    count = len(states)
    if count < 2:
        return PathBoundReport(pairs_checked=0, holds=True)
    gram = states.conj() @ states.T
    norms = np.real(np.diag(gram))
    dist = np.sqrt(np.maximum(norms[:, None] + norms[None, :] - 2 * gram.real, 0.0))
    root = np.sqrt(2 * np.maximum(trace.snapshot_D, 0.0))
    bound = root[:, None] - root[None, :]
    i, j = np.triu_indices(count, k=1)
    excess = dist[i, j] - bound[i, j]
    worst = int(np.argmax(excess))
    a, b = int(i[worst]), int(j[worst])
    check = BoundCheck(name="path_bound", lhs=float(dist[a, b]), rhs=float(bound[a, b]), tol=tol)
    return PathBoundReport(
        pairs_checked=len(i), worst=check,
        worst_pair=(float(trace.snapshot_times[a]), float(trace.snapshot_times[b])),
        holds=bool(np.all(excess <= tol)),
    )


def verify_decay(trace: FlowTrace, tol: float = DECAY_TOL) -> DecayReport:
    """D(t) <= D(0) exp(-t) at every recorded time, plus monotonicity"""
    D0 = trace.D0
    envelope = D0 * np.exp(-trace.times)
    k = int(np.argmax(trace.D_values - envelope))
    worst = BoundCheck(name="decay", lhs=float(trace.D_values[k]), rhs=float(envelope[k]), tol=tol)
    increase = float(np.max(np.diff(trace.D_values), initial=0.0))
    monotone = BoundCheck(name="monotone", lhs=increase, rhs=0.0, tol=MONOTONE_TOL)
    return DecayReport(applicable=D0 <= 0.5, worst=worst, monotone=monotone)


def verify_distance_bound(trace: FlowTrace, tol: float = DISTANCE_TOL) -> BoundCheck:
    """||psi_inf - psi_0|| <= sqrt(2 D(0))"""
    return BoundCheck(
        name="distance", lhs=float(trace.distances[-1]), rhs=float(np.sqrt(2 * max(trace.D0, 0.0))), tol=tol,
    )


def terminal_weight(state0: Union[StateVector, QubitState], trace: FlowTrace,
                    tol: float = WEIGHT_TOL) -> BoundCheck:
    """1 - ||P_D psi_0||^2 <= 2 D(0) with the projector built from the spectrum of psi_inf"""
    system = flow_system(state0, trace.constraint)
    spectrum = system.spectrum(trace.terminal_state)
    projector = ZeroProjector(DhatOperator(system.space, trace.constraint, spectrum.basis))
    outside = 1.0 - projector.weight(np.asarray(state0.amplitudes))
    return BoundCheck(name="weight_outside", lhs=outside, rhs=2 * trace.D0, tol=tol)
