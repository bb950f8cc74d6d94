"""Constructive stability proof for N=3 fermions in d=6 orbitals.

Every (3, 6) state is a combination of eight determinants in its natural orbitals. Rotating
orbitals 3 and 4 brings a quasipinned state onto the pinned form
alpha|1,2,3> + nu|1,4,5> + mu|2,4,6> up to a weight bounded by 2D/(1-D).
"""
import logging
from typing import Optional, Sequence

import numpy as np

from marginalflow.config import settings
from marginalflow.core.fock import fock_basis, random_unitary
from marginalflow.core.marginal import require_normalized, state_spectrum
from marginalflow.errors import (
    DegenerateSpectrumError, ExpansionResidualError, InvalidSettingError, QuasipinningRangeError,
)
from marginalflow.models.borland_dennis import (
    CONFIGS, NAMES, BDCoefficients, BDExpansion, OffDiagonalReport, RelaxationReport, RotationReport,
    UnstableBoundReport,
)
from marginalflow.models.fock import FockSetting, StateVector
from marginalflow.models.reports import BoundCheck

logger = logging.getLogger(__name__)

BD_SETTING = FockSetting(N=3, d=6)
RESIDUAL_TOL = 1e-7
EQUALITY_TOL = 1e-8
BOUND_TOL = 1e-9
ROTATION_TOL = 1e-10
MAX_ROTATION_D = 0.25


def _mask(orbitals: Sequence[int]) -> int:
    return sum(1 << i for i in orbitals)


def _config_indices() -> np.ndarray:
    basis = fock_basis(BD_SETTING)
    return np.array([basis.index[_mask(CONFIGS[name])] for name in NAMES], dtype=np.int64)


def expand(state: StateVector, gap_tol: Optional[float] = None) -> BDExpansion:
    """Read the eight coefficients from the state written in its natural orbitals"""
    if (state.setting.N, state.setting.d) != (3, 6):
        raise InvalidSettingError(f"the eight-determinant expansion needs N=3, d=6, got {state.setting}")
    gap_tol = settings.gap_tol if gap_tol is None else gap_tol
    spectrum = state_spectrum(state, gap_tol)
    if spectrum.degenerate:
        raise DegenerateSpectrumError(
            f"natural occupations are degenerate (gap {spectrum.gap:.3e} < {gap_tol:g})", gap=spectrum.gap
        )
    basis = fock_basis(BD_SETTING)
    c = basis.to_reference(np.asarray(state.amplitudes), np.asarray(spectrum.orbitals))
    indices = _config_indices()
    residual = float(1.0 - np.sum(np.abs(c[indices]) ** 2))
    if residual > RESIDUAL_TOL:
        raise ExpansionResidualError(f"weight {residual:.3e} outside the eight allowed determinants")
    lam = spectrum.lambdas
    pair_sums = [lam[0] + lam[5], lam[1] + lam[4], lam[2] + lam[3]]
    if max(abs(s - 1.0) for s in pair_sums) > EQUALITY_TOL:
        raise ExpansionResidualError(f"pair sums {pair_sums} differ from 1")
    coefficients = {name: complex(c[k]) for name, k in zip(NAMES, indices)}
    return BDExpansion(
        **coefficients, natural_orbitals=spectrum.orbitals, lambdas=lam, residual_weight=max(residual, 0.0),
    )


def check_theorem_xizeta(exp: BDExpansion, tol: float = BOUND_TOL) -> BoundCheck:
    """|xi|^2 + |zeta|^2 <= D"""
    w = exp.weights()
    return BoundCheck(name="xi_zeta", lhs=w["xi"] + w["zeta"], rhs=exp.D, tol=tol)


def check_theorem_unstable(exp: BDExpansion, min_gap: Optional[float] = None,
                           tol: float = BOUND_TOL) -> UnstableBoundReport:
    """|beta|^2 + |gamma|^2 + |delta|^2 <= D / (lambda_3 - lambda_4) + 3D"""
    min_gap = settings.gap_tol if min_gap is None else min_gap
    gap34 = float(exp.lambdas[2] - exp.lambdas[3])
    if gap34 <= min_gap:
        raise DegenerateSpectrumError(f"lambda_3 - lambda_4 = {gap34:.3e} is too small", gap=gap34)
    w = exp.weights()
    lhs = w["beta"] + w["gamma"] + w["delta"]
    rhs = exp.D / gap34 + 3 * exp.D
    return UnstableBoundReport(gap34=gap34, check=BoundCheck(name="unstable", lhs=lhs, rhs=rhs, tol=tol))


def check_off_diagonal(exp: BDCoefficients, tol: float = EQUALITY_TOL) -> OffDiagonalReport:
    values = {k: abs(v) for k, v in exp.off_diagonal().items()}
    return OffDiagonalReport(
        values=values, check=BoundCheck(name="off_diagonal", lhs=max(values.values()), rhs=0.0, tol=tol),
    )


def check_relaxation_chain(exp: BDExpansion, tol: float = BOUND_TOL) -> RelaxationReport:
    w = exp.weights()
    D, Q = exp.D, exp.Q
    first = -w["beta"] + w["gamma"] + w["delta"] + 2 * w["xi"] + w["zeta"]
    second = -w["alpha"] + w["nu"] + w["mu"] + 2 * w["zeta"] + w["xi"]
    third = -2 * (w["alpha"] + w["beta"]) + 1 + 2 * (w["xi"] + w["zeta"])
    identity_error = max(abs(D + Q - first), abs(D + Q - second), abs(D + Q - third))
    ab = w["alpha"] + w["beta"]
    checks = [
        BoundCheck(name="D_plus_Q_identity", lhs=identity_error, rhs=0.0, tol=EQUALITY_TOL),
        BoundCheck(name="Q_below_D", lhs=Q, rhs=D, tol=tol),
        BoundCheck(name="alpha_beta_weight", lhs=0.5 + w["xi"] + w["zeta"] - D, rhs=ab, tol=tol),
        BoundCheck(name="alpha_beta_half", lhs=0.5 - D, rhs=ab, tol=tol),
    ]
    return RelaxationReport(D=D, Q=Q, identity_error=identity_error, checks=checks)


def rotation_34(exp: BDCoefficients) -> np.ndarray:
    """U_{3,4}: new orbital 3 = (alpha|3> + beta|4>)/n, new orbital 4 = (-beta*|3> + alpha*|4>)/n"""
    a, b = exp.alpha, exp.beta
    n = np.sqrt(abs(a) ** 2 + abs(b) ** 2)
    W = np.eye(6, dtype=complex)
    W[2, 2], W[3, 2] = a / n, b / n
    W[2, 3], W[3, 3] = -np.conj(b) / n, np.conj(a) / n
    return W


def rotated_coefficients(exp: BDCoefficients) -> BDCoefficients:
    """Coefficients after U_{3,4}, closed form"""
    a, b, g, d, nu, mu, x, z = exp.as_array()
    n = np.sqrt(abs(a) ** 2 + abs(b) ** 2)
    ca, cb = np.conj(a), np.conj(b)
    return BDCoefficients(
        alpha=n, beta=0.0,
        gamma=(ca * g + cb * nu) / n, nu=(a * nu - b * g) / n,
        delta=(ca * d + cb * mu) / n, mu=(a * mu - b * d) / n,
        xi=(ca * x + cb * z) / n, zeta=(a * z - b * x) / n,
    )


def rotate_and_bound(exp: BDExpansion, tol: float = BOUND_TOL) -> RotationReport:
    D = exp.D
    if D >= MAX_ROTATION_D:
        raise QuasipinningRangeError(f"D = {D:.4f} >= 1/4; |alpha|^2 + |beta|^2 is not bounded away from 0")
    if np.min(np.diff(-exp.lambdas)) <= 0:
        raise DegenerateSpectrumError("degenerate natural occupations", gap=float(np.min(np.diff(-exp.lambdas))))
    ab = abs(exp.alpha) ** 2 + abs(exp.beta) ** 2
    if ab <= 0:
        raise QuasipinningRangeError("alpha and beta both vanish")

    W = rotation_34(exp)
    rotated = rotated_coefficients(exp)

    # same rotation through the generic determinant machinery
    basis = fock_basis(BD_SETTING)
    indices = _config_indices()
    c = np.zeros(basis.dim, dtype=complex)
    c[indices] = exp.as_array()
    brute = basis.to_reference(c, W)
    closed_form_error = float(max(
        np.abs(brute[indices] - rotated.as_array()).max(),
        np.abs(np.delete(brute, indices)).max(initial=0.0),
    ))
    beta_tilde = abs(rotated.beta)
    if closed_form_error > ROTATION_TOL or abs(brute[indices[1]]) > ROTATION_TOL:
        raise ExpansionResidualError(
            f"closed-form rotation disagrees with the determinant lift by {closed_form_error:.3e}"
        )

    w = rotated.weights()
    residual = 1.0 - (w["alpha"] + w["nu"] + w["mu"])
    unpinned = w["beta"] + w["gamma"] + w["delta"] + w["xi"] + w["zeta"]
    checks = [
        BoundCheck(name="rotated_unpinned", lhs=unpinned, rhs=D / ab, tol=tol),
        BoundCheck(name="residual_weight", lhs=residual, rhs=2 * D / (1 - D), tol=tol),
        BoundCheck(name="residual_weight_4D", lhs=residual, rhs=4 * D, tol=tol),
    ]
    return RotationReport(
        rotated=rotated, rotation=W, beta_tilde=beta_tilde, closed_form_error=closed_form_error,
        residual_weight=residual, checks=checks,
    )


# STATE CONSTRUCTORS

def pinned_state(weights: Sequence[float], phases: Optional[Sequence[float]] = None,
                 orbitals: Optional[np.ndarray] = None) -> StateVector:
    """sqrt(a)|1,2,3> + sqrt(n)|1,4,5> + sqrt(m)|2,4,6>, optionally in rotated orbitals"""
    a, n, m = (float(x) for x in weights)
    if min(a, n, m) < 0 or abs(a + n + m - 1.0) > 1e-9:
        raise InvalidSettingError(f"pinned weights must be nonnegative and sum to 1, got {weights}")
    phases = np.zeros(3) if phases is None else np.asarray(phases, dtype=float)
    basis = fock_basis(BD_SETTING)
    psi = np.zeros(basis.dim, dtype=complex)
    for weight, phase, name in zip((a, n, m), phases, ("alpha", "nu", "mu")):
        psi[basis.index[_mask(CONFIGS[name])]] = np.sqrt(weight) * np.exp(1j * phase)
    if orbitals is not None:
        psi = basis.rotate(psi, np.asarray(orbitals, dtype=complex))
    return StateVector(setting=BD_SETTING, amplitudes=psi)


def _pinned_weights(rng: np.random.Generator, margin: float) -> np.ndarray:
    """a > n + m and n > m, all separated by at least margin"""
    while True:
        a, n, m = rng.dirichlet((6.0, 2.0, 1.0))
        if a - n - m > margin and n - m > margin and m > margin:
            return np.array([a, n, m])


def random_pinned_state(seed: Optional[int], margin: float = 0.03) -> StateVector:
    """Exactly pinned (D = 0) state with random weights, phases and natural orbitals"""
    rng = np.random.default_rng(seed)
    weights = _pinned_weights(rng, margin)
    return pinned_state(weights, rng.uniform(0, 2 * np.pi, 3), random_unitary(6, rng))


def quasipinned_state(seed: Optional[int], max_D: float = 0.1, scale: float = 0.3, margin: float = 0.03,
                      min_gap: float = 1e-3, max_tries: int = 1000) -> StateVector:
    """Pinned state in random orbitals plus a random tangent kick, kept when D < max_D"""
    rng = np.random.default_rng(seed)
    basis = fock_basis(BD_SETTING)
    for _ in range(max_tries):
        weights = _pinned_weights(rng, margin)
        U = random_unitary(6, rng)
        pinned = pinned_state(weights, rng.uniform(0, 2 * np.pi, 3), U).amplitudes
        kick = rng.normal(size=basis.dim) + 1j * rng.normal(size=basis.dim)
        kick -= np.vdot(pinned, kick) * pinned
        kick /= np.linalg.norm(kick)
        psi = pinned + rng.uniform(0, scale) * kick
        state = StateVector(setting=BD_SETTING, amplitudes=psi / np.linalg.norm(psi))
        spectrum = state_spectrum(state)
        D = 2.0 - spectrum.lambdas[0] - spectrum.lambdas[1] - spectrum.lambdas[3]
        if D < max_D and spectrum.gap > min_gap:
            return state
    raise QuasipinningRangeError(f"no quasipinned state with D < {max_D} after {max_tries} tries")


def borland_dennis_d(state: StateVector) -> float:
    require_normalized(state.amplitudes)
    lam = state_spectrum(state).lambdas
    return float(2.0 - lam[0] - lam[1] - lam[3])
