"""Catalog and evaluation of (generalized) Pauli constraints"""
import json
import logging
from pathlib import Path
from typing import List, Optional, Sequence, Union

import numpy as np
from pydantic import ValidationError

from marginalflow.errors import (
    ConstraintIntegerError, ConstraintLengthError, ConstraintSchemaError, InvalidSettingError,
    LengthMismatchError, OrderingError,
)
from marginalflow.models.constraints import (
    ConstraintFile, ConstraintSet, LinearConstraint, SpectrumDomain,
)

logger = logging.getLogger(__name__)

ORDER_TOL = 1e-10

BORLAND_DENNIS_NAME = "D"


def check_decreasing(lambdas: Sequence[float], tol: float = ORDER_TOL) -> np.ndarray:
    lambdas = np.asarray(lambdas, dtype=float)
    if lambdas.ndim != 1:
        raise LengthMismatchError(f"expected a vector of occupations, got shape {lambdas.shape}")
    steps = np.diff(lambdas)
    if np.any(steps > tol):
        j = int(np.argmax(steps > tol))
        raise OrderingError(
            f"occupations must be decreasing: lambda[{j + 1}]={lambdas[j]:.6g} < lambda[{j + 2}]={lambdas[j + 1]:.6g}"
        )
    return lambdas


def evaluate(c: LinearConstraint, lambdas: Sequence[float]) -> float:
    """D(lambda) = kappa0 + sum_j kappa_j lambda_j"""
    values = np.asarray(lambdas, dtype=float)
    if values.shape != (c.d,):
        raise LengthMismatchError(f"constraint {c.name!r} expects {c.d} occupations, got {values.shape}")
    if c.domain == SpectrumDomain.ORDERED:
        check_decreasing(values)
    return float(c.kappa0 + np.dot(np.asarray(c.kappa, dtype=float), values))


def evaluate_set(constraints: ConstraintSet, lambdas: Sequence[float]) -> List[float]:
    return [evaluate(c, lambdas) for c in constraints.constraints]


def hf_distance(lambdas: Sequence[float], N: int) -> float:
    """l1 distance of lambda to the Hartree-Fock point (1,...,1,0,...,0)"""
    values = check_decreasing(lambdas)
    return float(np.sum(1.0 - values[:N]) + np.sum(values[N:]))


# CATALOG

def _ordering_constraints(d: int) -> List[LinearConstraint]:
    out = []
    for j in range(d - 1):
        kappa = [0] * d
        kappa[j], kappa[j + 1] = 1, -1
        out.append(LinearConstraint(name=f"order{j + 1}{j + 2}", kappa0=0, kappa=tuple(kappa)))
    last = [0] * d
    last[-1] = 1
    out.append(LinearConstraint(name=f"nonneg{d}", kappa0=0, kappa=tuple(last)))
    return out


def pauli_set(N: int, d: int) -> ConstraintSet:
    """1 - lambda_1 >= 0 and lambda_d >= 0; with the ordering these give 0 <= lambda <= 1"""
    if not 1 <= N <= d:
        raise InvalidSettingError(f"need 1 <= N <= d, got N={N}, d={d}")
    upper = [0] * d
    upper[0] = -1
    lower = [0] * d
    lower[-1] = 1
    return ConstraintSet(
        name="pauli", N=N, d=d,
        constraints=[
            LinearConstraint(name="pauli_upper", kappa0=1, kappa=tuple(upper)),
            LinearConstraint(name="pauli_lower", kappa0=0, kappa=tuple(lower)),
        ],
    )


def borland_dennis_set() -> ConstraintSet:
    """(N, d) = (3, 6): three equalities, the ordering and D = 2 - (l1 + l2 + l4) >= 0"""
    equalities = []
    for i, j in [(0, 5), (1, 4), (2, 3)]:
        kappa = [0] * 6
        kappa[i] = kappa[j] = 1
        equalities.append(
            LinearConstraint(name=f"eq{i + 1}{j + 1}", kappa0=-1, kappa=tuple(kappa), equality=True)
        )
    d_constraint = LinearConstraint(name=BORLAND_DENNIS_NAME, kappa0=2, kappa=(-1, -1, 0, -1, 0, 0))
    return ConstraintSet(
        name="borland-dennis", N=3, d=6,
        constraints=equalities + _ordering_constraints(6) + [d_constraint],
    )


def higuchi_set(n_qubits: int) -> ConstraintSet:
    """D_i = -lambda_i + sum_{j != i} lambda_j over the smaller local eigenvalues"""
    if n_qubits < 2:
        raise InvalidSettingError(f"Higuchi constraints need at least 2 qubits, got {n_qubits}")
    constraints = []
    for i in range(n_qubits):
        kappa = [1] * n_qubits
        kappa[i] = -1
        constraints.append(LinearConstraint(
            name=f"D{i + 1}", kappa0=0, kappa=tuple(kappa), domain=SpectrumDomain.LOCAL_MINOR,
        ))
    return ConstraintSet(name="higuchi", d=n_qubits, qubits=True, constraints=constraints)


def collective_pauli(r: int, s: int, N: int, d: int) -> LinearConstraint:
    """S_{r,s}: r frozen electrons and s inactive orbitals"""
    if not 1 <= N <= d:
        raise InvalidSettingError(f"need 1 <= N <= d, got N={N}, d={d}")
    if not 0 <= r <= N or not 0 <= s <= d - N:
        raise InvalidSettingError(f"need 0 <= r <= {N} and 0 <= s <= {d - N}, got r={r}, s={s}")
    kappa = [0] * d
    for i in range(r):
        kappa[i] = -1
    for j in range(d - s, d):
        kappa[j] = 1
    return LinearConstraint(name=f"S_{r},{s}", kappa0=r, kappa=tuple(kappa))


def trivial_constraint(d: int) -> LinearConstraint:
    """Identically zero; its facet is the whole space"""
    return LinearConstraint(name="trivial", kappa0=0, kappa=(0,) * d)


def catalog(name: str, N: Optional[int] = None, d: Optional[int] = None,
            qubits: Optional[int] = None) -> ConstraintSet:
    """Look up a hard-coded set: pauli, borland-dennis, higuchi, collective:r,s or trivial"""
    key = name.strip().lower()
    if key in ("borland-dennis", "bd"):
        if (N, d) not in ((3, 6), (None, None)) or qubits is not None:
            raise InvalidSettingError("the Borland-Dennis set only exists for N=3, d=6")
        return borland_dennis_set()
    if key == "higuchi" or key.startswith("higuchi:"):
        if qubits is None:
            raise InvalidSettingError("Higuchi constraints need a qubit count (--qubits)")
        return higuchi_set(qubits)
    if N is None or d is None:
        raise InvalidSettingError(f"constraint {name!r} needs a fermionic setting N,d")
    if key == "pauli":
        return pauli_set(N, d)
    if key == "trivial":
        return ConstraintSet(name="trivial", N=N, d=d, constraints=[trivial_constraint(d)])
    if key.startswith("collective:"):
        try:
            r, s = (int(x) for x in key.split(":", 1)[1].split(","))
        except ValueError as e:
            raise InvalidSettingError(f"expected collective:r,s, got {name!r}") from e
        c = collective_pauli(r, s, N, d)
        return ConstraintSet(name=f"collective:{r},{s}", N=N, d=d, constraints=[c])
    raise InvalidSettingError(
        f"unknown constraint {name!r}; known: pauli, borland-dennis, higuchi, collective:r,s, trivial"
    )


def select_constraint(spec: str, N: Optional[int] = None, d: Optional[int] = None,
                      qubits: Optional[int] = None) -> LinearConstraint:
    """Single constraint from 'name', 'higuchi:i', 'path.json' or 'path.json#name'"""
    path_part, _, member = spec.partition("#")
    if path_part.endswith(".json") or Path(path_part).is_file():
        constraints = load_constraint_file(path_part)
        if qubits is not None and (not constraints.qubits or constraints.d != qubits):
            raise ConstraintLengthError(f"{path_part} is not a constraint set for {qubits} qubits")
        if qubits is None and (constraints.N, constraints.d) != (N, d):
            raise ConstraintLengthError(
                f"{path_part} is for N={constraints.N}, d={constraints.d}, run uses N={N}, d={d}"
            )
    else:
        constraints = catalog(spec, N, d, qubits)
        if spec.lower().startswith("higuchi:"):
            member = f"D{spec.split(':', 1)[1]}"
    if member:
        try:
            return constraints.get(member)
        except KeyError as e:
            raise InvalidSettingError(str(e)) from e
    candidates = constraints.nontrivial or constraints.inequalities
    if not candidates:
        raise InvalidSettingError(f"constraint set {constraints.name!r} has no inequality to use")
    return candidates[0]


# CONSTRAINT FILES

def _integral(value, where: str) -> int:
    if isinstance(value, float):
        if not value.is_integer():
            raise ConstraintIntegerError(f"{where} = {value} is not an integer")
        return int(value)
    return value


def load_constraint_file(path: Union[str, Path]) -> ConstraintSet:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConstraintSchemaError(f"cannot read constraint file {path}: {e}") from e
    try:
        raw = ConstraintFile.model_validate_json(text)
    except ValidationError as e:
        raise ConstraintSchemaError(f"{path}: {e.errors()[0]['msg']} at {e.errors()[0]['loc']}") from e

    qubits = raw.qubits is not None
    d = raw.qubits if qubits else raw.d
    if qubits and d < 2:
        raise ConstraintSchemaError(f"{path}: need at least 2 qubits, got {d}")
    if not qubits and not 1 <= raw.N <= raw.d:
        raise ConstraintSchemaError(f"{path}: need 1 <= N <= d, got N={raw.N}, d={raw.d}")

    domain = SpectrumDomain.LOCAL_MINOR if qubits else SpectrumDomain.ORDERED
    constraints = []
    for k, entry in enumerate(raw.constraints):
        name = entry.name or f"c{k + 1}"
        if len(entry.kappa) != d:
            raise ConstraintLengthError(f"{path}: constraint {name!r} has {len(entry.kappa)} coefficients, d={d}")
        kappa = tuple(_integral(v, f"{name}.kappa[{j}]") for j, v in enumerate(entry.kappa))
        constraints.append(LinearConstraint(
            name=name, kappa0=_integral(entry.kappa0, f"{name}.kappa0"), kappa=kappa,
            equality=entry.equality, domain=domain,
        ))
    logger.info(f"Loaded {len(constraints)} constraints from {path}")
    return ConstraintSet(name=raw.name, N=None if qubits else raw.N, d=d, qubits=qubits,
                         constraints=constraints)


def write_constraint_file(constraints: ConstraintSet, path: Union[str, Path]) -> Path:
    path = Path(path)
    document = {"name": constraints.name}
    if constraints.qubits:
        document["qubits"] = constraints.d
    else:
        document["N"] = constraints.N
        document["d"] = constraints.d
    document["constraints"] = [
        {"name": c.name, "kappa0": c.kappa0, "kappa": list(c.kappa), "equality": c.equality}
        for c in constraints.constraints
    ]
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(document, indent=2) + "\n", encoding="utf-8")
    return path
