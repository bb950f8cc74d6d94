"""Parsers for command-line and request inputs; every failure is an InputError"""
import json
from pathlib import Path
from typing import List, Optional, Tuple, Union

import numpy as np

from marginalflow.core.constraints import check_decreasing
from marginalflow.errors import InputError, InvalidSettingError, LengthMismatchError
from marginalflow.models.arrays import from_pairs


def parse_setting(text: str) -> Tuple[int, int]:
    """'3,6' -> (3, 6)"""
    try:
        N, d = (int(part) for part in text.split(","))
    except ValueError as e:
        raise InvalidSettingError(f"expected N,d (e.g. 3,6), got {text!r}") from e
    if not 1 <= N <= d:
        raise InvalidSettingError(f"need 1 <= N <= d, got N={N}, d={d}")
    return N, d


def parse_floats(text: str, what: str = "values") -> List[float]:
    parts = [p for p in text.replace(",", " ").split() if p]
    try:
        values = [float(p) for p in parts]
    except ValueError as e:
        raise InputError(f"{what} must be numbers, got {text!r}") from e
    if not values:
        raise InputError(f"no {what} given")
    if not np.all(np.isfinite(values)):
        raise InputError(f"{what} must be finite, got {text!r}")
    return values


def parse_lambdas(text: str, d: Optional[int] = None) -> List[float]:
    """Comma- or space-separated decreasing occupations"""
    values = parse_floats(text, "occupations")
    if d is not None and len(values) != d:
        raise LengthMismatchError(f"expected {d} occupations, got {len(values)}")
    check_decreasing(values)
    return values


def load_lambdas_file(path: Union[str, Path], d: Optional[int] = None, ordered: bool = True) -> List[float]:
    """JSON array or plain text list of occupations; ordered=False for local qubit eigenvalues"""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8").strip()
    except OSError as e:
        raise InputError(f"cannot read occupations file {path}: {e}") from e
    if text.startswith("["):
        try:
            text = " ".join(str(float(v)) for v in json.loads(text))
        except (ValueError, TypeError) as e:
            raise InputError(f"{path} is not a JSON array of numbers") from e
    if ordered:
        return parse_lambdas(text, d)
    values = parse_floats(text, "local eigenvalues")
    if d is not None and len(values) != d:
        raise LengthMismatchError(f"expected {d} values, got {len(values)}")
    return values


def load_amplitudes_file(path: Union[str, Path]) -> List[List[float]]:
    """JSON array of [re, im] pairs, or an object holding one under 'amplitudes'"""
    path = Path(path)
    try:
        document = json.loads(path.read_text(encoding="utf-8"))
    except OSError as e:
        raise InputError(f"cannot read amplitudes file {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise InputError(f"{path} is not valid JSON: {e.msg}") from e
    if isinstance(document, dict):
        document = document.get("amplitudes")
    try:
        amplitudes = from_pairs(document)
    except (ValueError, TypeError) as e:
        raise InputError(f"{path}: amplitudes must be a list of [re, im] pairs") from e
    if not np.all(np.isfinite(amplitudes)):
        raise InputError(f"{path}: amplitudes must be finite")
    return [[float(z.real), float(z.imag)] for z in amplitudes]


def parse_pinned(text: str) -> Tuple[float, float, float]:
    """'a,n,m' weights of the three pinned determinants"""
    values = parse_floats(text, "pinned weights")
    if len(values) != 3:
        raise InputError(f"expected three pinned weights a,n,m, got {len(values)}")
    if min(values) < 0 or abs(sum(values) - 1.0) > 1e-9:
        raise InputError(f"pinned weights must be nonnegative and sum to 1, got {values}")
    return tuple(values)


def check_qubits(n: int) -> int:
    if n < 2:
        raise InvalidSettingError(f"need at least 2 qubits, got {n}")
    return n
