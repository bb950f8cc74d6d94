import numpy as np
from pydantic import ConfigDict

# Shared model config for value types that carry numpy arrays
ARRAY_MODEL_CONFIG = ConfigDict(arbitrary_types_allowed=True, frozen=True)


def frozen_array(value, dtype) -> np.ndarray:
    """Copy into a read-only array so frozen models stay immutable"""
    array = np.array(value, dtype=dtype, copy=True)
    array.setflags(write=False)
    return array


def to_pairs(amplitudes: np.ndarray) -> list:
    """Complex array -> JSON-friendly [[re, im], ...]"""
    return [[float(z.real), float(z.imag)] for z in np.asarray(amplitudes, dtype=complex)]


def from_pairs(pairs) -> np.ndarray:
    array = np.asarray(pairs, dtype=float)
    if array.ndim != 2 or array.shape[1] != 2:
        raise ValueError("amplitudes must be a list of [re, im] pairs")
    return array[:, 0] + 1j * array[:, 1]
