"""Bit-exact text encoding of float arrays using ``float.hex``."""
from typing import Any, Dict, List

import numpy as np

__all__ = ("encode_array", "decode_array")


def encode_array(array: np.ndarray) -> Dict[str, Any]:
    """Encode an array as ``{"shape": [...], "data": [hex, ...]}`` (row-major)."""
    array = np.asarray(array, dtype=float)
    return {
        "shape": list(array.shape),
        "data": [float(x).hex() for x in array.ravel(order="C")],
    }


def decode_array(obj: Dict[str, Any]) -> np.ndarray:
    """Decode the output of `encode_array`."""
    shape: List[int] = [int(s) for s in obj["shape"]]
    data = np.array([float.fromhex(x) for x in obj["data"]], dtype=float)
    return data.reshape(shape)
