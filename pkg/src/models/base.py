"""Base model pattern for immutable, array-carrying domain types."""

from typing import Any, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict


def as_readonly_array(
    value: Any,
    dtype: Any,
    shape: Optional[Tuple[Optional[int], ...]] = None,
    name: str = "array",
) -> np.ndarray:
    """
    Copy ``value`` into a read-only numpy array and check its shape.

    Args:
        value: Array-like input
        dtype: Target dtype
        shape: Expected shape; ``None`` entries match any length
        name: Field name used in error messages

    Returns:
        Read-only array

    Raises:
        ValueError: If the shape does not match
    """
    array = np.array(value, dtype=dtype, copy=True)
    if shape is not None:
        if array.ndim != len(shape) or any(
            expected is not None and actual != expected
            for actual, expected in zip(array.shape, shape)
        ):
            raise ValueError(f"{name} must have shape {shape}, got {array.shape}")
    array.flags.writeable = False
    return array


class ArrayModel(BaseModel):
    """
    Base model for domain types holding numpy arrays.

    Instances are frozen and their arrays are read-only, so every operation
    over them is a pure function and safe to share across threads.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    def replace(self, **changes: Any) -> "ArrayModel":
        """Return a validated copy with some fields replaced."""
        data = {name: getattr(self, name) for name in type(self).model_fields}
        data.update(changes)
        return type(self)(**data)
