"""Registration configuration, energy terms and result models."""

from enum import Enum
from typing import List

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ..lib.config import (
    DEFAULT_BACKTRACKING,
    DEFAULT_DESCENT,
    DEFAULT_ENERGY_TOLERANCE,
    DEFAULT_EPSILON,
    DEFAULT_MAX_HALVINGS,
    DEFAULT_MAX_OUTER_ITERATIONS,
    DEFAULT_R2_THRESHOLD,
    DEFAULT_SEED,
    DEFAULT_SMOOTH_CONVENTION,
    DEFAULT_SMOOTHNESS_WEIGHT,
    DEFAULT_STEP_SIZE,
)
from .base import ArrayModel, as_readonly_array


class SmoothConvention(str, Enum):
    """Which field the smoothness term penalises."""
    DISPLACEMENT = "displacement"
    ABSOLUTE = "absolute"


class DescentMethod(str, Enum):
    """Search direction of the outer loop."""
    GAUSS_NEWTON = "gauss_newton"
    GRADIENT = "gradient"


class StopReason(str, Enum):
    ZERO_ENERGY = "zero_energy"
    TOLERANCE = "tolerance"
    STATIONARY = "stationary"
    MAX_ITERATIONS = "max_iterations"


class RegistrationConfig(BaseModel):
    """
    Parameters of the registration energy and its minimiser.

    Fields:
        smoothness_weight: lambda_s, weight of the smoothness term
        epsilon: Beltrami clamp margin; max |mu| <= 1 - epsilon after clamping
        max_outer_iterations: Upper bound on accepted iterations
        energy_tolerance: Stop when the relative energy decrease falls below this
        step_size: Largest vertex displacement (disk units) of a trial step
        backtracking: Step shrink factor on rejection
        max_halvings: Rejections allowed per iteration
        r2_threshold: Vertices with R^2 below this get zero data weight
        smooth_convention: Penalise |grad(f - id)|^2 or |grad f|^2
        descent: Gauss-Newton preconditioned or plain gradient direction
        seed: Recorded for provenance; the minimiser itself is deterministic
    """

    model_config = ConfigDict(frozen=True)

    smoothness_weight: float = Field(DEFAULT_SMOOTHNESS_WEIGHT, gt=0)
    epsilon: float = Field(DEFAULT_EPSILON, gt=0, lt=1)
    max_outer_iterations: int = Field(DEFAULT_MAX_OUTER_ITERATIONS, ge=0)
    energy_tolerance: float = Field(DEFAULT_ENERGY_TOLERANCE, gt=0)
    step_size: float = Field(DEFAULT_STEP_SIZE, gt=0)
    backtracking: float = Field(DEFAULT_BACKTRACKING, gt=0, lt=1)
    max_halvings: int = Field(DEFAULT_MAX_HALVINGS, ge=0)
    r2_threshold: float = Field(DEFAULT_R2_THRESHOLD)
    smooth_convention: SmoothConvention = Field(SmoothConvention(DEFAULT_SMOOTH_CONVENTION))
    descent: DescentMethod = Field(DescentMethod(DEFAULT_DESCENT))
    seed: int = Field(DEFAULT_SEED)


class EnergyTerms(BaseModel):
    """Data, smoothness and total energy of one map."""

    model_config = ConfigDict(frozen=True)

    data_term: float = Field(..., ge=0)
    smooth_term: float = Field(..., ge=0)
    total: float = Field(..., ge=0)


class IterationRecord(BaseModel):
    """One accepted iteration of the outer loop."""

    model_config = ConfigDict(frozen=True)

    iteration: int
    energy: EnergyTerms
    step_length: float
    mu_max: float


class RegistrationResult(ArrayModel):
    """
    Outcome of ``register``.

    Fields:
        f: (nv, 2) registered positions in the disk
        energy_trace: Accepted iterations, starting with iteration 0 (identity)
        final_mu_max: max |mu| of f relative to the source parameterization
        converged: True unless the iteration budget ran out
        stop_reason: Why the loop ended
        f_flip: Flipped faces of f (always 0)
    """

    f: np.ndarray = Field(..., description="Registered disk positions (nv, 2)")
    energy_trace: List[IterationRecord] = Field(..., description="Accepted iterations")
    final_mu_max: float = Field(..., ge=0)
    converged: bool
    stop_reason: StopReason
    f_flip: int = Field(0, ge=0)

    @field_validator("f", mode="before")
    @classmethod
    def validate_f(cls, v):
        array = as_readonly_array(v, float, (None, 2), "f")
        if not np.all(np.isfinite(array)):
            raise ValueError("f must be finite")
        return array

    @model_validator(mode="after")
    def validate_trace(self) -> "RegistrationResult":
        if not self.energy_trace:
            raise ValueError("energy trace must contain the initial energy")
        totals = [record.energy.total for record in self.energy_trace]
        if any(later > earlier for earlier, later in zip(totals, totals[1:])):
            raise ValueError("accepted energy trace must be non-increasing")
        return self

    @property
    def iterations(self) -> int:
        return self.energy_trace[-1].iteration

    @property
    def final_energy(self) -> EnergyTerms:
        return self.energy_trace[-1].energy
