"""Diffeomorphic registration of a subject retinotopic map to a template on the disk."""

from typing import List, Optional, Tuple

import numpy as np
from scipy import sparse

from ..lib.errors import ConformalSingularity, DegenerateSourceFace, NoProgress, SolverFailure
from ..lib.logging import get_logger
from ..models.registration import (
    DescentMethod,
    EnergyTerms,
    IterationRecord,
    RegistrationConfig,
    RegistrationResult,
    SmoothConvention,
    StopReason,
)
from ..models.retinotopic_map import RetinotopicMap, TemplateSample
from .beltrami import beltrami_stiffness, clamp_beltrami, compute_beltrami, face_triangles, solve_with_pins
from .mesh_geometry import cotangent_edge_weights, weighted_laplacian
from .mesh_topology import count_flipped
from .sparse_solver import solve_symmetric
from .template_interpolation import TemplateInterpolator

logger = get_logger(__name__)

GAUSS_NEWTON_DAMPING = 1e-8
GAUSS_NEWTON_RTOL = 1e-6
GRADIENT_FLOOR = 1e-14


def data_weights(variance_explained: np.ndarray, r2_threshold: float) -> np.ndarray:
    """w_i = max(R^2_i, 0), zeroed where R^2_i is below the threshold."""
    r2 = np.asarray(variance_explained, dtype=float)
    return np.where(r2 >= r2_threshold, np.maximum(r2, 0.0), 0.0)


class RegistrationProblem:
    """
    Energy, gradient and projection machinery of one subject/template pair.

    The source domain is the subject's disk parameterization; a candidate map
    f assigns every subject vertex a point in the template's disk.
    """

    def __init__(self, subject: RetinotopicMap, template: RetinotopicMap, config: RegistrationConfig):
        self.subject = subject
        self.template = template
        self.config = config
        self.faces = np.asarray(subject.faces)
        self.uv = np.asarray(subject.param.uv)
        self.boundary = np.asarray(subject.param.boundary_ids)
        self.n = subject.vertex_count
        self.interpolator = TemplateInterpolator(template)
        self.weights = data_weights(subject.variance_explained, config.r2_threshold)

        edges, edge_weights = cotangent_edge_weights(self.uv, self.faces)
        self.laplacian = weighted_laplacian(self.n, edges, edge_weights).tocsr()
        self._source_tri = face_triangles(self.uv, self.faces)
        interior = np.ones(self.n, dtype=bool)
        interior[self.boundary] = False
        self._interior = np.flatnonzero(interior)

    def smooth_field(self, f: np.ndarray) -> np.ndarray:
        if self.config.smooth_convention == SmoothConvention.DISPLACEMENT:
            return f - self.uv
        return f

    def sample(self, f: np.ndarray) -> TemplateSample:
        return self.interpolator.interpolate(f)

    def residuals(self, sample: TemplateSample) -> np.ndarray:
        """visual_s(i) - v_T(f_i), zero where the template could not be interpolated."""
        residual = np.asarray(self.subject.visual) - np.asarray(sample.visual)
        return np.where(sample.valid[:, None], residual, 0.0)

    def energy(self, f: np.ndarray, sample: Optional[TemplateSample] = None) -> EnergyTerms:
        """Data, smoothness and total energy of a map."""
        sample = sample if sample is not None else self.sample(f)
        residual = self.residuals(sample)
        data = float(np.sum(self.weights * np.einsum("ij,ij->i", residual, residual)))
        d = self.smooth_field(np.asarray(f, dtype=float))
        dirichlet = float(d[:, 0] @ (self.laplacian @ d[:, 0]) + d[:, 1] @ (self.laplacian @ d[:, 1]))
        smooth = self.config.smoothness_weight * max(dirichlet, 0.0)
        data = max(data, 0.0)
        return EnergyTerms(data_term=data, smooth_term=smooth, total=data + smooth)

    def _data_jacobians(self, sample: TemplateSample) -> np.ndarray:
        jac = np.zeros((self.n, 2, 2))
        valid = np.asarray(sample.valid)
        jac[valid] = self.interpolator.face_jacobians[np.asarray(sample.face_ids)[valid]]
        return jac

    def gradient(self, f: np.ndarray, sample: TemplateSample) -> Tuple[np.ndarray, np.ndarray]:
        """
        Gradient of the total energy.

        Returns:
            Tuple of ((n, 2) gradient, (n, 2, 2) per-vertex template Jacobians)
        """
        residual = self.residuals(sample)
        jac = self._data_jacobians(sample)
        grad = -2.0 * self.weights[:, None] * np.einsum("nij,ni->nj", jac, residual)
        d = self.smooth_field(f)
        grad += 2.0 * self.config.smoothness_weight * np.column_stack(
            [self.laplacian @ d[:, 0], self.laplacian @ d[:, 1]]
        )
        return grad, jac

    def motion_basis(self, f: np.ndarray) -> sparse.csr_matrix:
        """
        Admissible motions in stacked (x..., y...) layout.

        Interior vertices move freely; boundary vertices only along the circle's tangent.
        """
        n = self.n
        interior = self._interior
        k = len(interior)
        rows = [interior, interior + n]
        cols = [np.arange(k), np.arange(k) + k]
        values = [np.ones(k), np.ones(k)]

        positions = f[self.boundary]
        tangent = np.column_stack([-positions[:, 1], positions[:, 0]])
        tangent /= np.linalg.norm(tangent, axis=1)[:, None]
        boundary_cols = 2 * k + np.arange(len(self.boundary))
        rows += [self.boundary, self.boundary + n]
        cols += [boundary_cols, boundary_cols]
        values += [tangent[:, 0], tangent[:, 1]]
        return sparse.coo_matrix(
            (np.concatenate(values), (np.concatenate(rows), np.concatenate(cols))),
            shape=(2 * n, 2 * k + len(self.boundary)),
        ).tocsr()

    def _gauss_newton_matrix(self, jac: np.ndarray) -> sparse.csr_matrix:
        n = self.n
        hessian = 2.0 * self.weights[:, None, None] * np.einsum("nki,nkj->nij", jac, jac)
        idx = np.arange(n)
        data_part = sparse.coo_matrix(
            (
                np.concatenate([hessian[:, 0, 0], hessian[:, 0, 1], hessian[:, 1, 0], hessian[:, 1, 1]]),
                (np.concatenate([idx, idx, idx + n, idx + n]), np.concatenate([idx, idx + n, idx, idx + n])),
            ),
            shape=(2 * n, 2 * n),
        )
        smooth_part = sparse.block_diag(
            (2.0 * self.config.smoothness_weight * self.laplacian,) * 2
        )
        matrix = (data_part + smooth_part).tocsr()
        scale = float(np.mean(np.abs(matrix.diagonal()))) or 1.0
        return (matrix + GAUSS_NEWTON_DAMPING * scale * sparse.identity(2 * n)).tocsr()

    def direction(self, f: np.ndarray, grad: np.ndarray, jac: np.ndarray) -> np.ndarray:
        """Descent direction restricted to admissible motions."""
        basis = self.motion_basis(f)
        stacked_grad = np.concatenate([grad[:, 0], grad[:, 1]])
        reduced_grad = basis.T @ stacked_grad

        if self.config.descent == DescentMethod.GAUSS_NEWTON:
            reduced = (basis.T @ self._gauss_newton_matrix(jac) @ basis).tocsr()
            try:
                step = solve_symmetric(reduced, -reduced_grad, rtol=GAUSS_NEWTON_RTOL, stage="register")
            except SolverFailure as e:
                logger.debug("gauss_newton_fallback", error=e.message)
                step = -reduced_grad
            if float(step @ reduced_grad) >= 0.0:
                step = -reduced_grad
        else:
            step = -reduced_grad

        stacked = basis @ step
        return np.column_stack([stacked[: self.n], stacked[self.n:]])

    def project(self, trial: np.ndarray) -> Optional[np.ndarray]:
        """
        Turn a stepped map into a diffeomorphic one, or None if that fails.

        Boundary vertices return to the circle; the Beltrami coefficient of
        the stepped map is clamped into the disk of radius 1 - epsilon and the
        map is rebuilt from it with the boundary pinned.
        """
        trial = np.array(trial)
        radii = np.linalg.norm(trial[self.boundary], axis=1)
        trial[self.boundary] /= radii[:, None]
        try:
            field = compute_beltrami(self.faces, self.uv, trial)
        except (ConformalSingularity, DegenerateSourceFace):
            return None

        bound = 1.0 - self.config.epsilon
        if field.max_abs <= bound and count_flipped(trial, self.faces) == 0:
            # Reconstruction reproduces maps already inside the constraint
            return trial

        clamped = clamp_beltrami(field, self.config.epsilon)
        stiffness = beltrami_stiffness(self.faces, self._source_tri, clamped.mu, self.n)
        try:
            rebuilt = solve_with_pins(stiffness, self.boundary, trial[self.boundary], stage="register")
        except SolverFailure:
            return None
        if count_flipped(rebuilt, self.faces):
            return None
        return rebuilt

    def mu_max(self, f: np.ndarray) -> float:
        return compute_beltrami(self.faces, self.uv, f).max_abs


def registration_energy(
    subject: RetinotopicMap,
    template: RetinotopicMap,
    f: np.ndarray,
    config: Optional[RegistrationConfig] = None,
) -> EnergyTerms:
    """
    Registration energy of a candidate map.

    Args:
        subject: Subject map (source domain)
        template: Template map
        f: (nv, 2) positions of subject vertices in the template disk
        config: Registration parameters (defaults if omitted)

    Returns:
        EnergyTerms (data_term, smooth_term, total)
    """
    config = config or RegistrationConfig()
    return RegistrationProblem(subject, template, config).energy(np.asarray(f, dtype=float))


def _line_search(
    problem: RegistrationProblem,
    f: np.ndarray,
    direction: np.ndarray,
    current: EnergyTerms,
) -> Optional[Tuple[np.ndarray, EnergyTerms, TemplateSample, float]]:
    config = problem.config
    largest = float(np.max(np.linalg.norm(direction, axis=1)))
    if largest == 0.0:
        return None
    t = min(1.0, config.step_size / largest)
    for halving in range(config.max_halvings + 1):
        candidate = problem.project(f + t * direction)
        if candidate is not None:
            sample = problem.sample(candidate)
            energy = problem.energy(candidate, sample)
            if energy.total < current.total:
                step_length = float(np.max(np.linalg.norm(candidate - f, axis=1)))
                return candidate, energy, sample, step_length
        logger.debug("trial_step_rejected", halving=halving, t=t)
        t *= config.backtracking
    return None


def register(
    subject: RetinotopicMap,
    template: RetinotopicMap,
    config: Optional[RegistrationConfig] = None,
) -> RegistrationResult:
    """
    Register a subject map to a template under the diffeomorphic constraint.

    Each outer iteration takes a descent step with backtracking, projects the
    stepped map through compute/clamp/reconstruct of its Beltrami coefficient
    and accepts it only if the total energy strictly decreases.

    Args:
        subject: Subject map; its disk parameterization is the source domain
        template: Template map
        config: Registration parameters (defaults if omitted)

    Returns:
        RegistrationResult with a flip-free map and the accepted energy trace

    Raises:
        NoProgress: If no trial step is accepted at the first iteration
        SolverFailure: If a linear solve fails outside the line search
    """
    config = config or RegistrationConfig()
    problem = RegistrationProblem(subject, template, config)
    f = np.array(problem.uv)
    sample = problem.sample(f)
    energy = problem.energy(f, sample)
    trace: List[IterationRecord] = [IterationRecord(iteration=0, energy=energy, step_length=0.0, mu_max=0.0)]
    logger.info(
        "registration_started",
        vertices=problem.n,
        energy=energy.total,
        smoothness_weight=config.smoothness_weight,
        descent=config.descent.value,
    )

    stop_reason = StopReason.MAX_ITERATIONS
    if energy.total == 0.0:
        stop_reason = StopReason.ZERO_ENERGY
    else:
        for iteration in range(1, config.max_outer_iterations + 1):
            grad, jac = problem.gradient(f, sample)
            direction = problem.direction(f, grad, jac)
            if float(np.max(np.abs(direction))) <= GRADIENT_FLOOR * max(1.0, energy.total):
                stop_reason = StopReason.STATIONARY
                break

            accepted = _line_search(problem, f, direction, energy)
            if accepted is None:
                if iteration == 1:
                    raise NoProgress(
                        "line search exhausted at the first iteration",
                        energy=energy.total,
                        max_halvings=config.max_halvings,
                    )
                stop_reason = StopReason.STATIONARY
                break

            f, new_energy, sample, step_length = accepted
            decrease = (energy.total - new_energy.total) / energy.total
            energy = new_energy
            trace.append(
                IterationRecord(
                    iteration=iteration,
                    energy=energy,
                    step_length=step_length,
                    mu_max=problem.mu_max(f),
                )
            )
            logger.debug(
                "registration_iteration",
                iteration=iteration,
                energy=energy.total,
                data=energy.data_term,
                smooth=energy.smooth_term,
                step=step_length,
            )
            if energy.total == 0.0 or decrease < config.energy_tolerance:
                stop_reason = StopReason.TOLERANCE
                break

    final_mu_max = problem.mu_max(f) if len(trace) > 1 else 0.0
    result = RegistrationResult(
        f=f,
        energy_trace=trace,
        final_mu_max=final_mu_max,
        converged=stop_reason != StopReason.MAX_ITERATIONS,
        stop_reason=stop_reason,
        f_flip=count_flipped(f, problem.faces),
    )
    logger.info(
        "registration_finished",
        iterations=result.iterations,
        energy=result.final_energy.total,
        stop_reason=stop_reason.value,
        mu_max=final_mu_max,
        f_flip=result.f_flip,
    )
    return result


def apply_registration(subject: RetinotopicMap, template: RetinotopicMap, f: np.ndarray) -> RetinotopicMap:
    """
    Replace subject visual coordinates and pRF sizes with template values at f.

    Vertices where the template cannot be interpolated keep their original
    values and are marked False in ``registration_valid``. Mesh,
    parameterization and variance explained are untouched.
    """
    sample = TemplateInterpolator(template).interpolate(f)
    valid = np.asarray(sample.valid)
    visual = np.where(valid[:, None], sample.visual, subject.visual)
    prf_size = np.where(valid, sample.prf_size, subject.prf_size)
    if not np.all(valid):
        logger.warning("registration_points_kept", count=int(np.count_nonzero(~valid)))
    return subject.replace(visual=visual, prf_size=prf_size, registration_valid=valid)
