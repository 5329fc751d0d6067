"""Evaluation runner: paired raw/registered comparison of retinotopic maps."""

from typing import List, Optional, Tuple

import numpy as np

from ..lib.config import DEFAULT_DV_WEIGHTING, DEFAULT_R2_THRESHOLD
from ..lib.errors import EmptyVertexSet, FlipCountMismatch
from ..lib.logging import get_logger
from ..models.eval_report import EvalReport, EvalRow, VertexDetail
from ..models.prf import BoldSeries, FitMetrics, HRFParams, Stimulus
from ..models.registration import RegistrationResult
from ..models.retinotopic_map import RetinotopicMap
from .mesh_topology import count_flipped
from .prf_model import canonical_hrf, fit_series, predict_bold_batch
from .template_interpolation import TemplateInterpolator

logger = get_logger(__name__)

DV_WEIGHTINGS = ("none", "r2")
STRUCTURAL_LABEL = "structural"
REGISTERED_LABEL = "drrm"


def _check_weighting(weighting: str) -> None:
    if weighting not in DV_WEIGHTINGS:
        raise ValueError(f"dv weighting must be one of {DV_WEIGHTINGS}, got '{weighting}'")


def _weighted_mean(values: np.ndarray, weights: Optional[np.ndarray]) -> float:
    if weights is None:
        return float(np.mean(values))
    total = float(np.sum(weights))
    if total <= 0.0:
        return float(np.mean(values))
    return float(np.sum(values * weights) / total)


def visual_coordinate_change(
    subject: RetinotopicMap,
    template: RetinotopicMap,
    f: np.ndarray,
    r2_threshold: float = DEFAULT_R2_THRESHOLD,
    weighting: str = DEFAULT_DV_WEIGHTING,
    mask: Optional[np.ndarray] = None,
) -> float:
    """
    Mean visual distance |visual_s(i) - v_T(f_i)| in degrees.

    Included vertices have R^2 >= ``r2_threshold`` and a valid template
    interpolation at f_i; ``mask`` restricts the set further.

    Args:
        subject: Subject map
        template: Template map
        f: (nv, 2) subject vertex positions in the template disk
        r2_threshold: Variance-explained cutoff
        weighting: "none" for a plain mean, "r2" to weight by R^2
        mask: Optional extra inclusion mask

    Raises:
        EmptyVertexSet: If no vertex is included
    """
    _check_weighting(weighting)
    sample = TemplateInterpolator(template).interpolate(f)
    included = (np.asarray(subject.variance_explained) >= r2_threshold) & np.asarray(sample.valid)
    if mask is not None:
        included &= np.asarray(mask, dtype=bool)
    if not np.any(included):
        raise EmptyVertexSet("no vertex passes the R^2 threshold with a valid template value")
    distance = np.linalg.norm(np.asarray(subject.visual)[included] - sample.visual[included], axis=1)
    weights = np.clip(subject.variance_explained[included], 0.0, None) if weighting == "r2" else None
    return _weighted_mean(distance, weights)


class EvaluationRunner:
    """
    Evaluates registrations against a template with a fixed stimulus and HRF.

    The structural row uses the identity correspondence on the disk and the
    registered row the map f; both share one vertex set so their columns are
    paired.
    """

    def __init__(
        self,
        template: RetinotopicMap,
        stimulus: Stimulus,
        hrf: Optional[HRFParams] = None,
        r2_threshold: float = DEFAULT_R2_THRESHOLD,
        dv_weighting: str = DEFAULT_DV_WEIGHTING,
    ):
        """
        Initialize evaluation runner.

        Args:
            template: Template map
            stimulus: Stimulus the observed BOLD series were recorded with
            hrf: HRF parameters (canonical defaults if omitted)
            r2_threshold: Variance-explained cutoff for the vertex set
            dv_weighting: "none" or "r2"
        """
        _check_weighting(dv_weighting)
        self.template = template
        self.stimulus = stimulus
        self.hrf = hrf or HRFParams()
        self.r2_threshold = r2_threshold
        self.dv_weighting = dv_weighting
        self.interpolator = TemplateInterpolator(template)
        self.kernel = canonical_hrf(self.hrf, stimulus.tr)

    def _fit(
        self,
        observed: BoldSeries,
        visual: np.ndarray,
        prf_size: np.ndarray,
        usable: np.ndarray,
    ) -> FitMetrics:
        # Vertices that cannot be predicted get a flat prediction, which fit_series marks invalid
        rows = np.asarray(observed.vertex_ids)
        predicted = np.zeros(observed.samples.shape)
        ok = usable[rows]
        if np.any(ok):
            predicted[ok] = predict_bold_batch(self.stimulus, visual[rows[ok]], prf_size[rows[ok]], self.kernel)
        return fit_series(observed, predicted)

    def _mapped(self, subject: RetinotopicMap, f: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        sample = self.interpolator.interpolate(f)
        valid = np.asarray(sample.valid)
        visual = np.where(valid[:, None], sample.visual, subject.visual)
        prf_size = np.where(valid, sample.prf_size, subject.prf_size)
        return visual, prf_size, valid

    def evaluate(
        self,
        subject: RetinotopicMap,
        registration: RegistrationResult,
        observed: BoldSeries,
        include_detail: bool = False,
    ) -> EvalReport:
        """
        Fill the structural and registered rows for one subject.

        Args:
            subject: Subject map with its own pRF estimates
            registration: Output of ``register``
            observed: Observed BOLD series, one row per vertex id
            include_detail: Also return the per-vertex table

        Returns:
            EvalReport with rows "structural" and "drrm"

        Raises:
            EmptyVertexSet: If the paired vertex set is empty
            FlipCountMismatch: If the recorded f_flip disagrees with the map
        """
        n = subject.vertex_count
        if registration.f.shape[0] != n:
            raise ValueError(f"registration has {registration.f.shape[0]} vertices, subject has {n}")
        if observed.length != self.stimulus.frame_count:
            raise ValueError(
                f"observed series have {observed.length} samples, stimulus has {self.stimulus.frame_count} frames"
            )
        faces = np.asarray(subject.faces)
        identity = np.asarray(subject.param.uv)
        f = np.asarray(registration.f)
        maps = {
            STRUCTURAL_LABEL: (identity,) + self._mapped(subject, identity),
            REGISTERED_LABEL: (f,) + self._mapped(subject, f),
        }

        raw_visual = np.asarray(subject.visual)
        raw_size = np.asarray(subject.prf_size)
        sized = np.isfinite(raw_size) & (raw_size > 0)
        for _, visual, size, valid in maps.values():
            sized &= valid & np.isfinite(size) & (size > 0)

        observed_mask = np.zeros(n, dtype=bool)
        observed_mask[np.asarray(observed.vertex_ids)] = True
        candidates = (np.asarray(subject.variance_explained) >= self.r2_threshold) & sized & observed_mask

        raw_fit = self._fit(observed, raw_visual, raw_size, candidates)
        fits = {label: self._fit(observed, visual, size, candidates) for label, (_, visual, size, _) in maps.items()}

        fit_valid = np.zeros(n, dtype=bool)
        rows = np.asarray(observed.vertex_ids)
        fit_valid[rows] = np.asarray(raw_fit.valid)
        for metrics in fits.values():
            fit_valid[rows] &= np.asarray(metrics.valid)
        included = candidates & fit_valid
        if not np.any(included):
            raise EmptyVertexSet("paired vertex set is empty")

        row_of = np.full(n, -1, dtype=np.int64)
        row_of[rows] = np.arange(len(rows))
        selected_rows = row_of[included]
        weights = np.clip(subject.variance_explained[included], 0.0, None) if self.dv_weighting == "r2" else None

        report_rows: List[EvalRow] = []
        detail: List[VertexDetail] = []
        for label, (positions, visual, _, _) in maps.items():
            distance = np.linalg.norm(raw_visual[included] - visual[included], axis=1)
            metrics = fits[label]
            report_rows.append(
                EvalRow(
                    method_label=label,
                    hemisphere=subject.hemisphere.value if subject.hemisphere else "",
                    prf_tool=subject.prf_tool.value,
                    d_v=_weighted_mean(distance, weights),
                    f_flip=count_flipped(positions, faces),
                    rmse_raw=float(np.mean(raw_fit.rmse[selected_rows])),
                    rmse_reg=float(np.mean(metrics.rmse[selected_rows])),
                    pc_raw=float(np.mean(raw_fit.pearson[selected_rows])),
                    pc_reg=float(np.mean(metrics.pearson[selected_rows])),
                    aic_raw=float(np.mean(raw_fit.aic[selected_rows])),
                    aic_reg=float(np.mean(metrics.aic[selected_rows])),
                    n_vertices=int(np.count_nonzero(included)),
                )
            )
            if include_detail:
                detail.extend(
                    VertexDetail(
                        method_label=label,
                        vertex=int(vertex),
                        dv=float(dv),
                        rmse_raw=float(raw_fit.rmse[row]),
                        rmse_reg=float(metrics.rmse[row]),
                        pc_raw=float(raw_fit.pearson[row]),
                        pc_reg=float(metrics.pearson[row]),
                        aic_raw=float(raw_fit.aic[row]),
                        aic_reg=float(metrics.aic[row]),
                        rss_raw=float(raw_fit.rss[row]),
                        rss_reg=float(metrics.rss[row]),
                    )
                    for vertex, dv, row in zip(np.flatnonzero(included), distance, selected_rows)
                )

        registered = report_rows[-1]
        if registered.f_flip != registration.f_flip:
            raise FlipCountMismatch(
                f"registration records f_flip={registration.f_flip} but its map flips {registered.f_flip} faces"
            )
        logger.info(
            "evaluation_complete",
            vertices=registered.n_vertices,
            d_v_structural=report_rows[0].d_v,
            d_v_registered=registered.d_v,
            rmse_raw=registered.rmse_raw,
            rmse_reg=registered.rmse_reg,
            f_flip=registered.f_flip,
        )
        return EvalReport(
            rows=report_rows,
            detail=detail,
            included_vertices=np.flatnonzero(included).tolist(),
        )


def create_evaluation_runner(
    template: RetinotopicMap,
    stimulus: Stimulus,
    hrf: Optional[HRFParams] = None,
    r2_threshold: float = DEFAULT_R2_THRESHOLD,
    dv_weighting: str = DEFAULT_DV_WEIGHTING,
) -> EvaluationRunner:
    """
    Create an evaluation runner instance.

    Returns:
        EvaluationRunner instance
    """
    return EvaluationRunner(template, stimulus, hrf, r2_threshold, dv_weighting)


def evaluate_run(
    subject: RetinotopicMap,
    template: RetinotopicMap,
    registration: RegistrationResult,
    stimulus: Stimulus,
    observed: BoldSeries,
    r2_threshold: float = DEFAULT_R2_THRESHOLD,
    dv_weighting: str = DEFAULT_DV_WEIGHTING,
    include_detail: bool = False,
) -> EvalReport:
    """Evaluate one registration; see ``EvaluationRunner.evaluate``."""
    runner = create_evaluation_runner(template, stimulus, r2_threshold=r2_threshold, dv_weighting=dv_weighting)
    return runner.evaluate(subject, registration, observed, include_detail)
