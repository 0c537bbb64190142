"""Pre-calibración del acelerómetro con la restricción de magnitud ‖a_c‖ = 1 g.

Ajusta un modelo diagonal (escala y, si hay poses suficientes, bias) por
Gauss-Newton sobre el residuo ‖S ⊙ a_m + b‖ − 1 de las medias de cada pose.
"""
from __future__ import annotations

import logging
from typing import Sequence

import numpy as np
import numpy.typing as npt

from config import EstimatorConfig
from gyro_calibration.domain.entities import MIN_STATIC_POSES, AccelModel, ImuSegment
from gyro_calibration.domain.exceptions import DegeneratePosesError, TooFewPosesError
from gyro_calibration.domain.vector_math import series_stats

logger = logging.getLogger(__name__)

ArrayF = npt.NDArray[np.float64]


def pose_means(static_poses: Sequence[ImuSegment]) -> ArrayF:
    """Media del acelerómetro de cada pose, array (n, 3)."""
    return np.array([series_stats(pose.accel).mean for pose in static_poses]).reshape(-1, 3)


def _residual_and_jacobian(
    params: ArrayF, accel: ArrayF, fit_bias: bool
) -> tuple[ArrayF, ArrayF]:
    scale = params[:3]
    bias = params[3:] if fit_bias else np.zeros(3)
    calibrated = scale * accel + bias
    magnitude = np.linalg.norm(calibrated, axis=1)
    residual = magnitude - 1.0
    direction = calibrated / magnitude[:, np.newaxis]
    jac_scale = direction * accel
    if fit_bias:
        return residual, np.hstack([jac_scale, direction])
    return residual, jac_scale


def _is_coplanar(accel: ArrayF, ratio: float) -> bool:
    centered = accel - accel.mean(axis=0)
    singular = np.linalg.svd(centered, compute_uv=False)
    if singular[0] == 0.0:
        return True
    return bool(singular[-1] / singular[0] < ratio)


def _is_degenerate(accel: ArrayF, fit_bias: bool, condition_limit: float) -> bool:
    params = np.concatenate([np.ones(3), np.zeros(3)]) if fit_bias else np.ones(3)
    _, jacobian = _residual_and_jacobian(params, accel, fit_bias)
    condition = np.linalg.cond(jacobian.T @ jacobian)
    logger.debug("Condición de JᵀJ del acelerómetro (bias=%s): %.3e", fit_bias, condition)
    return not np.isfinite(condition) or condition > condition_limit


def fit_accel_model(accel_means: npt.ArrayLike, config: EstimatorConfig | None = None) -> AccelModel:
    """Ajusta el modelo diagonal del acelerómetro a las medias de las poses.

    Con menos de ``accel_min_poses_for_bias`` poses, o con poses coplanares
    (todas alrededor de un único eje de giro), solo se ajusta la escala y el
    bias queda en cero.

    Args:
        accel_means: Medias por pose (n, 3) en g.
        config: Tolerancias; por defecto ``EstimatorConfig()``.

    Returns:
        Modelo ajustado.

    Raises:
        TooFewPosesError: Si hay menos de 3 poses.
        DegeneratePosesError: Si las poses no determinan la escala.
    """
    config = config or EstimatorConfig()
    accel = np.asarray(accel_means, dtype=np.float64).reshape(-1, 3)
    if len(accel) < MIN_STATIC_POSES:
        raise TooFewPosesError(f"Calibración del acelerómetro con {len(accel)} poses")

    fit_bias = len(accel) >= config.accel_min_poses_for_bias
    if fit_bias and (
        _is_coplanar(accel, config.accel_coplanarity_ratio)
        or _is_degenerate(accel, True, config.condition_limit)
    ):
        logger.warning(
            "Poses coplanares o mal condicionadas para estimar bias: se ajusta solo la escala"
        )
        fit_bias = False
    if not fit_bias and _is_degenerate(accel, False, config.condition_limit):
        raise DegeneratePosesError("Las poses del acelerómetro son linealmente dependientes")

    params = np.concatenate([np.ones(3), np.zeros(3)]) if fit_bias else np.ones(3)
    for iteration in range(1, config.accel_max_iterations + 1):
        residual, jacobian = _residual_and_jacobian(params, accel, fit_bias)
        step, *_ = np.linalg.lstsq(jacobian, -residual, rcond=None)
        params = params + step
        step_norm = float(np.linalg.norm(step))
        logger.debug("Gauss-Newton iteración %d, paso %.3e", iteration, step_norm)
        if step_norm < config.accel_tolerance:
            break
    else:
        logger.warning(
            "Gauss-Newton del acelerómetro sin converger en %d iteraciones",
            config.accel_max_iterations,
        )

    scale = params[:3]
    if np.any(scale <= 0.0) or not np.all(np.isfinite(params)):
        raise DegeneratePosesError(f"Escala del acelerómetro no física: {scale}")
    bias = params[3:] if fit_bias else np.zeros(3)
    logger.info("Acelerómetro calibrado: escala=%s bias=%s", np.round(scale, 6), np.round(bias, 6))
    return AccelModel(scale=scale, bias=bias)


def calibrate_accel(
    static_poses: Sequence[ImuSegment], config: EstimatorConfig | None = None
) -> AccelModel:
    """Calibra el acelerómetro a partir de los segmentos de las poses estáticas."""
    if len(static_poses) < MIN_STATIC_POSES:
        raise TooFewPosesError(f"Calibración del acelerómetro con {len(static_poses)} poses")
    return fit_accel_model(pose_means(static_poses), config)
