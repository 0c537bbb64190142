"""Estimador del factor de escala por invariancia del producto escalar.

Durante la rotación alrededor de un eje fijo, el producto escalar entre la
gravedad y la velocidad angular (ambas en el marco del sensor) es constante.
Con la gravedad medida en varias poses estáticas se arma el sistema lineal
X·β = l, se resuelve por mínimos cuadrados y la escala absoluta se recupera
con la velocidad conocida del motor.
"""
from __future__ import annotations

import logging

import numpy as np
import numpy.typing as npt
from scipy import linalg, stats

from config import EstimatorConfig
from gyro_calibration.application.accel_calibration import fit_accel_model, pose_means
from gyro_calibration.domain.entities import (
    MIN_STATIC_POSES,
    AccelModel,
    CalibrationResult,
    CalibrationSession,
    DesignMatrix,
    GyroModel,
    ImuSegment,
    LeastSquaresSolution,
)
from gyro_calibration.domain.exceptions import (
    CalibrationInputError,
    EmptySeriesError,
    GeometryDegenerateError,
    NotStaticError,
    SingularSystemError,
    TooFewPosesError,
    ZeroRateError,
)
from gyro_calibration.domain.sensor_model import accel_apply
from gyro_calibration.domain.vector_math import Vec3, angle_between_deg, as_vec3, series_stats

logger = logging.getLogger(__name__)

ArrayF = npt.NDArray[np.float64]


def estimate_gyro_bias(bias_segment: ImuSegment, config: EstimatorConfig | None = None) -> Vec3:
    """Estima el offset del giróscopo con el IMU en reposo.

    Args:
        bias_segment: Segmento con el motor sin alimentar.
        config: Umbral de reposo; por defecto ``EstimatorConfig()``.

    Returns:
        Media por eje de las lecturas (°/s).

    Raises:
        EmptySeriesError: Si el segmento está vacío.
        NotStaticError: Si la desviación de algún eje supera el umbral de reposo.
    """
    config = config or EstimatorConfig()
    summary = series_stats(bias_segment.gyro)
    gate_variance = config.static_gate_dps**2
    if np.any(summary.variance > gate_variance):
        raise NotStaticError(
            f"Varianza del giróscopo {summary.variance} supera {gate_variance:.3f} (°/s)²"
        )
    logger.debug("Offset del giróscopo en reposo: %s (%d muestras)", summary.mean, summary.count)
    return summary.mean


def mean_rotation_rate(
    rotation_segment: ImuSegment, offset: Vec3, config: EstimatorConfig | None = None
) -> Vec3:
    """Media recortada del giro sin offset en el tramo de rotación."""
    config = config or EstimatorConfig()
    if len(rotation_segment) == 0:
        raise EmptySeriesError("Tramo de rotación vacío")
    corrected = rotation_segment.gyro - offset
    return np.asarray(stats.trim_mean(corrected, config.trim_fraction, axis=0), dtype=np.float64)


def build_design_matrix(a_c: npt.ArrayLike, g_mean: Vec3) -> DesignMatrix:
    """Construye X con fila i = a_c[i] ⊙ Ḡ_m y l = 1.

    Raises:
        TooFewPosesError: Con menos de 3 vectores de gravedad.
    """
    gravity = np.asarray(a_c, dtype=np.float64).reshape(-1, 3)
    if len(gravity) < MIN_STATIC_POSES:
        raise TooFewPosesError(f"Matriz de diseño con {len(gravity)} poses")
    rows = gravity * as_vec3(g_mean)
    return DesignMatrix(rows=rows, rhs=np.ones(len(rows)))


def solve_ls(design: DesignMatrix, config: EstimatorConfig | None = None) -> LeastSquaresSolution:
    """Resuelve min ‖X·β − l‖₂ por factorización QR.

    Raises:
        TooFewPosesError: Con menos de 3 filas.
        SingularSystemError: Si cond(XᵀX) supera el límite configurado.
    """
    config = config or EstimatorConfig()
    x = design.rows
    if len(x) < MIN_STATIC_POSES:
        raise TooFewPosesError(f"Sistema con {len(x)} filas")
    normal = x.T @ x
    condition = float(np.linalg.cond(normal))
    if not np.isfinite(condition) or condition > config.condition_limit:
        raise SingularSystemError(f"cond(XᵀX) = {condition:.3e} supera {config.condition_limit:.1e}")

    q, r = linalg.qr(x, mode="economic")
    beta = linalg.solve_triangular(r, q.T @ design.rhs)
    residual = x @ beta - design.rhs
    residual_rms = float(np.sqrt(np.mean(residual**2)))
    logger.debug("β̂ = %s, cond = %.3e, rms = %.3e", beta, condition, residual_rms)
    return LeastSquaresSolution(beta=beta, residual_rms=residual_rms, condition_number=condition)


def normalize_alpha(beta: Vec3, g_mean: Vec3, speed: float, config: EstimatorConfig | None = None) -> float:
    """Calcula α tal que ‖α·β̂ ⊙ Ḡ_m‖ = n.

    Raises:
        CalibrationInputError: Si la velocidad no es positiva.
        ZeroRateError: Si ‖β̂ ⊙ Ḡ_m‖ < 1e-9.
    """
    config = config or EstimatorConfig()
    if not speed > 0.0:
        raise CalibrationInputError(f"Velocidad del motor no positiva: {speed}")
    rate = float(np.linalg.norm(np.asarray(beta) * np.asarray(g_mean)))
    if rate < config.min_rate_norm:
        raise ZeroRateError(f"‖β̂ ⊙ Ḡ_m‖ = {rate:.3e}")
    return speed / rate


def axis_gravity_angle(g_mean: Vec3, pose_gravity: npt.ArrayLike) -> float:
    """Ángulo medio (grados, en [0°, 90°]) entre el eje medido y la gravedad de cada pose.

    Se promedia por pose porque la gravedad media de poses repartidas
    alrededor del eje coincide con la dirección del propio eje.
    """
    gravity = np.asarray(pose_gravity, dtype=np.float64).reshape(-1, 3)
    angles = [angle_between_deg(g_mean, g, acute=True) for g in gravity]
    return float(np.mean(angles))


def check_geometry(angle_deg: float, config: EstimatorConfig | None = None) -> None:
    """Valida que el eje no sea casi paralelo ni casi perpendicular a la gravedad.

    Raises:
        GeometryDegenerateError: Si el ángulo cae fuera de la ventana configurada.
    """
    config = config or EstimatorConfig()
    if not config.geometry_min_deg <= angle_deg <= config.geometry_max_deg:
        raise GeometryDegenerateError(
            f"Ángulo eje-gravedad {angle_deg:.2f}° fuera de "
            f"[{config.geometry_min_deg:.0f}°, {config.geometry_max_deg:.0f}°]"
        )


def session_geometry_angle(
    session: CalibrationSession,
    accel_model: AccelModel | None = None,
    config: EstimatorConfig | None = None,
) -> float:
    """Ángulo eje-gravedad de una sesión antes de calibrar (diagnóstico de carga)."""
    offset = estimate_gyro_bias(session.bias_segment, config)
    g_mean = mean_rotation_rate(session.rotation_segment, offset, config)
    _require_rotation(g_mean, config or EstimatorConfig())
    gravity = pose_means(session.static_poses)
    if accel_model is not None:
        gravity = accel_apply(accel_model, gravity)
    return axis_gravity_angle(g_mean, gravity)


def _require_rotation(g_mean: Vec3, config: EstimatorConfig) -> None:
    if float(np.linalg.norm(g_mean)) < config.min_rate_norm:
        raise ZeroRateError("El tramo de rotación no muestra giro")


def calibrate(
    session: CalibrationSession,
    accel_model: AccelModel | None = None,
    config: EstimatorConfig | None = None,
) -> CalibrationResult:
    """Ejecuta la calibración completa de una sesión.

    Orden: offset en reposo → media del giro sin offset → compuerta
    geométrica → modelo del acelerómetro → X → β̂ → α → K = α·β̂.

    Args:
        session: Sesión de calibración.
        accel_model: Modelo del acelerómetro ya ajustado; si es None se ajusta
            con las propias poses.
        config: Umbrales del estimador.

    Returns:
        Resultado con modelo, α y diagnósticos.

    Raises:
        GyroCalibrationError: Cualquier fallo de las etapas intermedias.
    """
    config = config or EstimatorConfig()
    offset = estimate_gyro_bias(session.bias_segment, config)
    g_mean = mean_rotation_rate(session.rotation_segment, offset, config)
    _require_rotation(g_mean, config)

    raw_gravity = pose_means(session.static_poses)
    gate_gravity = raw_gravity if accel_model is None else accel_apply(accel_model, raw_gravity)
    check_geometry(axis_gravity_angle(g_mean, gate_gravity), config)

    model = accel_model if accel_model is not None else fit_accel_model(raw_gravity, config)
    gravity = accel_apply(model, raw_gravity)
    angle = axis_gravity_angle(g_mean, gravity)

    design = build_design_matrix(gravity, g_mean)
    solution = solve_ls(design, config)
    beta = solution.beta
    # El signo de L tampoco es observable
    if beta.sum() < 0.0:
        beta = -beta
    alpha = normalize_alpha(beta, g_mean, session.commanded_speed, config)
    scale = alpha * beta
    if np.any(scale <= 0.0):
        raise SingularSystemError(f"Factores de escala no físicos: {scale}")

    result = CalibrationResult(
        gyro=GyroModel(scale=scale, bias=-scale * offset),
        alpha=alpha,
        beta_raw=beta,
        residual_rms=alpha * solution.residual_rms,
        condition_number=solution.condition_number,
        angle_axis_gravity=angle,
        accel=model,
        g_mean=g_mean,
        pose_gravity=gravity,
    )
    logger.info(
        "Calibración a %.1f °/s: K=%s α=%.6g cond=%.3e ángulo=%.1f°",
        session.commanded_speed,
        np.round(scale, 6),
        alpha,
        solution.condition_number,
        angle,
    )
    return result


def dot_products(result: CalibrationResult) -> tuple[ArrayF, ArrayF]:
    """Productos escalares gravedad·giro por pose antes y después de calibrar.

    Returns:
        (antes, después): a_c·Ḡ_m y a_c·(K ⊙ Ḡ_m) para cada pose.
    """
    before = result.pose_gravity @ result.g_mean
    after = result.pose_gravity @ (result.gyro.scale * result.g_mean)
    return before, after
