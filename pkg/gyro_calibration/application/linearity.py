"""Barrido de velocidades y evaluación de la linealidad del factor de escala.

Cada punto de velocidad se calibra de forma independiente a partir de las
sesiones que entrega un ``SessionSource`` (simulador o logs grabados). Por
debajo del umbral de baja velocidad la calibración se repite y se promedia.
"""
from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass, field
from typing import Any, Optional, Protocol, Sequence

import numpy as np
import numpy.typing as npt

from config import EstimatorConfig, LinearityConfig, SimulationConfig
from gyro_calibration.application.estimator import calibrate
from gyro_calibration.application.simulation.scenario import draw_scenario, simulate_session
from gyro_calibration.domain.entities import (
    AccelModel,
    CalibrationResult,
    CalibrationSession,
    GyroModel,
    ScenarioConfig,
)
from gyro_calibration.domain.exceptions import GyroCalibrationError, ScenarioConfigError, TooFewPointsError
from gyro_calibration.domain.vector_math import Vec3

logger = logging.getLogger(__name__)

ArrayF = npt.NDArray[np.float64]
AXES = ("x", "y", "z")


def reconstruct_speed(model: GyroModel, g_mean: Vec3) -> float:
    """Velocidad reconstruida ‖K ⊙ Ḡ_m‖ en °/s (Ḡ_m ya sin offset)."""
    return float(np.linalg.norm(model.scale * np.asarray(g_mean, dtype=np.float64)))


# =============================================================================
# FUENTES DE SESIONES
# =============================================================================


@dataclass(frozen=True, eq=False)
class SourcedSession:
    """Sesión lista para calibrar, con su verdad terreno si se conoce."""

    session: CalibrationSession
    true_scale: Optional[Vec3] = None
    accel_model: Optional[AccelModel] = None


class SessionSource(Protocol):
    """Proveedor de sesiones para cada punto del barrido."""

    def sessions_for(self, index: int, speed: float, repeats: int) -> Sequence[SourcedSession]:
        """Devuelve las sesiones del punto ``index`` a ``speed`` °/s."""
        ...


class SimulatedSource:
    """Sesiones simuladas con una única instalación (eje y postura compartidos).

    Con ``redraw_scale`` cada punto sortea su propio K y bias; si no, todos los
    puntos usan el modelo del escenario base.
    """

    def __init__(
        self,
        base: ScenarioConfig,
        redraw_scale: bool = True,
        simulation_config: SimulationConfig | None = None,
    ) -> None:
        self.base = base
        self.redraw_scale = redraw_scale
        self.simulation_config = simulation_config

    def scenario_for(self, index: int, speed: float, repeat: int) -> ScenarioConfig:
        point = np.random.SeedSequence([self.base.seed, index])
        point_seed = int(point.generate_state(1, np.uint64)[0])
        repeat_seed = int(point.spawn(repeat + 1)[repeat].generate_state(1, np.uint64)[0])
        gyro = self.base.true_gyro
        if self.redraw_scale:
            gyro = draw_scenario(point_seed, config=self.simulation_config).true_gyro
        return dataclasses.replace(self.base, true_gyro=gyro, speed=float(speed), seed=repeat_seed)

    def sessions_for(self, index: int, speed: float, repeats: int) -> list[SourcedSession]:
        sessions = []
        for repeat in range(repeats):
            cfg = self.scenario_for(index, speed, repeat)
            sim = simulate_session(cfg, self.simulation_config)
            sessions.append(SourcedSession(session=sim.session, true_scale=cfg.true_gyro.scale))
        return sessions


# =============================================================================
# BARRIDO
# =============================================================================


@dataclass(frozen=True)
class SweepConfig:
    """Puntos de velocidad y fuente de sesiones del barrido.

    Attributes:
        speeds: Velocidades en °/s, estrictamente crecientes y positivas.
        source: Proveedor de sesiones por punto.
        linearity: Umbral y número de repeticiones a baja velocidad.
    """

    speeds: tuple[float, ...]
    source: SessionSource
    linearity: LinearityConfig = field(default_factory=LinearityConfig)

    def __post_init__(self) -> None:
        speeds = tuple(float(s) for s in self.speeds)
        object.__setattr__(self, "speeds", speeds)
        if not speeds:
            raise ScenarioConfigError("speeds", "lista vacía")
        if any(not np.isfinite(s) or s <= 0.0 for s in speeds):
            raise ScenarioConfigError("speeds", "todas las velocidades deben ser positivas")
        if any(b <= a for a, b in zip(speeds, speeds[1:])):
            raise ScenarioConfigError("speeds", "las velocidades deben ser estrictamente crecientes")

    def repeats_for(self, speed: float) -> int:
        if speed < self.linearity.low_speed_threshold_dps:
            return max(1, self.linearity.low_speed_repeats)
        return 1


@dataclass(frozen=True, eq=False)
class SweepPoint:
    """Resultado de un punto de velocidad.

    Attributes:
        speed: Velocidad comandada en °/s.
        status: "ok" o el nombre de la excepción si fallaron todas las repeticiones.
        repeats: Repeticiones intentadas.
        failures: Repeticiones fallidas.
        result: Resultado de la primera repetición exitosa.
        scale: K promedio de las repeticiones exitosas.
        reconstructed_pre: ‖Ḡ_m‖ promedio sin calibrar.
        reconstructed_post: ‖K ⊙ Ḡ_m‖ promedio con el modelo de cada repetición.
        true_scale: K verdadero medio (solo en simulación).
        estimates: K de cada repetición exitosa (repeticiones, 3).
    """

    speed: float
    status: str
    repeats: int
    failures: int = 0
    result: Optional[CalibrationResult] = None
    scale: Optional[ArrayF] = None
    reconstructed_pre: float = float("nan")
    reconstructed_post: float = float("nan")
    true_scale: Optional[ArrayF] = None
    estimates: ArrayF = field(default_factory=lambda: np.empty((0, 3)))

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def to_dict(self) -> dict[str, Any]:
        data: dict[str, Any] = {
            "speed_dps": self.speed,
            "status": self.status,
            "repeats": self.repeats,
            "failures": self.failures,
        }
        if self.ok:
            data["scale"] = [float(v) for v in self.scale]  # type: ignore[union-attr]
            data["reconstructed_pre_dps"] = self.reconstructed_pre
            data["reconstructed_post_dps"] = self.reconstructed_post
            data["result"] = self.result.to_dict()  # type: ignore[union-attr]
        if self.true_scale is not None:
            data["true_scale"] = [float(v) for v in self.true_scale]
        return data


@dataclass(frozen=True)
class LinearityMetrics:
    """Recta de mínimos cuadrados de la escala frente a la velocidad para un eje.

    ``r_squared`` es None cuando la escala es constante; en ese caso
    ``perfect_fit`` indica si la recta pasa por todos los puntos.
    """

    slope: float
    intercept: float
    max_deviation: float
    r_squared: Optional[float]
    perfect_fit: bool

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)


@dataclass(frozen=True, eq=False)
class SweepReport:
    points: tuple[SweepPoint, ...]
    linearity: Optional[dict[str, LinearityMetrics]] = None

    @property
    def failures(self) -> int:
        return sum(not p.ok for p in self.points)

    def to_dict(self) -> dict[str, Any]:
        return {
            "points": [p.to_dict() for p in self.points],
            "failures": self.failures,
            "linearity": None
            if self.linearity is None
            else {axis: m.to_dict() for axis, m in self.linearity.items()},
        }

    def speed_rows(self) -> list[dict[str, Any]]:
        """Datos de la gráfica velocidad comandada frente a reconstruida."""
        return [
            {
                "speed": p.speed,
                "commanded": p.speed,
                "reconstructed_pre": p.reconstructed_pre,
                "reconstructed_post": p.reconstructed_post,
            }
            for p in self.points
        ]

    def scale_rows(self) -> list[dict[str, Any]]:
        """Datos de la gráfica de linealidad: K estimado y recta ajustada por eje."""
        rows = []
        for p in self.points:
            row: dict[str, Any] = {"speed": p.speed}
            scale = p.scale if p.scale is not None else np.full(3, np.nan)
            for i, axis in enumerate(AXES):
                row[f"k{axis}"] = float(scale[i])
            for axis in AXES:
                metrics = (self.linearity or {}).get(axis)
                row[f"fit_{axis}"] = (
                    float("nan") if metrics is None else metrics.intercept + metrics.slope * p.speed
                )
            rows.append(row)
        return rows

    def estimate_rows(self) -> list[dict[str, Any]]:
        """K de cada repetición por punto (datos para diagramas de violín)."""
        return [
            {"speed": p.speed, "repeat": j, **{f"k{axis}": float(k[i]) for i, axis in enumerate(AXES)}}
            for p in self.points
            for j, k in enumerate(p.estimates)
        ]


def _calibrate_point(
    config: SweepConfig, index: int, speed: float, estimator_config: EstimatorConfig | None
) -> SweepPoint:
    repeats = config.repeats_for(speed)
    try:
        sourced = config.source.sessions_for(index, speed, repeats)
    except GyroCalibrationError as e:
        logger.warning("Punto %.1f °/s sin sesiones: %s", speed, e)
        return SweepPoint(speed=speed, status=type(e).__name__, repeats=repeats, failures=repeats)

    results: list[CalibrationResult] = []
    truths = []
    last_error = "EmptySeriesError"
    for item in sourced:
        try:
            results.append(calibrate(item.session, item.accel_model, estimator_config))
        except GyroCalibrationError as e:
            last_error = type(e).__name__
            logger.warning("Calibración fallida a %.1f °/s: %s", speed, e)
            continue
        if item.true_scale is not None:
            truths.append(item.true_scale)

    failures = len(sourced) - len(results)
    if not results:
        return SweepPoint(speed=speed, status=last_error, repeats=len(sourced), failures=failures)

    identity = GyroModel.identity()
    return SweepPoint(
        speed=speed,
        status="ok",
        repeats=len(sourced),
        failures=failures,
        result=results[0],
        scale=np.mean([r.gyro.scale for r in results], axis=0),
        reconstructed_pre=float(np.mean([reconstruct_speed(identity, r.g_mean) for r in results])),
        reconstructed_post=float(np.mean([reconstruct_speed(r.gyro, r.g_mean) for r in results])),
        true_scale=np.mean(truths, axis=0) if truths else None,
        estimates=np.array([r.gyro.scale for r in results]),
    )


def run_sweep(config: SweepConfig, estimator_config: EstimatorConfig | None = None) -> SweepReport:
    """Calibra cada punto de velocidad y ajusta la recta de linealidad por eje.

    Los fallos de un punto se registran en su ``status`` y el barrido continúa.
    La recta solo se ajusta si hay al menos dos puntos exitosos.
    """
    points = tuple(
        _calibrate_point(config, index, speed, estimator_config) for index, speed in enumerate(config.speeds)
    )
    report = SweepReport(points=points)
    try:
        linearity = assess_linearity(report)
    except TooFewPointsError as e:
        logger.warning("Sin recta de linealidad: %s", e)
        linearity = None
    logger.info("Barrido de %d puntos, %d fallidos", len(points), report.failures)
    return SweepReport(points=points, linearity=linearity)


def assess_linearity(report: SweepReport) -> dict[str, LinearityMetrics]:
    """Ajusta por mínimos cuadrados ordinarios la escala frente a la velocidad en cada eje.

    Raises:
        TooFewPointsError: Con menos de dos puntos calibrados.
    """
    pairs = sorted((p.speed, tuple(p.scale)) for p in report.points if p.ok and p.scale is not None)
    if len(pairs) < 2:
        raise TooFewPointsError(f"Se requieren 2 puntos calibrados, hay {len(pairs)}")
    speeds = np.array([s for s, _ in pairs])
    scales = np.array([k for _, k in pairs])

    metrics = {}
    for i, axis in enumerate(AXES):
        k = scales[:, i]
        slope, intercept = np.polyfit(speeds, k, 1)
        fit = intercept + slope * speeds
        deviation = float(np.max(np.abs(k - fit)))
        ss_res = float(np.sum((k - fit) ** 2))
        ss_tot = float(np.sum((k - k.mean()) ** 2))
        tolerance = 1e-9 * max(1.0, float(np.max(np.abs(k))))
        constant = ss_tot <= len(k) * tolerance**2
        metrics[axis] = LinearityMetrics(
            slope=float(slope),
            intercept=float(intercept),
            max_deviation=deviation,
            r_squared=None if constant else 1.0 - ss_res / ss_tot,
            perfect_fit=deviation <= tolerance,
        )
    return metrics
