"""Campañas Monte-Carlo sobre el simulador y el estimador.

Cada corrida tiene su propia semilla, derivada de la semilla del escenario
base con ``SeedSequence.spawn``; el resultado no depende del orden de
ejecución ni del número de procesos.
"""
from __future__ import annotations

import dataclasses
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Optional, Sequence

import numpy as np
import numpy.typing as npt

from config import EstimatorConfig, SimulationConfig
from gyro_calibration.application.estimator import calibrate, dot_products
from gyro_calibration.application.simulation.scenario import draw_scenario, simulate_session, with_seed
from gyro_calibration.domain.entities import ScenarioConfig
from gyro_calibration.domain.exceptions import CalibrationInputError, GyroCalibrationError

logger = logging.getLogger(__name__)

ArrayF = npt.NDArray[np.float64]
AXES = ("x", "y", "z")


class RedrawPolicy(str, Enum):
    """Política de modelos entre corridas."""

    REDRAW = "redraw"  # nuevo K y bias en cada corrida
    FIXED = "fixed"  # mismo modelo, solo cambia el ruido


def run_seeds(seed: int, runs: int) -> list[int]:
    """Semillas de 64 bits independientes para cada corrida."""
    children = np.random.SeedSequence(seed).spawn(runs)
    return [int(child.generate_state(1, np.uint64)[0]) for child in children]


def _none_if_nan(value: float) -> Optional[float]:
    return None if not np.isfinite(value) else float(value)


@dataclass(frozen=True)
class ErrorStats:
    """Estadísticos de una muestra listos para un diagrama de caja."""

    count: int
    mean: float
    std: float
    q1: float
    median: float
    q3: float
    min: float
    max: float

    @classmethod
    def from_values(cls, values: npt.ArrayLike) -> ErrorStats:
        data = np.asarray(values, dtype=np.float64).reshape(-1)
        data = data[np.isfinite(data)]
        if data.size == 0:
            nan = float("nan")
            return cls(0, nan, nan, nan, nan, nan, nan, nan)
        q1, median, q3 = np.percentile(data, [25.0, 50.0, 75.0])
        return cls(
            count=int(data.size),
            mean=float(np.mean(data)),
            std=float(np.std(data)),
            q1=float(q1),
            median=float(median),
            q3=float(q3),
            min=float(np.min(data)),
            max=float(np.max(data)),
        )

    @property
    def iqr(self) -> float:
        return self.q3 - self.q1

    def to_dict(self) -> dict[str, Any]:
        data: dict[str, Any] = {"count": self.count}
        for name in ("mean", "std", "q1", "median", "q3", "min", "max"):
            data[name] = _none_if_nan(getattr(self, name))
        data["iqr"] = _none_if_nan(self.iqr)
        return data


@dataclass(frozen=True, eq=False)
class MonteCarloRun:
    """Resultado de una corrida; ``error`` guarda la clase de la excepción si falló."""

    index: int
    seed: int
    true_scale: ArrayF
    estimated_scale: Optional[ArrayF] = None
    dot_before: Optional[ArrayF] = None
    dot_after: Optional[ArrayF] = None
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None

    @property
    def scale_error(self) -> ArrayF:
        """Error relativo K̂/K − 1 por eje (NaN si la corrida falló)."""
        if self.estimated_scale is None:
            return np.full(3, np.nan)
        return self.estimated_scale / self.true_scale - 1.0

    def to_row(self) -> dict[str, Any]:
        row: dict[str, Any] = {"run": self.index, "seed": self.seed, "status": "ok" if self.ok else self.error}
        estimated = self.estimated_scale if self.estimated_scale is not None else np.full(3, np.nan)
        for i, axis in enumerate(AXES):
            row[f"true_k{axis}"] = float(self.true_scale[i])
        for i, axis in enumerate(AXES):
            row[f"est_k{axis}"] = float(estimated[i])
        for i, axis in enumerate(AXES):
            row[f"err_k{axis}"] = float(self.scale_error[i])
        return row


def _relative_spread(dots: ArrayF) -> ArrayF:
    """Desviación relativa de cada producto escalar respecto de la media de la corrida."""
    mean = float(np.mean(dots))
    if mean == 0.0:
        return np.full(len(dots), np.nan)
    return dots / mean - 1.0


@dataclass(frozen=True, eq=False)
class MonteCarloSummary:
    """Agregado de una campaña Monte-Carlo.

    Attributes:
        runs: Corridas ejecutadas.
        failures: Corridas que terminaron en error de calibración.
        scale_error: Estadísticos del error relativo de escala por eje.
        dot_spread_before: Dispersión relativa de los productos escalares sin calibrar.
        dot_spread_after: Ídem tras calibrar.
        failure_reasons: Conteo por clase de excepción.
        run_records: Detalle por corrida, en orden de índice.
    """

    runs: int
    failures: int
    scale_error: tuple[ErrorStats, ErrorStats, ErrorStats]
    dot_spread_before: ErrorStats
    dot_spread_after: ErrorStats
    failure_reasons: dict[str, int] = field(default_factory=dict)
    run_records: tuple[MonteCarloRun, ...] = ()

    def estimates(self) -> ArrayF:
        """Escalas estimadas (runs, 3) con NaN en las corridas fallidas."""
        return np.array(
            [r.estimated_scale if r.estimated_scale is not None else np.full(3, np.nan) for r in self.run_records]
        ).reshape(-1, 3)

    def to_dict(self) -> dict[str, Any]:
        return {
            "runs": self.runs,
            "failures": self.failures,
            "failure_reasons": dict(self.failure_reasons),
            "scale_error": {axis: s.to_dict() for axis, s in zip(AXES, self.scale_error)},
            "dot_spread": {
                "before": self.dot_spread_before.to_dict(),
                "after": self.dot_spread_after.to_dict(),
            },
        }

    def run_rows(self) -> list[dict[str, Any]]:
        return [run.to_row() for run in self.run_records]

    def boxplot_rows(self) -> list[dict[str, Any]]:
        """Una fila por serie del diagrama de caja (error por eje y dispersión)."""
        series = [(f"scale_error_{axis}", s) for axis, s in zip(AXES, self.scale_error)]
        series += [("dot_spread_before", self.dot_spread_before), ("dot_spread_after", self.dot_spread_after)]
        rows = []
        for name, s in series:
            rows.append({"series": name, **{k: v for k, v in s.to_dict().items()}})
        return rows


def run_once(
    cfg: ScenarioConfig,
    index: int = 0,
    estimator_config: EstimatorConfig | None = None,
    simulation_config: SimulationConfig | None = None,
) -> MonteCarloRun:
    """Simula y calibra un escenario; los errores de calibración se registran, no se propagan."""
    true_scale = cfg.true_gyro.scale
    try:
        sim = simulate_session(cfg, simulation_config)
        result = calibrate(sim.session, config=estimator_config)
    except GyroCalibrationError as e:
        logger.warning("Corrida %d (semilla %d) fallida: %s", index, cfg.seed, e)
        return MonteCarloRun(index=index, seed=cfg.seed, true_scale=true_scale, error=type(e).__name__)
    before, after = dot_products(result)
    return MonteCarloRun(
        index=index,
        seed=cfg.seed,
        true_scale=true_scale,
        estimated_scale=result.gyro.scale,
        dot_before=before,
        dot_after=after,
    )


def _run_task(args: tuple[ScenarioConfig, int, EstimatorConfig | None, SimulationConfig | None]) -> MonteCarloRun:
    return run_once(*args)


def run_configs(
    scenarios: Sequence[ScenarioConfig],
    workers: int = 1,
    estimator_config: EstimatorConfig | None = None,
    simulation_config: SimulationConfig | None = None,
) -> list[MonteCarloRun]:
    """Ejecuta las corridas en serie o en un pool de procesos, preservando el orden."""
    tasks = [(cfg, i, estimator_config, simulation_config) for i, cfg in enumerate(scenarios)]
    if workers <= 1 or len(tasks) <= 1:
        return [_run_task(task) for task in tasks]
    chunk = max(1, len(tasks) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_task, tasks, chunksize=chunk))


def campaign_scenarios(
    base: ScenarioConfig,
    runs: int,
    redraw_policy: RedrawPolicy = RedrawPolicy.REDRAW,
    simulation_config: SimulationConfig | None = None,
) -> list[ScenarioConfig]:
    """Escenarios de cada corrida: misma instalación, semilla propia y modelo según la política."""
    scenarios = []
    for seed in run_seeds(base.seed, runs):
        if redraw_policy is RedrawPolicy.REDRAW:
            drawn = draw_scenario(seed, config=simulation_config)
            scenarios.append(dataclasses.replace(base, true_gyro=drawn.true_gyro, seed=seed))
        else:
            scenarios.append(with_seed(base, seed))
    return scenarios


def summarize(records: Sequence[MonteCarloRun]) -> MonteCarloSummary:
    """Reduce los resultados de las corridas a un MonteCarloSummary."""
    ok = [r for r in records if r.ok]
    errors = np.array([r.scale_error for r in ok]).reshape(-1, 3)
    before = np.concatenate([_relative_spread(r.dot_before) for r in ok]) if ok else np.empty(0)
    after = np.concatenate([_relative_spread(r.dot_after) for r in ok]) if ok else np.empty(0)
    reasons: dict[str, int] = {}
    for r in records:
        if r.error is not None:
            reasons[r.error] = reasons.get(r.error, 0) + 1
    return MonteCarloSummary(
        runs=len(records),
        failures=len(records) - len(ok),
        scale_error=tuple(ErrorStats.from_values(errors[:, i]) for i in range(3)),  # type: ignore[arg-type]
        dot_spread_before=ErrorStats.from_values(before),
        dot_spread_after=ErrorStats.from_values(after),
        failure_reasons=reasons,
        run_records=tuple(records),
    )


def monte_carlo(
    base: ScenarioConfig,
    runs: int,
    redraw_policy: RedrawPolicy = RedrawPolicy.REDRAW,
    workers: int = 1,
    estimator_config: EstimatorConfig | None = None,
    simulation_config: SimulationConfig | None = None,
) -> MonteCarloSummary:
    """Ejecuta ``runs`` corridas independientes y agrega errores y dispersiones.

    Args:
        base: Escenario base (instalación, velocidad y ruido compartidos).
        runs: Número de corridas (≥ 1).
        redraw_policy: REDRAW sortea K y bias en cada corrida; FIXED los mantiene.
        workers: Procesos en paralelo; 1 ejecuta en serie.
        estimator_config: Umbrales del estimador.
        simulation_config: Rangos de sorteo y duración de transiciones.

    Returns:
        Resumen con errores de escala, dispersiones y fallos.

    Raises:
        CalibrationInputError: Si ``runs`` < 1.
    """
    if runs < 1:
        raise CalibrationInputError(f"Número de corridas inválido: {runs}")
    scenarios = campaign_scenarios(base, runs, redraw_policy, simulation_config)
    records = run_configs(scenarios, workers, estimator_config, simulation_config)
    summary = summarize(records)
    logger.info(
        "Monte-Carlo: %d corridas, %d fallos, mediana |error| x=%.3g y=%.3g z=%.3g",
        summary.runs,
        summary.failures,
        *(abs(s.median) for s in summary.scale_error),
    )
    return summary


# =============================================================================
# REJILLA RUIDO × VELOCIDAD
# =============================================================================


@dataclass(frozen=True, eq=False)
class NoiseGridCell:
    """Resultado de una celda (σ, velocidad) con K fijo."""

    sigma: float
    speed: float
    runs: int
    failures: int
    mean: ArrayF
    std: ArrayF
    estimates: ArrayF

    @property
    def variance(self) -> ArrayF:
        return self.std**2

    def to_row(self) -> dict[str, Any]:
        row: dict[str, Any] = {"sigma_dps": self.sigma, "speed_dps": self.speed, "runs": self.runs, "failures": self.failures}
        for i, axis in enumerate(AXES):
            row[f"mean_k{axis}"] = float(self.mean[i])
            row[f"std_k{axis}"] = float(self.std[i])
            row[f"var_k{axis}"] = float(self.variance[i])
        return row

    def estimate_rows(self) -> list[dict[str, Any]]:
        """Estimaciones crudas por corrida (datos para diagramas de violín)."""
        rows = []
        for run, k in enumerate(self.estimates):
            rows.append(
                {
                    "sigma_dps": self.sigma,
                    "speed_dps": self.speed,
                    "run": run,
                    **{f"k{axis}": float(k[i]) for i, axis in enumerate(AXES)},
                }
            )
        return rows


@dataclass(frozen=True, eq=False)
class NoiseGrid:
    cells: tuple[NoiseGridCell, ...]

    def cell(self, sigma: float, speed: float) -> NoiseGridCell:
        for c in self.cells:
            if c.sigma == sigma and c.speed == speed:
                return c
        raise KeyError((sigma, speed))

    def rows(self) -> list[dict[str, Any]]:
        return [c.to_row() for c in self.cells]

    def estimate_rows(self) -> list[dict[str, Any]]:
        return [row for c in self.cells for row in c.estimate_rows()]

    def to_dict(self) -> dict[str, Any]:
        return {"cells": [{k: _none_if_nan(v) if isinstance(v, float) else v for k, v in row.items()} for row in self.rows()]}


def noise_speed_grid(
    base: ScenarioConfig,
    sigmas: Sequence[float],
    speeds: Sequence[float],
    runs: int,
    workers: int = 1,
    estimator_config: EstimatorConfig | None = None,
    simulation_config: SimulationConfig | None = None,
) -> NoiseGrid:
    """Replica el escenario con K fijo en cada combinación de ruido de rotación y velocidad.

    El ruido del giróscopo en reposo se mantiene en el valor del escenario
    base: la vibración solo existe con el motor encendido.
    """
    cells = []
    for sigma in sigmas:
        for speed in speeds:
            cfg = dataclasses.replace(
                base,
                noise_sigma_gyro=float(sigma),
                static_noise_sigma_gyro=base.static_sigma_gyro,
                speed=float(speed),
            )
            summary = monte_carlo(cfg, runs, RedrawPolicy.FIXED, workers, estimator_config, simulation_config)
            estimates = summary.estimates()
            finite = estimates[np.all(np.isfinite(estimates), axis=1)]
            if len(finite):
                mean, std = finite.mean(axis=0), finite.std(axis=0)
            else:
                mean = std = np.full(3, np.nan)
            cells.append(
                NoiseGridCell(
                    sigma=float(sigma),
                    speed=float(speed),
                    runs=summary.runs,
                    failures=summary.failures,
                    mean=mean,
                    std=std,
                    estimates=estimates,
                )
            )
            logger.info(
                "Celda σ=%.1f °/s, n=%.1f °/s: std Kx=%.4g, fallos %d",
                sigma,
                speed,
                std[0],
                summary.failures,
            )
    return NoiseGrid(cells=tuple(cells))

