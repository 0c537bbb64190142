"""Configuración centralizada de la herramienta de calibración de giróscopos.

Este módulo contiene toda la configuración en un solo lugar: umbrales del
estimador, valores por defecto del simulador, parámetros de segmentación de
logs y formato de salida de los reportes.
"""
from dataclasses import dataclass, field
from typing import Optional


@dataclass
class LoggingConfig:
    """Configuración de logging."""
    level: str = "INFO"  # DEBUG, INFO, WARNING, ERROR
    format: str = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
    log_to_file: bool = False
    log_file_path: Optional[str] = "gyro_calibration.log"


@dataclass
class EstimatorConfig:
    """Umbrales y tolerancias del estimador de factor de escala."""
    static_gate_dps: float = 1.0  # Magnitud/desviación máxima del giróscopo en reposo (°/s)
    condition_limit: float = 1e8  # Número de condición máximo de XᵀX
    geometry_min_deg: float = 15.0  # Ángulo mínimo eje-gravedad
    geometry_max_deg: float = 75.0  # Ángulo máximo eje-gravedad
    trim_fraction: float = 0.01  # Recorte por cola para la media del giro
    min_rate_norm: float = 1e-9
    accel_tolerance: float = 1e-10  # Norma de paso para convergencia de Gauss-Newton
    accel_max_iterations: int = 50
    accel_min_poses_for_bias: int = 6
    accel_coplanarity_ratio: float = 0.05  # σ_min/σ_max por debajo del cual las poses son coplanares


@dataclass
class SimulationConfig:
    """Valores por defecto de los escenarios simulados."""
    sample_rate_hz: float = 100.0
    static_samples: int = 500
    rotation_samples: int = 2000
    noise_sigma_gyro_dps: float = 0.1
    noise_sigma_accel_g: float = 0.001
    n_poses: int = 4
    tilt_deg: float = 45.0  # Ángulo entre el eje del motor y la vertical
    scale_range: tuple[float, float] = (0.9, 1.1)
    bias_range_dps: tuple[float, float] = (-3.0, 3.0)
    hand_turn_s: float = 1.5  # Duración del giro manual entre poses
    spin_ramp_s: float = 0.5  # Rampa de arranque/parada del motor


@dataclass
class SegmentationConfig:
    """Parámetros de la segmentación automática de logs."""
    window_s: float = 0.5
    median_window_s: float = 1.0
    guard_s: float = 0.5  # Margen recortado en cada frontera
    rotation_tolerance: float = 0.10  # ±10% respecto de la mediana móvil
    min_rotation_s: float = 2.0
    min_static_s: float = 0.5
    accel_quiet_g: float = 0.005


@dataclass
class LinearityConfig:
    """Configuración del barrido de linealidad."""
    low_speed_threshold_dps: float = 20.0  # Por debajo se repite la calibración
    low_speed_repeats: int = 5


@dataclass
class OutputConfig:
    """Formato de los archivos generados."""
    float_format: str = "%.17g"  # Sin pérdida para ida y vuelta de float64
    accel_export_unit: str = "g"  # "g" o "m/s2"
    gravity_ms2: float = 9.81


@dataclass
class AppConfig:
    """Configuración completa de la herramienta."""
    logging: LoggingConfig = field(default_factory=LoggingConfig)
    estimator: EstimatorConfig = field(default_factory=EstimatorConfig)
    simulation: SimulationConfig = field(default_factory=SimulationConfig)
    segmentation: SegmentationConfig = field(default_factory=SegmentationConfig)
    linearity: LinearityConfig = field(default_factory=LinearityConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    default_seed: int = 0


# =============================================================================
# CONFIGURACIONES PREDEFINIDAS
# =============================================================================

# Configuración para PRODUCCIÓN (logs reales del banco)
PRODUCTION_CONFIG = AppConfig(
    logging=LoggingConfig(
        level="INFO",
        log_to_file=True,
        log_file_path="logs/production.log"
    ),
)

# Configuración para DESARROLLO (más detalle en logs)
DEVELOPMENT_CONFIG = AppConfig(
    logging=LoggingConfig(
        level="DEBUG",
        log_to_file=True,
        log_file_path="logs/development.log"
    ),
)

# Configuración para TESTING (segmentos cortos, sin archivo de log)
TESTING_CONFIG = AppConfig(
    logging=LoggingConfig(
        level="DEBUG",
        log_to_file=False
    ),
    simulation=SimulationConfig(
        static_samples=100,
        rotation_samples=400,
    ),
)


# =============================================================================
# CONFIGURACIÓN ACTIVA
# =============================================================================

# Cambiar esta variable para seleccionar el entorno
ACTIVE_CONFIG = PRODUCTION_CONFIG  # Opciones: PRODUCTION_CONFIG, DEVELOPMENT_CONFIG, TESTING_CONFIG


def get_config() -> AppConfig:
    """Retorna la configuración activa.

    Returns:
        Configuración activa según la variable ACTIVE_CONFIG.
    """
    return ACTIVE_CONFIG
