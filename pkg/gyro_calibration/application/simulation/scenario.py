"""Generación de escenarios y síntesis de sesiones de calibración simuladas.

Marco mundo: z hacia arriba; el acelerómetro en reposo mide la fuerza
específica +1 g sobre z. El IMU se monta en el motor con la postura ``mount``
(sensor → mundo) y el motor gira alrededor del eje ``axis`` fijo en el
marco del sensor, de modo que el ángulo eje-gravedad es constante.

Generador: numpy PCG64 alimentado por ``SeedSequence``; cada segmento usa un
hijo independiente de la semilla del escenario.
"""
from __future__ import annotations

import dataclasses
import logging
import math
from typing import Any, Mapping

import numpy as np
import numpy.typing as npt

from config import SimulationConfig
from gyro_calibration.domain.entities import (
    AccelModel,
    CalibrationSession,
    GyroModel,
    ImuSegment,
    ScenarioConfig,
    SimulatedSession,
)
from gyro_calibration.domain.exceptions import ScenarioConfigError
from gyro_calibration.domain.sensor_model import accel_true_to_measured, gyro_true_to_measured
from gyro_calibration.domain.vector_math import Quat, Vec3, as_vec3, rotate_about_axis, unit

logger = logging.getLogger(__name__)

ArrayF = npt.NDArray[np.float64]

PRNG_ALGORITHM = "numpy.random.PCG64 (SeedSequence spawn por segmento/corrida)"
GRAVITY_WORLD = np.array([0.0, 0.0, 1.0])
REFERENCE_AXIS = (-1.0, 1.0, -1.0)
DEFAULT_SPEED_DPS = 50.0
MISALIGNMENT_AXIS = (1.0, 1.0, 1.0)

# Flujos de la SeedSequence de un escenario
_DRAW_STREAM = 0
_SESSION_STREAM = 1
LOG_STREAM = 2

_OVERRIDABLE = {f.name for f in dataclasses.fields(ScenarioConfig)} | {"tilt_deg"}


def mount_for_tilt(axis: Vec3, tilt_deg: float) -> Quat:
    """Postura que coloca ``axis`` a ``tilt_deg`` grados de la vertical."""
    tilt = math.radians(tilt_deg)
    target = np.array([math.sin(tilt), 0.0, math.cos(tilt)])
    return Quat.from_two_vectors(axis, target)


def misalignment_rotation(misalignment_deg: float) -> Quat:
    """Rotación fija entre triedros alrededor de (1, 1, 1)."""
    return Quat.from_axis_angle(np.array(MISALIGNMENT_AXIS), math.radians(misalignment_deg))


def draw_scenario(
    rng_seed: int,
    overrides: Mapping[str, Any] | None = None,
    config: SimulationConfig | None = None,
) -> ScenarioConfig:
    """Sortea un escenario con las distribuciones de referencia.

    Escala ~ U(0.9, 1.1) y bias ~ U(−3, 3) °/s por eje; el resto sale de
    ``SimulationConfig``. Cualquier campo puede fijarse en ``overrides``
    (además de ``tilt_deg`` para construir ``mount``). El sorteo se realiza
    siempre, así que el resultado solo depende de la semilla y los overrides.

    Raises:
        ScenarioConfigError: Si un override no corresponde a ningún campo.
    """
    config = config or SimulationConfig()
    overrides = dict(overrides or {})
    unknown = set(overrides) - _OVERRIDABLE
    if unknown:
        field = sorted(unknown)[0]
        raise ScenarioConfigError(field, "campo desconocido")

    rng = np.random.default_rng(np.random.SeedSequence([rng_seed, _DRAW_STREAM]))
    scale = rng.uniform(*config.scale_range, size=3)
    bias = rng.uniform(*config.bias_range_dps, size=3)

    tilt_deg = overrides.pop("tilt_deg", config.tilt_deg)
    fields: dict[str, Any] = {
        "true_gyro": GyroModel(scale=scale, bias=bias),
        "true_accel": AccelModel.identity(),
        "axis": as_vec3(REFERENCE_AXIS),
        "mount": None,
        "speed": DEFAULT_SPEED_DPS,
        "noise_sigma_gyro": config.noise_sigma_gyro_dps,
        "noise_sigma_accel": config.noise_sigma_accel_g,
        "n_poses": config.n_poses,
        "samples_per_segment": config.static_samples,
        "sample_rate": config.sample_rate_hz,
        "seed": rng_seed,
        "rotation_samples": config.rotation_samples,
    }
    fields.update(overrides)
    if fields["mount"] is None:
        fields["mount"] = mount_for_tilt(as_vec3(fields["axis"]), tilt_deg)
    return ScenarioConfig(**fields)


def body_gravity(mount: Quat, axis: Vec3, angles: npt.ArrayLike) -> ArrayF:
    """Fuerza específica en el marco del sensor para cada ángulo del motor (n, 3)."""
    initial = mount.conjugate().rotate(GRAVITY_WORLD)
    return rotate_about_axis(initial, axis, -np.asarray(angles, dtype=np.float64))


def measured_rate(cfg: ScenarioConfig, true_rate: npt.ArrayLike) -> ArrayF:
    """Lectura sin ruido del giróscopo para una velocidad verdadera del marco del sensor."""
    rate = np.asarray(true_rate, dtype=np.float64)
    if cfg.misalignment_deg:
        rate = misalignment_rotation(cfg.misalignment_deg).rotate(rate)
    return gyro_true_to_measured(cfg.true_gyro, rate)


def static_segment(
    cfg: ScenarioConfig,
    angle: float,
    t: ArrayF,
    rng: np.random.Generator,
) -> ImuSegment:
    """Segmento en reposo en el ángulo ``angle`` del motor."""
    n = len(t)
    gravity = np.repeat(body_gravity(cfg.mount, cfg.axis, [angle]), n, axis=0)
    accel = accel_true_to_measured(cfg.true_accel, gravity)
    gyro = np.repeat(measured_rate(cfg, np.zeros((1, 3))), n, axis=0)
    gyro = gyro + rng.normal(0.0, cfg.static_sigma_gyro, size=(n, 3))
    accel = accel + rng.normal(0.0, cfg.noise_sigma_accel, size=(n, 3))
    return ImuSegment(t=t, accel=accel, gyro=gyro)


def moving_segment(
    cfg: ScenarioConfig,
    angles: ArrayF,
    rates_dps: ArrayF,
    t: ArrayF,
    gyro_sigma: float,
    rng: np.random.Generator,
) -> ImuSegment:
    """Segmento con el IMU girando alrededor del eje (ángulos en rad, velocidades en °/s)."""
    n = len(t)
    direction = unit(cfg.axis)
    gravity = body_gravity(cfg.mount, cfg.axis, angles)
    accel = accel_true_to_measured(cfg.true_accel, gravity)
    gyro = measured_rate(cfg, np.outer(rates_dps, direction))
    gyro = gyro + rng.normal(0.0, gyro_sigma, size=(n, 3))
    accel = accel + rng.normal(0.0, cfg.noise_sigma_accel, size=(n, 3))
    return ImuSegment(t=t, accel=accel, gyro=gyro)


def transition_steps(config: SimulationConfig, sample_rate: float) -> tuple[int, int]:
    """Pasos de muestreo de un giro manual y de una rampa del motor."""
    hand = max(2, int(round(config.hand_turn_s * sample_rate)))
    spin = max(2, int(round(config.spin_ramp_s * sample_rate)))
    return hand, spin


def simulate_session(cfg: ScenarioConfig, config: SimulationConfig | None = None) -> SimulatedSession:
    """Sintetiza una sesión completa a partir del escenario.

    Orden de la línea de tiempo: bias (motor apagado) → giro manual → pose 0 →
    ... → pose n−1 → rampa de arranque → rotación constante. Los huecos entre
    segmentos no forman parte de la sesión; ``log_builder`` los rellena.

    Raises:
        ZeroAxisError: Si el eje es nulo.
    """
    config = config or SimulationConfig()
    direction = unit(cfg.axis)
    children = np.random.SeedSequence([cfg.seed, _SESSION_STREAM]).spawn(cfg.n_poses + 3)
    layout_rng = np.random.default_rng(children[0])
    offset = layout_rng.uniform(0.0, 2.0 * math.pi)
    speed_draw = layout_rng.uniform(-1.0, 1.0)
    true_speed = cfg.speed * (1.0 + cfg.speed_error * speed_draw)

    spacing = 2.0 * math.pi / cfg.n_poses
    pose_angles = offset + spacing * np.arange(cfg.n_poses)
    initial_angle = offset - 0.5 * spacing
    hand_steps, spin_steps = transition_steps(config, cfg.sample_rate)
    dt = 1.0 / cfg.sample_rate
    n_static = cfg.samples_per_segment

    cursor = 0

    def timeline(count: int) -> ArrayF:
        return (cursor + np.arange(count)) * dt

    bias_segment = static_segment(cfg, initial_angle, timeline(n_static), np.random.default_rng(children[1]))
    cursor += n_static - 1

    poses = []
    for i, angle in enumerate(pose_angles):
        cursor += hand_steps
        poses.append(static_segment(cfg, float(angle), timeline(n_static), np.random.default_rng(children[2 + i])))
        cursor += n_static - 1

    cursor += spin_steps
    omega = math.radians(true_speed)
    rotation_start = float(pose_angles[-1]) + omega * spin_steps * dt / 2.0
    k = np.arange(cfg.rotation_samples)
    rotation = moving_segment(
        cfg,
        angles=rotation_start + omega * k * dt,
        rates_dps=np.full(cfg.rotation_samples, true_speed),
        t=timeline(cfg.rotation_samples),
        gyro_sigma=cfg.noise_sigma_gyro,
        rng=np.random.default_rng(children[-1]),
    )

    session = CalibrationSession(
        bias_segment=bias_segment,
        static_poses=tuple(poses),
        rotation_segment=rotation,
        commanded_speed=cfg.speed,
    )
    logger.debug(
        "Sesión simulada: semilla=%d, %d poses, velocidad real %.4f °/s, eje %s",
        cfg.seed,
        cfg.n_poses,
        true_speed,
        direction,
    )
    return SimulatedSession(
        session=session,
        ground_truth=cfg,
        pose_angles=pose_angles,
        initial_angle=initial_angle,
        rotation_start_angle=rotation_start,
        true_speed=true_speed,
    )


def with_seed(cfg: ScenarioConfig, seed: int) -> ScenarioConfig:
    """Mismo escenario con otra semilla de ruido."""
    return dataclasses.replace(cfg, seed=seed)
