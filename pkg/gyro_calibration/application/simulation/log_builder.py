"""Log continuo de una sesión simulada, con las transiciones entre segmentos.

Entre la sesión en memoria y un log grabado en el banco faltan los tramos
intermedios: los giros manuales entre poses y las rampas de arranque y
parada del motor. Este módulo los sintetiza y devuelve el log completo junto
con el manifiesto que etiqueta cada segmento. Las muestras de los segmentos
se copian tal cual, por lo que cargar el log con su manifiesto reproduce la
sesión en memoria bit a bit.
"""
from __future__ import annotations

import logging
import math

import numpy as np
import numpy.typing as npt

from gyro_calibration.application.simulation.scenario import LOG_STREAM, moving_segment
from gyro_calibration.domain.entities import ImuSegment, SegmentRange, SessionManifest, SimulatedSession

logger = logging.getLogger(__name__)

ArrayF = npt.NDArray[np.float64]

LOG_FILE_NAME = "session_log.csv"


def _start_index(segment: ImuSegment, dt: float) -> int:
    return int(round(segment.t[0] / dt))


def _hand_turn(start: float, stop: float, steps: int) -> tuple[ArrayF, ArrayF]:
    """Perfil cicloidal: arranca y termina con velocidad nula.

    Returns:
        (ángulos en rad, velocidades en rad por paso normalizado) para j = 1..steps−1.
    """
    x = np.arange(1, steps) / steps
    delta = stop - start
    angles = start + delta * (x - np.sin(2.0 * math.pi * x) / (2.0 * math.pi))
    rate_factor = 1.0 - np.cos(2.0 * math.pi * x)
    return angles, delta * rate_factor


def build_log(sim: SimulatedSession) -> tuple[ImuSegment, SessionManifest]:
    """Ensambla el log continuo y su manifiesto.

    Orden: bias → (giro manual → pose)×n → rampa de arranque → rotación →
    rampa de parada. El manifiesto referencia un único archivo
    ``session_log.csv``.

    Args:
        sim: Sesión simulada por ``simulate_session``.

    Returns:
        (log, manifiesto) con rangos [start, end) sobre el log.
    """
    cfg = sim.ground_truth
    session = sim.session
    dt = 1.0 / cfg.sample_rate
    segments = [session.bias_segment, *session.static_poses, session.rotation_segment]
    angles = [sim.initial_angle, *[float(a) for a in sim.pose_angles]]
    starts = [_start_index(segment, dt) for segment in segments]

    omega_dps = sim.true_speed
    omega = math.radians(omega_dps)
    spin_steps = starts[-1] - (starts[-2] + len(segments[-2]) - 1)
    total = starts[-1] + len(segments[-1]) + spin_steps
    t = np.arange(total) * dt
    accel = np.empty((total, 3))
    gyro = np.empty((total, 3))

    for segment, start in zip(segments, starts):
        accel[start : start + len(segment)] = segment.accel
        gyro[start : start + len(segment)] = segment.gyro

    children = np.random.SeedSequence([cfg.seed, LOG_STREAM]).spawn(len(segments))
    fills: list[tuple[int, ArrayF, ArrayF, float]] = []

    # Giros manuales entre segmentos estáticos: motor sin alimentar
    for i in range(len(segments) - 2):
        gap_start = starts[i] + len(segments[i])
        steps = starts[i + 1] - gap_start + 1
        turn_angles, delta_rate = _hand_turn(angles[i], angles[i + 1], steps)
        rates = np.degrees(delta_rate / (steps * dt))
        fills.append((gap_start, turn_angles, rates, cfg.static_sigma_gyro))

    # Rampa de arranque: velocidad lineal de 0 a ω
    gap_start = starts[-2] + len(segments[-2])
    tau = np.arange(1, spin_steps) * dt
    ramp_time = spin_steps * dt
    fills.append(
        (
            gap_start,
            angles[-1] + omega * tau**2 / (2.0 * ramp_time),
            omega_dps * tau / ramp_time,
            cfg.noise_sigma_gyro,
        )
    )

    # Rampa de parada tras la última muestra de rotación
    rotation_end = starts[-1] + len(segments[-1])
    last_angle = sim.rotation_start_angle + omega * (len(segments[-1]) - 1) * dt
    tau = np.arange(1, spin_steps + 1) * dt
    fills.append(
        (
            rotation_end,
            last_angle + omega * (tau - tau**2 / (2.0 * ramp_time)),
            omega_dps * (1.0 - tau / ramp_time),
            cfg.noise_sigma_gyro,
        )
    )

    for (start, gap_angles, rates, sigma), child in zip(fills, children):
        stop = start + len(gap_angles)
        piece = moving_segment(cfg, gap_angles, rates, t[start:stop], sigma, np.random.default_rng(child))
        accel[start:stop] = piece.accel
        gyro[start:stop] = piece.gyro

    ranges = [SegmentRange(0, start, start + len(segment)) for segment, start in zip(segments, starts)]
    manifest = SessionManifest(
        files=(LOG_FILE_NAME,),
        bias=ranges[0],
        poses=tuple(ranges[1:-1]),
        rotation=ranges[-1],
        speed_dps=float(cfg.speed),
    )
    logger.info("Log simulado: %d muestras, %d poses, %.1f s", total, len(ranges) - 2, total * dt)
    return ImuSegment(t=t, accel=accel, gyro=gyro), manifest
