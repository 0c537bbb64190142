"""Tests del ensamblado del log continuo de una sesión simulada."""
import numpy as np

from config import SimulationConfig
from gyro_calibration.application.simulation.log_builder import LOG_FILE_NAME, build_log
from gyro_calibration.application.simulation.scenario import draw_scenario, simulate_session, transition_steps


def _simulated(seed: int = 2, **overrides):
    fields = {"samples_per_segment": 60, "rotation_samples": 150}
    fields.update(overrides)
    return simulate_session(draw_scenario(seed, fields))


def test_segmentos_del_log_son_copia_exacta_de_la_sesion() -> None:
    sim = _simulated()

    log, manifest = build_log(sim)

    session = sim.session
    pairs = [(manifest.bias, session.bias_segment), (manifest.rotation, session.rotation_segment)]
    pairs += list(zip(manifest.poses, session.static_poses))
    for segment_range, segment in pairs:
        piece = log[segment_range.start : segment_range.end]
        np.testing.assert_array_equal(piece.t, segment.t)
        np.testing.assert_array_equal(piece.accel, segment.accel)
        np.testing.assert_array_equal(piece.gyro, segment.gyro)


def test_manifiesto_del_log() -> None:
    sim = _simulated(n_poses=5, speed=30.0)

    log, manifest = build_log(sim)

    assert manifest.files == (LOG_FILE_NAME,)
    assert len(manifest.poses) == 5
    assert manifest.speed_dps == 30.0
    assert manifest.bias.start == 0
    starts = [manifest.bias.start, *(p.start for p in manifest.poses), manifest.rotation.start]
    assert starts == sorted(starts)
    hand, spin = transition_steps(SimulationConfig(), sim.ground_truth.sample_rate)
    assert len(log) == manifest.rotation.end + spin


def test_tiempo_uniforme_y_transiciones_con_giro() -> None:
    sim = _simulated(noise_sigma_gyro=0.0, noise_sigma_accel=0.0)

    log, manifest = build_log(sim)

    dt = 1.0 / sim.ground_truth.sample_rate
    np.testing.assert_allclose(np.diff(log.t), dt)
    turn = log[manifest.bias.end : manifest.poses[0].start]
    assert np.max(np.linalg.norm(turn.gyro - sim.session.bias_segment.gyro[0], axis=1)) > 1.0
    np.testing.assert_allclose(np.linalg.norm(log.accel, axis=1), 1.0, atol=1e-12)


def test_log_determinista() -> None:
    sim = _simulated(seed=8)

    first, _ = build_log(sim)
    second, _ = build_log(sim)

    np.testing.assert_array_equal(first.gyro, second.gyro)
    np.testing.assert_array_equal(first.accel, second.accel)
