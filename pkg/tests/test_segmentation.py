"""Tests de la segmentación automática de logs."""
import numpy as np
import pytest

from config import EstimatorConfig, SegmentationConfig
from gyro_calibration.application.simulation.log_builder import build_log
from gyro_calibration.application.simulation.scenario import draw_scenario, simulate_session
from gyro_calibration.domain.entities import ImuSegment
from gyro_calibration.domain.exceptions import NoRotationFoundError, TooFewStaticSegmentsError
from gyro_calibration.infrastructure.segmentation import ROTATING, STATIC, TRANSITION, auto_segment, label_segment

RATE = 100.0


def _simulated_log(speed: float = 30.0, seed: int = 6):
    cfg = draw_scenario(seed, {"speed": speed, "samples_per_segment": 300, "rotation_samples": 500})
    return build_log(simulate_session(cfg))


def test_log_simulado_recupera_cuatro_poses_y_la_rotacion() -> None:
    """Fronteras dentro de 0.5 s de la verdad desplazada por el margen de guarda."""
    log, truth = _simulated_log()
    guard = int(SegmentationConfig().guard_s * RATE)
    tolerance = int(0.5 * RATE)

    proposed = auto_segment(log, speed_dps=30.0)

    assert len(proposed.poses) == 4
    assert proposed.speed_dps == 30.0
    pairs = [(proposed.bias, truth.bias), (proposed.rotation, truth.rotation)]
    pairs += list(zip(proposed.poses, truth.poses))
    for detected, expected in pairs:
        assert expected.start <= detected.start and detected.end <= expected.end
        assert abs(detected.start - (expected.start + guard)) <= tolerance
        assert abs(detected.end - (expected.end - guard)) <= tolerance


def test_sin_velocidad_propone_la_mediana_del_giro(caplog: pytest.LogCaptureFixture) -> None:
    log, _ = _simulated_log(speed=30.0)

    with caplog.at_level("WARNING"):
        proposed = auto_segment(log)

    assert proposed.speed_dps == pytest.approx(30.0, rel=0.15)
    assert "Velocidad no indicada" in caplog.text


def test_log_todo_estatico_lanza_no_rotation_found() -> None:
    rng = np.random.default_rng(1)
    n = 1000
    log = ImuSegment(
        t=np.arange(n) / RATE,
        accel=np.array([0.0, 0.0, 1.0]) + rng.normal(0.0, 0.001, (n, 3)),
        gyro=np.array([0.5, -0.3, 0.2]) + rng.normal(0.0, 0.1, (n, 3)),
    )

    with pytest.raises(NoRotationFoundError):
        auto_segment(log, speed_dps=30.0)


def test_log_todo_rotando_lanza_too_few_static_segments() -> None:
    cfg = draw_scenario(2, {"speed": 30.0, "samples_per_segment": 20, "rotation_samples": 1000})
    rotation = simulate_session(cfg).session.rotation_segment

    with pytest.raises(TooFewStaticSegmentsError):
        auto_segment(rotation, speed_dps=30.0)


def test_etiquetas_de_los_segmentos_propuestos_son_estables() -> None:
    log, _ = _simulated_log()
    proposed = auto_segment(log, speed_dps=30.0)

    assert label_segment(log[proposed.bias.start : proposed.bias.end]) == STATIC
    for pose in proposed.poses:
        assert label_segment(log[pose.start : pose.end]) == STATIC
    assert label_segment(log[proposed.rotation.start : proposed.rotation.end]) == ROTATING


def test_giro_manual_es_transicion() -> None:
    log, truth = _simulated_log()

    turn = log[truth.bias.end - 20 : truth.poses[0].start + 20]

    assert label_segment(turn, SegmentationConfig(), EstimatorConfig()) == TRANSITION
