"""Tests de la pre-calibración del acelerómetro."""
import numpy as np
import pytest

from config import EstimatorConfig
from gyro_calibration.application.accel_calibration import calibrate_accel, fit_accel_model, pose_means
from gyro_calibration.domain.entities import AccelModel, ImuSegment
from gyro_calibration.domain.exceptions import DegeneratePosesError, TooFewPosesError
from gyro_calibration.domain.sensor_model import accel_true_to_measured
from gyro_calibration.domain.vector_math import unit


def _sphere_poses(count: int, seed: int = 0) -> np.ndarray:
    """Direcciones de gravedad repartidas en la esfera (no coplanares)."""
    return np.array([unit(v) for v in np.random.default_rng(seed).normal(size=(count, 3))])


def _pose_segment(accel: np.ndarray, n: int = 10) -> ImuSegment:
    return ImuSegment(t=np.arange(n) * 0.01, accel=np.tile(accel, (n, 1)), gyro=np.zeros((n, 3)))


def test_poses_unitarias_dan_modelo_identidad() -> None:
    """Con residuo nulo en la identidad el ajuste no se mueve."""
    model = fit_accel_model(_sphere_poses(8))

    np.testing.assert_allclose(model.scale, [1.0, 1.0, 1.0], atol=1e-12)
    np.testing.assert_allclose(model.bias, [0.0, 0.0, 0.0], atol=1e-12)


def test_recupera_escala_sin_ruido() -> None:
    """Poses generadas con escala (1.1, 0.9, 1.0) y bias 0: el modelo se recupera a 1e-6."""
    truth = AccelModel(scale=(1.1, 0.9, 1.0), bias=(0.0, 0.0, 0.0))
    measured = accel_true_to_measured(truth, _sphere_poses(8, seed=3))

    model = fit_accel_model(measured)

    np.testing.assert_allclose(model.scale, truth.scale, atol=1e-6)
    np.testing.assert_allclose(model.bias, truth.bias, atol=1e-6)


def test_recupera_escala_y_bias_con_seis_poses() -> None:
    truth = AccelModel(scale=(1.02, 0.97, 1.01), bias=(0.01, -0.02, 0.015))
    measured = accel_true_to_measured(truth, _sphere_poses(12, seed=5))

    model = fit_accel_model(measured)

    np.testing.assert_allclose(model.scale, truth.scale, atol=1e-6)
    np.testing.assert_allclose(model.bias, truth.bias, atol=1e-6)


def test_con_pocas_poses_no_estima_bias() -> None:
    """Con menos de 6 poses el bias queda fijado en cero."""
    truth = AccelModel(scale=(1.1, 0.9, 1.0), bias=(0.0, 0.0, 0.0))
    measured = accel_true_to_measured(truth, _sphere_poses(4, seed=9))

    model = fit_accel_model(measured, EstimatorConfig())

    np.testing.assert_array_equal(model.bias, [0.0, 0.0, 0.0])
    np.testing.assert_allclose(model.scale, truth.scale, atol=1e-6)


def test_poses_coplanares_caen_a_solo_escala(caplog: pytest.LogCaptureFixture) -> None:
    """Seis poses sobre un cono alrededor de un eje son coplanares: bias cero y aviso."""
    axis = unit(np.array([-1.0, 1.0, -1.0]))
    e1 = unit(np.cross(axis, [0.0, 0.0, 1.0]))
    e2 = np.cross(axis, e1)
    angles = np.linspace(0.0, 2.0 * np.pi, 6, endpoint=False)
    poses = np.array([np.cos(np.pi / 4) * axis + np.sin(np.pi / 4) * (np.cos(a) * e1 + np.sin(a) * e2) for a in angles])

    with caplog.at_level("WARNING"):
        model = fit_accel_model(poses)

    np.testing.assert_array_equal(model.bias, [0.0, 0.0, 0.0])
    np.testing.assert_allclose(model.scale, [1.0, 1.0, 1.0], atol=1e-9)
    assert "solo la escala" in caplog.text


def test_poses_identicas_lanzan_degenerate_poses() -> None:
    poses = np.tile([0.0, 0.6, 0.8], (4, 1))

    with pytest.raises(DegeneratePosesError):
        fit_accel_model(poses)


def test_menos_de_tres_poses_lanza_error() -> None:
    with pytest.raises(TooFewPosesError):
        fit_accel_model(_sphere_poses(2))
    with pytest.raises(TooFewPosesError):
        calibrate_accel([_pose_segment(np.array([0.0, 0.0, 1.0]))] * 2)


def test_calibrate_accel_usa_la_media_de_cada_pose() -> None:
    directions = _sphere_poses(4, seed=11)
    segments = [_pose_segment(d) for d in directions]

    np.testing.assert_allclose(pose_means(segments), directions, atol=1e-15)
    model = calibrate_accel(segments)
    np.testing.assert_allclose(model.scale, [1.0, 1.0, 1.0], atol=1e-9)
