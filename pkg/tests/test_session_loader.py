"""Tests de manifiestos de sesión y de la carga desde archivos."""
import json
from pathlib import Path

import numpy as np
import pytest

from gyro_calibration.application.estimator import calibrate
from gyro_calibration.application.simulation.log_builder import LOG_FILE_NAME, build_log
from gyro_calibration.application.simulation.scenario import draw_scenario, simulate_session
from gyro_calibration.domain.entities import SegmentRange, SessionManifest
from gyro_calibration.domain.exceptions import (
    CalibrationInputError,
    GeometryDegenerateError,
    ManifestError,
    NotStaticError,
)
from gyro_calibration.infrastructure.csv_log import write_csv
from gyro_calibration.infrastructure.session_loader import (
    RecordedSessionSource,
    load_manifest_session,
    load_session,
    manifest_from_dict,
    read_accel_model,
    read_manifest,
    write_manifest,
)


def _export(tmp_path: Path, seed: int = 1, **overrides) -> tuple[Path, object, SessionManifest]:
    """Simula, escribe log y manifiesto y devuelve (ruta del manifiesto, sesión simulada, manifiesto)."""
    fields = {"samples_per_segment": 80, "rotation_samples": 200}
    fields.update(overrides)
    sim = simulate_session(draw_scenario(seed, fields))
    log, manifest = build_log(sim)
    write_csv(tmp_path / LOG_FILE_NAME, log)
    path = tmp_path / "manifest.json"
    write_manifest(path, manifest)
    return path, sim, manifest


def _manifest_dict(**changes) -> dict:
    data = {
        "files": ["log.csv"],
        "bias": {"file": 0, "start": 0, "end": 10},
        "poses": [
            {"file": 0, "start": 20, "end": 30},
            {"file": 0, "start": 40, "end": 50},
            {"file": 0, "start": 60, "end": 70},
        ],
        "rotation": {"file": 0, "start": 80, "end": 200},
        "speed_dps": 50.0,
    }
    data.update(changes)
    return data


# =============================================================================
# EQUIVALENCIA ARCHIVO / MEMORIA
# =============================================================================


@pytest.mark.parametrize("seed", range(20))
def test_calibrar_desde_archivo_es_identico_a_memoria(tmp_path: Path, seed: int) -> None:
    path, sim, _ = _export(tmp_path, seed=seed)

    session, accel_model = load_manifest_session(path)

    assert accel_model is None
    from_file = calibrate(session).to_dict()
    in_memory = calibrate(sim.session).to_dict()
    assert json.dumps(from_file) == json.dumps(in_memory)


def test_segmentos_cargados_bit_a_bit(tmp_path: Path) -> None:
    path, sim, _ = _export(tmp_path)

    session, _ = load_manifest_session(path)

    np.testing.assert_array_equal(session.rotation_segment.gyro, sim.session.rotation_segment.gyro)
    for loaded, original in zip(session.static_poses, sim.session.static_poses):
        np.testing.assert_array_equal(loaded.accel, original.accel)
    assert session.commanded_speed == sim.session.commanded_speed


def test_segmentos_cargados_no_comparten_memoria_con_el_log(tmp_path: Path) -> None:
    path, _, _ = _export(tmp_path)

    session, _ = load_manifest_session(path)

    segments = [session.bias_segment, *session.static_poses, session.rotation_segment]
    for i, first in enumerate(segments):
        for second in segments[i + 1 :]:
            assert not np.may_share_memory(first.gyro, second.gyro)
            assert not np.may_share_memory(first.accel, second.accel)


def test_metadata_del_manifiesto_no_afecta_la_lectura(tmp_path: Path) -> None:
    _, _, manifest = _export(tmp_path)
    path = tmp_path / "with_metadata.json"

    write_manifest(path, manifest, {"tool_version": "1.0.0", "seed": 1})

    assert json.loads(path.read_text(encoding="utf-8"))["metadata"]["seed"] == 1
    assert read_manifest(path) == manifest


# =============================================================================
# VALIDACIÓN
# =============================================================================


def test_rangos_superpuestos(tmp_path: Path) -> None:
    _, _, manifest = _export(tmp_path)
    overlapping = SessionManifest(
        files=manifest.files,
        bias=manifest.bias,
        poses=(SegmentRange(0, manifest.bias.start + 5, manifest.bias.end + 5), *manifest.poses[1:]),
        rotation=manifest.rotation,
        speed_dps=manifest.speed_dps,
    )

    with pytest.raises(ManifestError, match="superponen"):
        load_session(overlapping, tmp_path)


@pytest.mark.parametrize("speed", [0.0, -10.0, "rápido"])
def test_velocidad_no_positiva(speed) -> None:
    with pytest.raises(ManifestError):
        manifest_from_dict(_manifest_dict(speed_dps=speed))


def test_menos_de_tres_poses() -> None:
    data = _manifest_dict()
    data["poses"] = data["poses"][:2]

    with pytest.raises(ManifestError, match="3 poses"):
        manifest_from_dict(data)


def test_rango_invertido_o_archivo_inexistente_en_la_lista() -> None:
    with pytest.raises(ManifestError):
        manifest_from_dict(_manifest_dict(bias={"file": 0, "start": 10, "end": 5}))
    with pytest.raises(ManifestError):
        manifest_from_dict(_manifest_dict(bias={"file": 1, "start": 0, "end": 5}))


def test_rango_fuera_del_archivo(tmp_path: Path) -> None:
    _, _, manifest = _export(tmp_path)
    beyond = SessionManifest(
        files=manifest.files,
        bias=manifest.bias,
        poses=manifest.poses,
        rotation=SegmentRange(0, manifest.rotation.start, manifest.rotation.end + 10_000),
        speed_dps=manifest.speed_dps,
    )

    with pytest.raises(ManifestError, match="termina"):
        load_session(beyond, tmp_path)


def test_pose_en_movimiento_lanza_not_static(tmp_path: Path) -> None:
    _, _, manifest = _export(tmp_path)
    moving = SessionManifest(
        files=manifest.files,
        bias=manifest.bias,
        poses=(*manifest.poses[:-1], SegmentRange(0, manifest.poses[-1].end, manifest.rotation.start)),
        rotation=manifest.rotation,
        speed_dps=manifest.speed_dps,
    )

    with pytest.raises(NotStaticError, match="poses"):
        load_session(moving, tmp_path)


def test_eje_vertical_se_rechaza_en_la_carga(tmp_path: Path) -> None:
    path, _, _ = _export(tmp_path, tilt_deg=0.0)

    with pytest.raises(GeometryDegenerateError):
        load_manifest_session(path)


def test_log_inexistente(tmp_path: Path) -> None:
    path = tmp_path / "manifest.json"
    path.write_text(json.dumps(_manifest_dict()), encoding="utf-8")

    with pytest.raises(CalibrationInputError, match="No existe"):
        load_manifest_session(path)


def test_json_invalido_cita_la_ubicacion(tmp_path: Path) -> None:
    path = tmp_path / "manifest.json"
    path.write_text('{"files": ["a.csv"],\n "poses": [', encoding="utf-8")

    with pytest.raises(ManifestError, match="línea 2"):
        read_manifest(path)


# =============================================================================
# MODELO DEL ACELERÓMETRO
# =============================================================================


def test_modelo_de_acelerometro_en_ms2(tmp_path: Path) -> None:
    path = tmp_path / "accel.json"
    path.write_text(json.dumps({"scale": [1.0, 1.0, 1.0], "bias": [0.981, 0.0, -0.0981], "unit": "m/s2"}), encoding="utf-8")

    model = read_accel_model(path)

    np.testing.assert_allclose(model.bias, [0.1, 0.0, -0.01])


def test_unidad_desconocida(tmp_path: Path) -> None:
    path = tmp_path / "accel.json"
    path.write_text(json.dumps({"scale": [1, 1, 1], "bias": [0, 0, 0], "unit": "mg"}), encoding="utf-8")

    with pytest.raises(CalibrationInputError, match="unidad"):
        read_accel_model(path)


def test_manifiesto_con_modelo_de_acelerometro(tmp_path: Path) -> None:
    _, _, manifest = _export(tmp_path)
    (tmp_path / "accel.json").write_text(
        json.dumps({"scale": [1.0, 1.0, 1.0], "bias": [0.0, 0.0, 0.0]}), encoding="utf-8"
    )
    data = {**manifest.to_dict(), "accel_model": "accel.json"}
    path = tmp_path / "manifest_accel.json"
    path.write_text(json.dumps(data), encoding="utf-8")

    session, accel_model = load_manifest_session(path)

    assert accel_model is not None
    np.testing.assert_array_equal(accel_model.scale, [1.0, 1.0, 1.0])
    assert calibrate(session, accel_model).accel is accel_model


def test_fuente_grabada_devuelve_una_sesion_por_manifiesto(tmp_path: Path) -> None:
    first_dir, second_dir = tmp_path / "a", tmp_path / "b"
    first_dir.mkdir()
    second_dir.mkdir()
    first, _, _ = _export(first_dir, seed=1)
    second, _, _ = _export(second_dir, seed=2)
    source = RecordedSessionSource([[first, second]])

    sessions = source.sessions_for(0, 50.0, repeats=1)

    assert len(sessions) == 2
    assert all(item.true_scale is None for item in sessions)
