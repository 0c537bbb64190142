"""Tests de extremo a extremo de la CLI."""
import json
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from config import TESTING_CONFIG
from gyro_calibration.main import EXIT_INPUT, EXIT_NUMERIC, EXIT_OK, SEED_ENV, main

REFERENCE_SCALE = [1.033, 0.811, 1.151]


def _scenario(tmp_path: Path, name: str = "scenario.json", **fields) -> Path:
    data = {
        "true_gyro": {"scale": REFERENCE_SCALE, "bias": [0.5, -1.0, 2.0]},
        "speed": 30.0,
        "seed": 7,
    }
    data.update(fields)
    path = tmp_path / name
    path.write_text(json.dumps(data), encoding="utf-8")
    return path


def _run(*argv: str) -> int:
    return main(list(argv), config=TESTING_CONFIG)


def _read_json(path: Path) -> dict:
    return json.loads(path.read_text(encoding="utf-8"))


def _read_rows(path: Path) -> pd.DataFrame:
    return pd.read_csv(path, comment="#")


# =============================================================================
# SIMULATE + CALIBRATE
# =============================================================================


def test_simular_y_calibrar_recupera_la_escala(tmp_path: Path) -> None:
    out = tmp_path / "out"
    assert _run("simulate", str(_scenario(tmp_path)), "--out", str(out)) == EXIT_OK
    assert {p.name for p in out.iterdir()} >= {"session_log.csv", "manifest.json", "ground_truth.json"}

    assert _run("calibrate", str(out / "manifest.json"), "--out", str(out / "cal")) == EXIT_OK

    result = _read_json(out / "cal" / "calibration_result.json")
    np.testing.assert_allclose(result["scale"], REFERENCE_SCALE, rtol=0.01)
    assert result["metadata"]["command"] == "calibrate"
    assert result["reconstructed_speed_post_dps"] == pytest.approx(30.0, rel=1e-9)
    assert result["accel"]["unit"] == "g"
    dots = _read_rows(out / "cal" / "dot_products.csv")
    assert len(dots) == 4
    assert dots["after_rel"].abs().max() < dots["before_rel"].abs().max()


def test_calibrar_con_segmentacion_automatica(tmp_path: Path) -> None:
    out = tmp_path / "out"
    scenario = _scenario(tmp_path, samples_per_segment=300, rotation_samples=600)
    assert _run("simulate", str(scenario), "--out", str(out)) == EXIT_OK

    code = _run("calibrate", "--auto-segment", str(out / "session_log.csv"), "--speed", "30", "--out", str(out / "auto"))

    assert code == EXIT_OK
    proposed = _read_json(out / "auto" / "manifest_proposed.json")
    assert len(proposed["poses"]) == 4
    result = _read_json(out / "auto" / "calibration_result.json")
    np.testing.assert_allclose(result["scale"], REFERENCE_SCALE, rtol=0.01)


def test_accel_en_ms2(tmp_path: Path) -> None:
    out = tmp_path / "out"
    _run("simulate", str(_scenario(tmp_path)), "--out", str(out))

    assert _run("calibrate", str(out / "manifest.json"), "--out", str(out / "cal"), "--accel-unit", "m/s2") == EXIT_OK

    assert _read_json(out / "cal" / "calibration_result.json")["accel"]["unit"] == "m/s2"


def test_misma_semilla_mismos_archivos(tmp_path: Path) -> None:
    scenario = _scenario(tmp_path)
    first, second = tmp_path / "a", tmp_path / "b"

    _run("simulate", str(scenario), "--out", str(first))
    _run("simulate", str(scenario), "--out", str(second))

    for name in ("session_log.csv", "manifest.json", "ground_truth.json"):
        assert (first / name).read_bytes() == (second / name).read_bytes()


def test_semilla_de_entorno_y_de_linea_de_comandos(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> None:
    scenario = _scenario(tmp_path)
    monkeypatch.setenv(SEED_ENV, "1234")

    _run("simulate", str(scenario), "--out", str(tmp_path / "env"))
    _run("simulate", str(scenario), "--out", str(tmp_path / "cli"), "--seed", "99")

    assert _read_json(tmp_path / "env" / "ground_truth.json")["scenario"]["seed"] == 1234
    assert _read_json(tmp_path / "cli" / "ground_truth.json")["metadata"]["seed"] == 99


def test_semilla_de_entorno_invalida(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.setenv(SEED_ENV, "abc")

    assert _run("simulate", str(_scenario(tmp_path)), "--out", str(tmp_path / "out")) == EXIT_INPUT


# =============================================================================
# CÓDIGOS DE SALIDA
# =============================================================================


def test_json_mal_formado_sale_con_2(tmp_path: Path, capsys: pytest.CaptureFixture) -> None:
    path = tmp_path / "broken.json"
    path.write_text('{"speed": 30,,}', encoding="utf-8")

    assert _run("simulate", str(path), "--out", str(tmp_path / "out")) == EXIT_INPUT
    assert "línea 1" in capsys.readouterr().err


def test_manifiesto_inexistente_sale_con_2(tmp_path: Path) -> None:
    assert _run("calibrate", str(tmp_path / "no_existe.json"), "--out", str(tmp_path / "out")) == EXIT_INPUT


def test_calibrar_sin_entrada_sale_con_2(tmp_path: Path) -> None:
    assert _run("calibrate", "--out", str(tmp_path / "out")) == EXIT_INPUT


def test_unit_scale_invalido_sale_con_2(tmp_path: Path) -> None:
    out = tmp_path / "out"
    _run("simulate", str(_scenario(tmp_path)), "--out", str(out))

    code = _run("calibrate", str(out / "manifest.json"), "--out", str(out), "--unit-scale", "0.001")

    assert code == EXIT_INPUT


def test_eje_paralelo_a_la_gravedad_sale_con_3(tmp_path: Path) -> None:
    out = tmp_path / "out"
    _run("simulate", str(_scenario(tmp_path, tilt_deg=0.0)), "--out", str(out))

    assert _run("calibrate", str(out / "manifest.json"), "--out", str(out / "cal")) == EXIT_NUMERIC


def test_argumentos_invalidos_salen_con_2() -> None:
    with pytest.raises(SystemExit) as excinfo:
        _run("montecarlo")
    assert excinfo.value.code == 2


# =============================================================================
# SWEEP Y MONTECARLO
# =============================================================================


def test_barrido_sin_ruido(tmp_path: Path) -> None:
    config = {
        "speeds": {"start": 5, "stop": 50, "step": 15},
        "scenario": {"noise_sigma_gyro": 0.0, "noise_sigma_accel": 0.0, "seed": 2},
    }
    path = tmp_path / "sweep.json"
    path.write_text(json.dumps(config), encoding="utf-8")
    out = tmp_path / "sweep"

    assert _run("sweep", str(path), "--out", str(out)) == EXIT_OK

    report = _read_json(out / "sweep_report.json")
    assert report["failures"] == 0
    for point in report["points"]:
        assert point["reconstructed_post_dps"] == pytest.approx(point["speed_dps"], rel=1e-9)
    speeds = _read_rows(out / "sweep_speed.csv")
    assert speeds["commanded"].tolist() == [5.0, 20.0, 35.0, 50.0]
    assert len(_read_rows(out / "sweep_estimates.csv")) == 5 + 3
    assert set(report["linearity"]) == {"x", "y", "z"}


def test_montecarlo_escribe_una_fila_por_corrida(tmp_path: Path) -> None:
    out = tmp_path / "mc"

    assert _run("montecarlo", str(_scenario(tmp_path)), "--runs", "20", "--out", str(out)) == EXIT_OK

    summary = _read_json(out / "montecarlo_summary.json")
    assert summary["runs"] == 20
    assert summary["policy"] == "redraw"
    assert summary["metadata"]["seed"] == 7
    runs = _read_rows(out / "montecarlo_runs.csv")
    assert len(runs) == 20
    assert (runs["status"] == "ok").all()
    assert len(_read_rows(out / "montecarlo_boxplot.csv")) == 5


def test_montecarlo_con_rejilla_y_resumen_csv(tmp_path: Path) -> None:
    out = tmp_path / "grid"

    code = _run(
        "montecarlo",
        str(_scenario(tmp_path)),
        "--runs", "5",
        "--policy", "fixed",
        "--sigmas", "0,30",
        "--speeds", "5,200",
        "--format", "csv",
        "--out", str(out),
    )

    assert code == EXIT_OK
    grid = _read_rows(out / "noise_grid.csv")
    assert len(grid) == 4
    assert sorted(set(grid["sigma_dps"])) == [0.0, 30.0]
    assert len(_read_rows(out / "noise_grid_estimates.csv")) == 4 * 5 - int(grid["failures"].sum())
    assert (out / "montecarlo_summary.csv").is_file()
