"""Tests de la exportación de reportes."""
import json
from pathlib import Path

import pandas as pd

from gyro_calibration.infrastructure.file_exporter import (
    ReportExporter,
    RunMetadata,
    config_hash,
)


def _read_rows(path: Path) -> pd.DataFrame:
    """Lee un CSV de reporte saltando las líneas de metadatos."""
    return pd.read_csv(path, comment="#")


def _exporter(tmp_path: Path) -> ReportExporter:
    metadata = RunMetadata(tool_version="1.0.0", command="test", seed=7, config_hash="abc", prng="pcg64")
    return ReportExporter(tmp_path / "out", metadata)


def test_config_hash_estable_e_independiente_del_orden() -> None:
    assert config_hash({"a": 1, "b": [1, 2]}) == config_hash({"b": [1, 2], "a": 1})
    assert config_hash({"a": 1}) != config_hash({"a": 2})
    assert len(config_hash({})) == 16


def test_export_json_incluye_metadata_y_convierte_nan(tmp_path: Path) -> None:
    path = _exporter(tmp_path).export_json("report.json", {"value": float("nan"), "nested": {"x": [1.0, float("inf")]}})

    document = json.loads(path.read_text(encoding="utf-8"))
    assert document["metadata"]["seed"] == 7
    assert document["value"] is None
    assert document["nested"]["x"] == [1.0, None]


def test_export_rows_con_cabecera_de_comentarios(tmp_path: Path) -> None:
    path = _exporter(tmp_path).export_rows("rows.csv", [{"speed": 5.0, "k": 1.0}, {"speed": 10.0, "k": 1.1}])

    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "# tool_version: 1.0.0"
    assert "# seed: 7" in lines
    df = _read_rows(path)
    assert list(df.columns) == ["speed", "k"]
    assert df["k"].tolist() == [1.0, 1.1]


def test_export_summary_en_csv_aplana_el_resumen(tmp_path: Path) -> None:
    exporter = _exporter(tmp_path)

    path = exporter.export_summary("summary", {"runs": 3, "scale_error": {"x": {"median": 0.1}}}, fmt="csv")

    assert path.name == "summary.csv"
    df = _read_rows(path)
    assert df.loc[0, "scale_error.x.median"] == 0.1
    assert exporter.export_summary("summary", {"runs": 3}).name == "summary.json"
