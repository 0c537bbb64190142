"""Utilidades para exportar reportes JSON y datos de gráficas en CSV."""
from __future__ import annotations

import hashlib
import json
import logging
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, Iterable, Mapping

import pandas as pd

logger = logging.getLogger(__name__)


def _json_safe(value: Any) -> Any:
    """Reemplaza NaN e infinitos por None de forma recursiva."""
    if isinstance(value, float):
        return value if math.isfinite(value) else None
    if isinstance(value, Mapping):
        return {k: _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    return value


def config_hash(data: Mapping[str, Any]) -> str:
    """Identificador estable de una configuración (md5 del JSON canónico)."""
    canonical = json.dumps(data, sort_keys=True, default=str)
    return hashlib.md5(canonical.encode("utf-8")).hexdigest()[:16]


@dataclass(frozen=True)
class RunMetadata:
    """Cabecera común de todos los archivos generados."""

    tool_version: str
    command: str
    seed: int | None
    config_hash: str
    prng: str

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


class ReportExporter:
    """Escribe reportes y tablas en el directorio de salida con su metadata."""

    def __init__(self, out_dir: Path, metadata: RunMetadata, float_format: str = "%.17g") -> None:
        self.out_dir = Path(out_dir)
        self.metadata = metadata
        self.float_format = float_format

    def _target(self, name: str) -> Path:
        path = self.out_dir / name
        path.parent.mkdir(parents=True, exist_ok=True)
        return path

    def export_json(self, name: str, payload: Mapping[str, Any]) -> Path:
        """Escribe ``{"metadata": ..., **payload}`` con sangría."""
        path = self._target(name)
        document = _json_safe({"metadata": self.metadata.to_dict(), **payload})
        path.write_text(json.dumps(document, indent=2, allow_nan=False), encoding="utf-8")
        logger.info("Reporte JSON escrito en %s", path)
        return path

    def export_rows(self, name: str, rows: Iterable[Mapping[str, Any]]) -> Path:
        """Exporta filas a CSV precedidas por la metadata como comentarios ``#``."""
        df = pd.DataFrame(list(rows))
        path = self._target(name)
        logger.info("Exportando %d filas a %s", len(df), path)
        with path.open("w", encoding="utf-8", newline="") as handle:
            for key, value in self.metadata.to_dict().items():
                handle.write(f"# {key}: {value}\n")
            df.to_csv(handle, index=False, float_format=self.float_format)
        return path

    def export_summary(self, stem: str, payload: Mapping[str, Any], fmt: str = "json") -> Path:
        """Resumen en JSON o, con ``fmt="csv"``, aplanado en una fila."""
        if fmt == "csv":
            flat = pd.json_normalize(dict(payload), sep=".")
            return self.export_rows(f"{stem}.csv", flat.to_dict(orient="records"))
        return self.export_json(f"{stem}.json", payload)
