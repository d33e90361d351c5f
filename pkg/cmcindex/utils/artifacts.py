"""
Artifact writers

JSON reports (indent 2, "schema" first), CSV tables and the run manifest that
links every output with its SHA-256 digest. Timestamps appear in the manifest
only, so reports are byte-identical across reruns.
"""

import csv
import hashlib
import io
import json
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Iterable, Optional, Sequence

from pydantic import BaseModel

from cmcindex import __version__
from cmcindex.utils.logger import get_logger

logger = get_logger(__name__)

SCHEMA_VERSION = 1


def to_json(payload: BaseModel | dict | list) -> str:
    """Serialize a report model or plain payload; dicts get a leading "schema" key"""
    if isinstance(payload, BaseModel):
        text = payload.model_dump_json(by_alias=True, indent=2)
    else:
        if isinstance(payload, dict) and "schema" not in payload:
            payload = {"schema": SCHEMA_VERSION, **payload}
        text = json.dumps(payload, indent=2, ensure_ascii=False)
    return text + "\n"


def write_json(payload: BaseModel | dict | list, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(to_json(payload), encoding="utf-8")
    logger.debug(f"Wrote {path}", extra={"stage": "artifacts"})
    return path


def csv_text(rows: Iterable[dict], columns: Sequence[str]) -> str:
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=list(columns), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: _cell(row[k]) for k in columns})
    return buffer.getvalue()


def _cell(value: Any) -> Any:
    if isinstance(value, float):
        return repr(value)
    return value


def write_csv(rows: Iterable[dict], columns: Sequence[str], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(csv_text(rows, columns), encoding="utf-8")
    return path


def write_text(text: str, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    return path


def sha256(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


class Manifest:
    """
    Collects outputs and tolerances of one run

    Paths are recorded relative to the output directory.
    """

    def __init__(self, output_dir: str | Path, command: str, config: Optional[dict] = None):
        self.output_dir = Path(output_dir)
        self.command = command
        self.config = config or {}
        self.started = datetime.now(timezone.utc)
        self.outputs: list[dict] = []
        self.tolerances: dict[str, Any] = {}
        self.results: dict[str, Any] = {}

    def add(self, path: str | Path, kind: str) -> None:
        path = Path(path)
        self.outputs.append({
            "path": path.relative_to(self.output_dir).as_posix() if path.is_relative_to(self.output_dir) else str(path),
            "kind": kind,
            "sha256": sha256(path),
        })

    def record(self, **tolerances: Any) -> None:
        self.tolerances.update(tolerances)

    def to_dict(self) -> dict:
        return {
            "schema": SCHEMA_VERSION,
            "command": self.command,
            "version": __version__,
            "started": self.started.isoformat(),
            "finished": datetime.now(timezone.utc).isoformat(),
            "config": self.config,
            "tolerances": self.tolerances,
            "results": self.results,
            "outputs": self.outputs,
        }

    def write(self, name: str = "manifest.json") -> Path:
        path = write_json(self.to_dict(), self.output_dir / name)
        logger.info(f"Manifest with {len(self.outputs)} outputs written to {path}", extra={"stage": "artifacts"})
        return path
