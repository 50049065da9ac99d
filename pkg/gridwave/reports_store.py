"""
JSON/CSV report storage.

Every report is written to a temporary file in the destination directory
and renamed into place, so readers never see a half-written file. JSON is
dumped with sorted keys and no timestamps, which keeps identical runs
byte-identical.
"""

import csv
import io
import json
import os
import tempfile
from pathlib import Path
from typing import Iterable, Optional, Sequence

from loguru import logger

from . import config
from .errors import ReportWriteError
from .models import RunConfig


def _atomic_write(path: Path, text: str) -> None:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    except OSError as e:
        raise ReportWriteError(f"cannot write {path}: {e}") from e
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        os.replace(tmp, path)
    except OSError as e:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise ReportWriteError(f"cannot write {path}: {e}") from e


def dumps(payload: dict) -> str:
    return json.dumps(payload, ensure_ascii=False, indent=2, sort_keys=True) + "\n"


def envelope(run: RunConfig, body: dict) -> dict:
    """Wrap a report body with version fields and the resolved invocation"""
    return {
        "schema_version": config.SCHEMA_VERSION,
        "artifact_version": config.ARTIFACT_VERSION,
        "config": run.to_dict(),
        **body,
    }


def save_json(path, payload: dict) -> None:
    _atomic_write(Path(path), dumps(payload))
    logger.debug(f"[store] wrote {path}")


def load_json(path) -> dict:
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


def save_csv(path, header: Optional[Sequence[str]], rows: Iterable[Sequence], comment: Optional[str] = None) -> None:
    buf = io.StringIO()
    if comment:
        for line in comment.splitlines():
            buf.write(f"# {line}\n")
    writer = csv.writer(buf, lineterminator="\n")
    if header:
        writer.writerow(header)
    writer.writerows(rows)
    _atomic_write(Path(path), buf.getvalue())
    logger.debug(f"[store] wrote {path}")


def save_text(path, text: str) -> None:
    _atomic_write(Path(path), text)
    logger.debug(f"[store] wrote {path}")
