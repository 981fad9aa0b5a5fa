"""Run artifact I/O: atomic writes, canonical JSON and content hashes.

Every artifact a command produces goes through these helpers so reruns
produce byte-identical files and a crash never leaves a half-written file.
"""

import hashlib
import json
import logging
import os
import shutil
import tempfile
from pathlib import Path
from typing import Any, Dict, Union

from warm_freeze.exceptions import ArtifactError

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def atomic_write_bytes(path: PathLike, data: bytes) -> None:
    """Write bytes via a temporary file in the target directory, then move.

    Raises:
        ArtifactError: If the write fails
    """
    target = Path(path)
    tmp_path = None
    try:
        target.parent.mkdir(parents=True, exist_ok=True)
        with tempfile.NamedTemporaryFile(
            mode="wb", delete=False, dir=str(target.parent), suffix=".tmp"
        ) as tmp:
            tmp.write(data)
            tmp_path = tmp.name
        shutil.move(tmp_path, target)
    except OSError as e:
        if tmp_path and os.path.exists(tmp_path):
            os.unlink(tmp_path)
        raise ArtifactError(f"Failed to write {target}: {e}", str(target)) from e
    logger.debug("Wrote %d bytes to %s", len(data), target)


def canonical_json(data: Any) -> str:
    """Deterministic JSON text: sorted keys, two-space indent, trailing newline."""
    return json.dumps(data, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def write_json(path: PathLike, data: Any) -> None:
    """Atomically write canonical JSON."""
    atomic_write_bytes(path, canonical_json(data).encode("utf-8"))


def write_text(path: PathLike, text: str) -> None:
    """Atomically write UTF-8 text."""
    atomic_write_bytes(path, text.encode("utf-8"))


def read_json(path: PathLike) -> Dict[str, Any]:
    """Read a JSON object.

    Raises:
        ArtifactError: If the file is missing, unreadable or not a JSON object
    """
    target = Path(path)
    try:
        with open(target, "r", encoding="utf-8") as f:
            data = json.load(f)
    except FileNotFoundError as e:
        raise ArtifactError(f"Artifact not found: {target}", str(target)) from e
    except (OSError, json.JSONDecodeError) as e:
        raise ArtifactError(f"Failed to read {target}: {e}", str(target)) from e
    if not isinstance(data, dict):
        raise ArtifactError(f"{target} does not contain a JSON object", str(target))
    return data


def read_bytes(path: PathLike) -> bytes:
    """Read a binary artifact.

    Raises:
        ArtifactError: If the file is missing or unreadable
    """
    target = Path(path)
    try:
        return target.read_bytes()
    except FileNotFoundError as e:
        raise ArtifactError(f"Artifact not found: {target}", str(target)) from e
    except OSError as e:
        raise ArtifactError(f"Failed to read {target}: {e}", str(target)) from e


def sha256_file(path: PathLike) -> str:
    """Hex SHA-256 of a file's contents."""
    return hashlib.sha256(read_bytes(path)).hexdigest()
