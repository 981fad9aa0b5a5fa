"""Model checkpoints: JSON header plus a little-endian float64 blob.

Layout::

    b"CDWM" | u32 version | u32 header_length | header (UTF-8 JSON, sorted keys)
    | every parameter then every buffer, as '<f8', in header order

The header records the architecture, adapter placement, block trainability
and caller metadata, so load-then-save reproduces the file byte for byte.
"""

import json
import logging
import struct
from typing import Any, Dict, Optional, Tuple

import numpy as np

from warm_freeze.artifacts import PathLike, atomic_write_bytes, read_bytes
from warm_freeze.config.models import ModelConfig
from warm_freeze.exceptions import CheckpointError, MagicMismatchError
from warm_freeze.nn.network import NetworkModel

logger = logging.getLogger(__name__)

MAGIC = b"CDWM"
CHECKPOINT_VERSION = 1
_HEADER = struct.Struct("<4sII")


def _header(model: NetworkModel, metadata: Dict[str, Any]) -> Dict[str, Any]:
    return {
        "format_version": CHECKPOINT_VERSION,
        "model": model.config.model_dump(mode="json"),
        "lora": [
            {"block": i, "rank": block.lora.rank, "alpha": block.lora.alpha}
            for i, block in enumerate(model.blocks)
            if block.lora is not None
        ],
        "blocks_trainable": [model.group_trainable(i) for i in range(model.n_blocks)],
        "tensors": [{"name": n, "shape": list(a.shape)} for n, a in model.state_arrays()],
        "metadata": metadata,
    }


def encode_checkpoint(model: NetworkModel, metadata: Optional[Dict[str, Any]] = None) -> bytes:
    header = json.dumps(
        _header(model, metadata or {}), sort_keys=True, separators=(",", ":")
    ).encode("utf-8")
    blob = b"".join(
        np.ascontiguousarray(a, dtype="<f8").tobytes() for _, a in model.state_arrays()
    )
    return _HEADER.pack(MAGIC, CHECKPOINT_VERSION, len(header)) + header + blob


def decode_checkpoint(data: bytes) -> Tuple[NetworkModel, Dict[str, Any]]:
    """Rebuild a model from checkpoint bytes.

    Raises:
        MagicMismatchError: If the magic bytes are wrong
        CheckpointError: If the file is truncated or inconsistent with its header
    """
    if len(data) < _HEADER.size:
        raise CheckpointError("Checkpoint truncated before the header")
    magic, version, header_length = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise MagicMismatchError(f"Bad checkpoint magic {magic!r}, expected {MAGIC!r}")
    if version != CHECKPOINT_VERSION:
        raise CheckpointError(f"Unsupported checkpoint version {version}")
    body_start = _HEADER.size + header_length
    try:
        header = json.loads(data[_HEADER.size : body_start].decode("utf-8"))
        config = ModelConfig.model_validate(header["model"])
    except (UnicodeDecodeError, ValueError, KeyError) as e:
        raise CheckpointError(f"Malformed checkpoint header: {e}") from e

    # initial weights are overwritten below; any generator will do
    model = NetworkModel(config, np.random.default_rng(0))
    for entry in header["lora"]:
        model.attach_lora(
            [entry["block"]], int(entry["rank"]), np.random.default_rng(0), entry["alpha"]
        )
    for index, trainable in enumerate(header["blocks_trainable"]):
        model.set_group_trainable(index, bool(trainable))

    arrays = model.state_arrays()
    expected = [{"name": n, "shape": list(a.shape)} for n, a in arrays]
    if expected != header["tensors"]:
        raise CheckpointError("Checkpoint tensors do not match the rebuilt architecture")
    total = sum(a.size for _, a in arrays)
    body = data[body_start:]
    if len(body) != total * 8:
        raise CheckpointError(f"Checkpoint blob holds {len(body)} bytes, expected {total * 8}")
    values = np.frombuffer(body, dtype="<f8")
    offset = 0
    for _, array in arrays:
        array[...] = values[offset : offset + array.size].reshape(array.shape)
        offset += array.size
    return model, header["metadata"]


def save_checkpoint(
    model: NetworkModel, path: PathLike, metadata: Optional[Dict[str, Any]] = None
) -> None:
    """Write a checkpoint atomically."""
    blob = encode_checkpoint(model, metadata)
    atomic_write_bytes(path, blob)
    logger.info("Saved checkpoint to %s (%d bytes)", path, len(blob))


def load_checkpoint(path: PathLike) -> Tuple[NetworkModel, Dict[str, Any]]:
    """Read a checkpoint written by :func:`save_checkpoint`.

    Raises:
        ArtifactError: If the file is missing
        CheckpointError: If the contents are malformed
    """
    model, metadata = decode_checkpoint(read_bytes(path))
    logger.debug("Loaded checkpoint from %s", path)
    return model, metadata
