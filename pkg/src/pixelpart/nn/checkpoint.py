"""Binary checkpoint codec.

Layout (little-endian):
    magic            8 bytes  b"PXPTCKPT"
    format version   u16 length + UTF-8 (e.g. "1.0")
    architecture     u32 length + UTF-8 (ArchitectureSpec descriptor)
    record count     u32
    per record       u16 name length + UTF-8 name, u8 rank, rank x u32 dims,
                     prod(dims) float32 values

Parameters are stored as float32, so a float32 model round-trips bit-exactly.
"""

import io
import logging
import struct
from pathlib import Path
from typing import BinaryIO, Dict, Tuple, Union

import numpy as np
import torch
from packaging import version as pkg_version

from ..base.exceptions import CheckpointError
from .models import ArchitectureSpec, ModelBackend, build_model

logger = logging.getLogger(__name__)

MAGIC = b"PXPTCKPT"
FORMAT_VERSION = "1.0"
PAYLOAD_DTYPE = np.dtype("<f4")

PathLike = Union[str, Path]


def save_checkpoint(model: ModelBackend, path: PathLike) -> None:
    """Write every named parameter of the model."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    state = model.state_dict()
    narrowed = sorted({str(t.dtype) for t in state.values() if t.dtype != torch.float32})
    if narrowed:
        logger.warning(
            "Checkpoint %s stores float32; parameters of dtype %s lose precision",
            path, ", ".join(narrowed),
        )

    with path.open("wb") as stream:
        stream.write(MAGIC)
        _write_string(stream, FORMAT_VERSION, "<H")
        _write_string(stream, model.descriptor, "<I")
        stream.write(struct.pack("<I", len(state)))
        for name, tensor in state.items():
            values = tensor.detach().cpu().numpy().astype(PAYLOAD_DTYPE, copy=False)
            _write_string(stream, name, "<H")
            stream.write(struct.pack("<B", values.ndim))
            stream.write(struct.pack(f"<{values.ndim}I", *values.shape))
            stream.write(values.tobytes(order="C"))
    logger.debug("Saved %d tensors to %s", len(state), path)


def read_checkpoint(path: PathLike) -> Tuple[str, Dict[str, torch.Tensor]]:
    """Return the architecture descriptor and the float32 tensors.

    Raises:
        CheckpointError: On a bad magic string, an incompatible format
            version, or a truncated file.
    """
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise CheckpointError(f"cannot read checkpoint: {exc}", str(path)) from exc

    stream = io.BytesIO(data)
    if _read(stream, len(MAGIC), path) != MAGIC:
        raise CheckpointError("not a pixelpart checkpoint (bad magic)", str(path))

    file_version = _read_string(stream, "<H", path)
    _check_version(file_version, path)
    descriptor = _read_string(stream, "<I", path)
    (count,) = struct.unpack("<I", _read(stream, 4, path))

    state: Dict[str, torch.Tensor] = {}
    for _ in range(count):
        name = _read_string(stream, "<H", path)
        (rank,) = struct.unpack("<B", _read(stream, 1, path))
        dims = struct.unpack(f"<{rank}I", _read(stream, 4 * rank, path))
        size = int(np.prod(dims, dtype=np.int64)) if rank else 1
        payload = _read(stream, size * PAYLOAD_DTYPE.itemsize, path)
        values = np.frombuffer(payload, dtype=PAYLOAD_DTYPE).reshape(dims)
        state[name] = torch.from_numpy(values.copy())
    return descriptor, state


def load_checkpoint(model: ModelBackend, path: PathLike) -> ModelBackend:
    """Load parameters into an existing model of the same architecture.

    Raises:
        CheckpointError: On architecture or parameter-set mismatch, plus
            everything read_checkpoint raises.
    """
    descriptor, state = read_checkpoint(path)
    if descriptor != model.descriptor:
        raise CheckpointError(
            "architecture mismatch",
            str(path),
            expected=model.descriptor,
            found=descriptor,
        )
    expected_names = set(model.state_dict())
    if set(state) != expected_names:
        raise CheckpointError(
            "parameter names do not match the model",
            str(path),
            missing=sorted(expected_names - set(state)),
            unexpected=sorted(set(state) - expected_names),
        )
    model.load_state_dict(state)
    return model


def load_model(path: PathLike) -> ModelBackend:
    """Build a model from the descriptor stored in a checkpoint, then load it."""
    descriptor, _ = read_checkpoint(path)
    try:
        architecture = ArchitectureSpec.from_descriptor(descriptor)
    except ValueError as exc:
        raise CheckpointError(f"unreadable architecture descriptor: {exc}", str(path)) from exc
    return load_checkpoint(build_model(architecture), path)


def _check_version(file_version: str, path: Path) -> None:
    try:
        found = pkg_version.parse(file_version)
    except pkg_version.InvalidVersion as exc:
        raise CheckpointError(f"invalid format version {file_version!r}", str(path)) from exc
    supported = pkg_version.parse(FORMAT_VERSION)
    if found.major != supported.major or found > supported:
        raise CheckpointError(
            f"unsupported format version {file_version} (reader supports {FORMAT_VERSION})",
            str(path),
        )


def _write_string(stream: BinaryIO, text: str, length_format: str) -> None:
    encoded = text.encode("utf-8")
    stream.write(struct.pack(length_format, len(encoded)))
    stream.write(encoded)


def _read_string(stream: BinaryIO, length_format: str, path: Path) -> str:
    (length,) = struct.unpack(length_format, _read(stream, struct.calcsize(length_format), path))
    return _read(stream, length, path).decode("utf-8")


def _read(stream: BinaryIO, size: int, path: Path) -> bytes:
    chunk = stream.read(size)
    if len(chunk) != size:
        raise CheckpointError(
            f"truncated checkpoint: wanted {size} bytes, found {len(chunk)}", str(path)
        )
    return chunk
