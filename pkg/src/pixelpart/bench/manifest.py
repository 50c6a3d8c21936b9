"""Run manifests and fixed-format result tables."""

import csv
import hashlib
from pathlib import Path
from typing import Any, Dict, Iterable, Mapping, Sequence, Union

import torch
from pydantic import BaseModel, Field

from .. import __version__

PathLike = Union[str, Path]


class RunManifest(BaseModel):
    """Enough to rerun an experiment and get the same rows on the same platform."""

    runner: str
    seed: int
    config: Dict[str, Any]
    inputs_sha256: Dict[str, str]
    parameters: Dict[str, Any] = Field(default_factory=dict)
    package_version: str = __version__

    def write(self, out_dir: PathLike) -> Path:
        path = Path(out_dir) / "manifest.json"
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.model_dump_json(indent=2) + "\n")
        return path


def tensor_digest(*tensors: torch.Tensor) -> str:
    """sha256 over dtype, shape and raw bytes of each tensor."""
    digest = hashlib.sha256()
    for tensor in tensors:
        array = tensor.detach().cpu().contiguous().numpy()
        digest.update(f"{array.dtype.str}{array.shape}".encode("ascii"))
        digest.update(array.tobytes())
    return digest.hexdigest()


def format_cell(value: Any) -> str:
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, float):
        return f"{value:.6f}"
    return str(value)


def write_table(path: PathLike, columns: Sequence[str], rows: Iterable[Mapping[str, Any]]) -> Path:
    """CSV with a fixed column order; floats as 6-decimal fixed point."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as stream:
        writer = csv.writer(stream)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([format_cell(row[column]) for column in columns])
    return path
