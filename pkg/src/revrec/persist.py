"""Self-describing model files.

A model file is an ``.npz``-compatible zip archive: one ``.npy`` member per
array plus ``meta.json`` holding dims, hyperparameters and seeds. Members are
written with a fixed timestamp so identical models give identical bytes.
"""

from __future__ import annotations

import io
import json
import zipfile
from pathlib import Path
from typing import Any, Union

import numpy as np

from .errors import DataError

FORMAT = "revrec-bundle/1"
_EPOCH = (1980, 1, 1, 0, 0, 0)


def save_bundle(path: Union[str, Path], kind: str, meta: dict, arrays: dict[str, np.ndarray]) -> None:
    header = {"format": FORMAT, "kind": kind, "meta": meta}
    with zipfile.ZipFile(path, "w", compression=zipfile.ZIP_DEFLATED) as zf:
        info = zipfile.ZipInfo("meta.json", date_time=_EPOCH)
        info.compress_type = zipfile.ZIP_DEFLATED
        zf.writestr(info, json.dumps(header, sort_keys=True, indent=1))
        for name in sorted(arrays):
            buf = io.BytesIO()
            np.lib.format.write_array(buf, np.asarray(arrays[name]), allow_pickle=False)
            info = zipfile.ZipInfo(f"{name}.npy", date_time=_EPOCH)
            info.compress_type = zipfile.ZIP_DEFLATED
            zf.writestr(info, buf.getvalue())


def load_bundle(path: Union[str, Path], kind: str | None = None) -> tuple[dict[str, Any], dict[str, np.ndarray]]:
    """Return ``(meta, arrays)``; checks the declared kind when `kind` is given."""
    try:
        with zipfile.ZipFile(path) as zf:
            header = json.loads(zf.read("meta.json"))
            arrays = {}
            for name in zf.namelist():
                if name.endswith(".npy"):
                    with zf.open(name) as fh:
                        arrays[name[:-4]] = np.lib.format.read_array(
                            io.BytesIO(fh.read()), allow_pickle=False
                        )
    except (OSError, zipfile.BadZipFile, KeyError, json.JSONDecodeError) as exc:
        raise DataError(f"{path}: not a model file ({exc})") from exc
    if header.get("format") != FORMAT:
        raise DataError(f"{path}: unsupported format {header.get('format')!r}")
    if kind is not None and header.get("kind") != kind:
        raise DataError(f"{path}: expected a {kind} model, found {header.get('kind')!r}")
    return header["meta"], arrays


def bundle_kind(path: Union[str, Path]) -> str:
    with zipfile.ZipFile(path) as zf:
        return json.loads(zf.read("meta.json"))["kind"]


def pack_ragged(rows: list[list[int]]) -> tuple[np.ndarray, np.ndarray]:
    """CSR-style (indptr, indices) encoding of integer lists."""
    indptr = np.zeros(len(rows) + 1, dtype=np.int64)
    indptr[1:] = np.cumsum([len(r) for r in rows])
    indices = np.fromiter((x for r in rows for x in r), dtype=np.int64, count=int(indptr[-1]))
    return indptr, indices


def unpack_ragged(indptr: np.ndarray, indices: np.ndarray) -> list[list[int]]:
    return [indices[indptr[j] : indptr[j + 1]].tolist() for j in range(len(indptr) - 1)]
