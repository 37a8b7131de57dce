"""Tensor exchange with the watermark toolkit.

Both sides speak the NPY "version 1.0" container restricted to dtypes
``<f4`` (latents, density maps) and ``|u1`` (bit grids, masks), C order,
2-D or 3-D.  This module is the bridge's own small implementation of
that contract, so the bridge stays importable without the toolkit.
"""

from __future__ import annotations

import numpy as np

ALLOWED_DTYPES = ("<f4", "|u1")


def write_grid(arr: np.ndarray, path) -> None:
    arr = np.asarray(arr)
    if arr.ndim not in (2, 3):
        raise ValueError(f"only 2-D and 3-D grids are exchanged, got {arr.ndim}-D")
    if np.issubdtype(arr.dtype, np.floating):
        out = np.ascontiguousarray(arr, dtype="<f4")
    else:
        out = np.ascontiguousarray(arr, dtype=np.uint8)
    with open(path, "wb") as fh:
        np.save(fh, out, allow_pickle=False)


def read_grid(path) -> np.ndarray:
    arr = np.load(path, allow_pickle=False)
    dtype = arr.dtype.newbyteorder("<") if arr.dtype.byteorder == "=" else arr.dtype
    if dtype.str not in ALLOWED_DTYPES:
        raise ValueError(f"{path}: dtype {arr.dtype.str!r} outside the exchange contract")
    if arr.ndim not in (2, 3):
        raise ValueError(f"{path}: rank {arr.ndim} outside the exchange contract")
    return arr
