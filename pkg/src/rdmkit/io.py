"""JSON matrix interchange and atomic file output.

Matrix files hold either ``{"dim": d, "re": [[...]], "im": [[...]]}`` or, for
a state diagonal in the standard basis, ``{"eigenvalues": [...]}``.
"""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .errors import BadArity
from .operators import SingleParticleState, as_operator


def matrix_to_dict(m) -> dict:
    m = as_operator(m)
    return {"dim": int(m.shape[0]), "re": m.real.tolist(), "im": m.imag.tolist()}


def matrix_from_dict(raw: dict) -> np.ndarray:
    if "eigenvalues" in raw:
        lam = np.asarray(raw["eigenvalues"], dtype=float)
        if lam.ndim != 1:
            raise BadArity("'eigenvalues' must be a flat list")
        return np.diag(lam).astype(complex)
    try:
        dim = int(raw["dim"])
        re = np.asarray(raw["re"], dtype=float)
        im = np.asarray(raw.get("im", np.zeros_like(re)), dtype=float)
    except KeyError as exc:
        raise BadArity(f"matrix JSON is missing field {exc}") from None
    if re.shape != (dim, dim) or im.shape != (dim, dim):
        raise BadArity(f"'re'/'im' must both be {dim}x{dim}, got {re.shape} and {im.shape}")
    return re + 1j * im


def read_state(path) -> SingleParticleState:
    with open(path) as fh:
        raw = json.load(fh)
    if "eigenvalues" in raw:
        return SingleParticleState.from_eigenvalues(raw["eigenvalues"])
    return SingleParticleState.from_matrix(matrix_from_dict(raw))


def write_state(path, state) -> None:
    m = state.matrix if isinstance(state, SingleParticleState) else state
    write_json(path, matrix_to_dict(m))


def write_text(path, text: str) -> None:
    """Write ``text`` to ``path`` through a temporary file and ``os.replace``."""
    path = Path(path)
    directory = path.parent if str(path.parent) else Path(".")
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=directory)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path, obj) -> None:
    write_text(path, json.dumps(obj, indent=2) + "\n")
