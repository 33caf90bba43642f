"""Oracle suite: cross-check the three contraction paths on seeded random states."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .asymptotics import thread_count
from .contraction import Path, contract, xi_table
from .errors import RdmError
from .operators import random_state
from .symmetry import Sector

VERIFY_TOL = 1e-9


@dataclass
class VerifyCase:
    case_id: str
    d: int
    n: int
    k: int
    sector: str
    seed: int
    max_deviation: float
    passed: bool
    error: str | None = None


def case_state(seed: int, d: int, n: int):
    """Random state for one (seed, d, n) cell; shared by both sectors and all k."""
    return random_state(d, np.random.default_rng([seed, d, n]))


def path_deviation(rho, n: int, k: int, sector) -> float:
    """Largest entrywise gap among the brute-force, recurrence and explicit results."""
    xi = xi_table(rho, n, sector)
    mats = [contract(rho, n, k, sector, p, xi=xi).matrix for p in Path]
    return max(float(np.max(np.abs(a - b))) for i, a in enumerate(mats) for b in mats[i + 1:])


def verify_cells(dims: Sequence[int], n_max: int, k_max: int, seeds: int) -> list[tuple]:
    cells = []
    for d in dims:
        for n in range(2, n_max + 1):
            for k in range(1, min(k_max, n - 1) + 1):
                for sector in Sector:
                    for seed in range(seeds):
                        cells.append((d, n, k, sector, seed))
    return cells


def run_case(cell: tuple, tol: float = VERIFY_TOL) -> VerifyCase:
    d, n, k, sector, seed = cell
    cid = f"d{d}-n{n}-k{k}-{sector.value}-s{seed}"
    try:
        dev = path_deviation(case_state(seed, d, n), n, k, sector)
    except RdmError as exc:
        return VerifyCase(cid, d, n, k, sector.value, seed, float("nan"), False, f"{type(exc).__name__}: {exc}")
    return VerifyCase(cid, d, n, k, sector.value, seed, dev, bool(dev < tol))


def run_verify(dims: Sequence[int], n_max: int, k_max: int, seeds: int,
               threads: int | None = None, tol: float = VERIFY_TOL) -> dict:
    """Every (d, n, k, sector, seed) cell with ``2 <= n <= n_max`` and ``1 <= k <= min(k_max, n-1)``."""
    cells = verify_cells(dims, n_max, k_max, seeds)
    workers = threads or thread_count()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            cases = list(pool.map(lambda c: run_case(c, tol), cells))
    else:
        cases = [run_case(c, tol) for c in cells]
    failed = sum(not c.passed for c in cases)
    devs = [c.max_deviation for c in cases if np.isfinite(c.max_deviation)]
    return {
        "summary": {
            "total": len(cases),
            "passed": len(cases) - failed,
            "failed": failed,
            "tolerance": tol,
            "max_deviation": max(devs) if devs else None,
        },
        "cases": [
            {**asdict(c), "max_deviation": c.max_deviation if np.isfinite(c.max_deviation) else None}
            for c in cases
        ],
    }
