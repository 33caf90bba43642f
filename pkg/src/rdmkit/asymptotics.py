"""Thermodynamic-limit approximants, equivalence metrics and the sweep harness."""

from __future__ import annotations

import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path as FsPath
from typing import Sequence

import numpy as np

from .contraction import SpectralContraction, XiTable, spectral_contraction, xi_table
from .errors import BadArity, DegenerateState, NormBoundViolated, NotInvertible, RdmError
from .operators import (
    SingleParticleState,
    as_operator,
    as_state,
    int_log,
    kron_all,
    operator_norm,
    tensor_power,
    trace_norm,
)
from .symmetry import Sector, sector_trace, symmetrizer

NORM_SLACK = 1e-12
PANEL_SIZE = 16


# -- approximants ------------------------------------------------------------

def _sigma1_approx_weights(lam: np.ndarray, n: int, sector: Sector, xi: XiTable) -> np.ndarray:
    s = xi.ratio(n + 1)
    if sector.is_fermi:
        return s * lam / ((n + 1) * (1.0 + s * lam))
    if s * float(np.max(lam)) >= 1.0:
        raise NotInvertible(f"s_{n + 1} * ||rho|| = {s * np.max(lam):.6g} >= 1; I - s rho is not invertible")
    return s * lam / ((n + 1) * (1.0 - s * lam))


def sigma1_asymptotic(rho, n: int, sector, xi: XiTable | None = None) -> np.ndarray:
    """Closed-form one-particle approximant.

    Fermi: ``(n+1)^-1 s rho (I + s rho)^-1``; Bose: ``(n+1)^-1 s rho (I - s rho)^-1``,
    with ``s = xi_n / xi_{n+1}``.
    """
    sector = Sector.coerce(sector)
    state = as_state(rho)
    if xi is None or xi.N < n + 1:
        xi = xi_table(state, n + 1, sector)
    w = _sigma1_approx_weights(state.eigenvalues, n, sector, xi)
    return state.apply(lambda _: w)


def sigmak_product_approx(sigma1, k: int, sector) -> np.ndarray:
    """``k! sigma1 (.) ... (.) sigma1`` (k factors)."""
    sector = Sector.coerce(sector)
    s1 = as_operator(sigma1)
    if k < 1:
        raise BadArity(f"k must be >= 1, got {k}")
    if k == 1:
        return s1.copy()
    d = s1.shape[0]
    p = symmetrizer(sector, d, k)
    return math.factorial(k) * (p @ tensor_power(s1, k) @ p)


def sigmak_tensor_approx(sigma1, k: int) -> np.ndarray:
    return tensor_power(sigma1, k)


def sigmak_product_spectral(sigma1: SpectralContraction, k: int) -> SpectralContraction:
    """Spectral form of ``k! sigma1 (.) ... (.) sigma1`` on the occupation multisets of order k.

    ``sigma1`` must be diagonal in the same eigenbasis (as every one-particle
    contraction of a product state is).
    """
    if sigma1.k != 1:
        raise BadArity("expected a one-particle spectral contraction")
    from .contraction import occupation_multisets

    ms = occupation_multisets(sigma1.d, k, sigma1.sector)
    w = math.factorial(k) * np.prod(sigma1.weights[ms], axis=1)
    return SpectralContraction(sigma1.sector, sigma1.n, k, ms, w, sigma1.eigenbasis,
                               sigma1.normalized, sigma1.xi_n)


# -- metrics -----------------------------------------------------------------

def strong_metric(a, b) -> float:
    """Trace-norm distance."""
    a, b = as_operator(a), as_operator(b)
    if a.shape != b.shape:
        raise BadArity(f"shape mismatch {a.shape} vs {b.shape}")
    return trace_norm(a - b)


def spectral_strong_metric(a: SpectralContraction, b: SpectralContraction) -> float:
    """Trace-norm distance of two operators sharing the same eigenvectors."""
    if a.k != b.k or a.sector is not b.sector or not np.array_equal(a.multisets, b.multisets):
        raise BadArity("spectral operators do not share an eigenbasis labelling")
    return float(np.sum(np.abs(a.weights - b.weights)))


@dataclass(frozen=True)
class ObservableFamily:
    """Product observable ``C_1 (x) ... (x) C_k`` with every ``||C_i|| <= 1``."""

    factors: tuple

    def __post_init__(self):
        mats = tuple(as_operator(c) for c in self.factors)
        if not mats:
            raise BadArity("an observable needs at least one factor")
        for c in mats:
            nrm = operator_norm(c)
            if nrm > 1.0 + NORM_SLACK:
                raise NormBoundViolated(f"factor has operator norm {nrm:.15g} > 1")
        object.__setattr__(self, "factors", mats)

    @property
    def k(self) -> int:
        return len(self.factors)

    def product(self) -> np.ndarray:
        return kron_all(self.factors)


def observable_panel(d: int, k: int, seed: int, size: int = PANEL_SIZE) -> list[ObservableFamily]:
    """Seeded panel of product observables.

    Generator: ``numpy.random.default_rng([seed, d, k])`` (PCG64).  For each
    observable and each of its k factors draw a complex Gaussian ``G`` of shape
    (d, d), form ``H = (G + G^dagger) / 2`` and rescale to unit operator norm.
    """
    rng = np.random.default_rng([seed, d, k])
    panel = []
    for _ in range(size):
        factors = []
        for _ in range(k):
            g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
            h = (g + g.conj().T) / 2
            factors.append(h / operator_norm(h))
        panel.append(ObservableFamily(tuple(factors)))
    return panel


def weak_metric(a, b, observables: Sequence[ObservableFamily]) -> float:
    """``max |Tr (A - B) C|`` over the product observables."""
    a, b = as_operator(a), as_operator(b)
    if a.shape != b.shape:
        raise BadArity(f"shape mismatch {a.shape} vs {b.shape}")
    diff = a - b
    best = 0.0
    for obs in observables:
        if not isinstance(obs, ObservableFamily):
            obs = ObservableFamily(tuple(obs))
        c = obs.product()
        if c.shape != diff.shape:
            raise BadArity(f"observable acts on dimension {c.shape[0]}, operators on {diff.shape[0]}")
        # Tr(X C) without forming the product
        best = max(best, abs(np.sum(diff * c.T)))
    return float(best)


def product_vs_tensor_weak_metric(sigma1, k: int, sector, observables: Sequence[ObservableFamily]) -> float:
    """Weak distance between ``k! sigma1^(.)k`` and ``sigma1^(x)k`` via the cycle formula.

    With ``B_r = sigma1 C_r`` the first term is ``k! Tr[(B_1 (x) ... (x) B_k) P]``
    and the second is ``prod_r Tr B_r``; nothing on the k-particle space is built.
    """
    sector = Sector.coerce(sector)
    s1 = as_operator(sigma1)
    best = 0.0
    for obs in observables:
        if obs.k != k:
            raise BadArity(f"observable has {obs.k} factors, expected {k}")
        bs = [s1 @ c for c in obs.factors]
        graded = sector_trace(bs, sector)
        plain = np.prod([np.trace(b) for b in bs])
        best = max(best, abs(graded - plain))
    return float(best)


# -- assumptions -------------------------------------------------------------

def default_epsilon(density: float) -> float:
    return min(density / (density + 1.0) + 0.05, 0.99)


@dataclass(frozen=True)
class AssumptionCheck:
    ok: bool
    product: float
    bound: float
    s_ratio: float

    def __bool__(self) -> bool:
        return self.ok


def check_assumptions(rho, n: int, sector, xi: XiTable | None = None,
                      epsilon: float = 0.99) -> AssumptionCheck:
    """Test ``s ||rho|| <= 2`` (Fermi) or ``s ||rho|| <= epsilon`` (Bose).

    The ratio used is ``s_{n+1} = xi_n / xi_{n+1}``, the one entering the
    approximants; it is never smaller than ``s_n``.  A failed check is a
    value, not an error.
    """
    sector = Sector.coerce(sector)
    state = as_state(rho)
    if xi is None or xi.N < n + 1:
        xi = xi_table(state, n + 1, sector)
    s = xi.ratio(n + 1)
    product = s * state.norm
    bound = 2.0 if sector.is_fermi else float(epsilon)
    return AssumptionCheck(bool(product <= bound), float(product), bound, float(s))


# -- spectrum families -------------------------------------------------------

@dataclass(frozen=True)
class Uniform:
    def eigenvalues(self, volume: int) -> np.ndarray:
        return np.full(volume, 1.0 / volume)

    def to_dict(self) -> dict:
        return {"type": "uniform"}


@dataclass(frozen=True)
class Thermal:
    """``lambda_i proportional to exp(-beta * i * level_spacing)``, i = 0..V-1, trace 1."""

    beta: float
    level_spacing: float

    def eigenvalues(self, volume: int) -> np.ndarray:
        lam = np.exp(-self.beta * self.level_spacing * np.arange(volume))
        return lam / lam.sum()

    def to_dict(self) -> dict:
        return {"type": "thermal", "beta": self.beta, "level_spacing": self.level_spacing}


@dataclass(frozen=True)
class ExplicitEigenvalues:
    """Eigenvalues read from a JSON file mapping each volume to a list.

    File layout: ``{"20": [...], "40": [...]}``; a list's length must equal
    its volume.  Values are used as given (no renormalisation).
    """

    file: str
    table: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        if not self.table:
            with open(self.file) as fh:
                raw = json.load(fh)
            object.__setattr__(self, "table", {int(v): np.asarray(x, dtype=float) for v, x in raw.items()})

    def eigenvalues(self, volume: int) -> np.ndarray:
        if volume not in self.table:
            raise BadArity(f"no eigenvalues for volume {volume} in {self.file}")
        lam = self.table[volume]
        if lam.size != volume:
            raise BadArity(f"volume {volume} has {lam.size} eigenvalues")
        return lam

    def to_dict(self) -> dict:
        return {"type": "explicit", "file": self.file}


def spectrum_from_dict(family) -> Uniform | Thermal | ExplicitEigenvalues:
    if isinstance(family, (Uniform, Thermal, ExplicitEigenvalues)):
        return family
    if isinstance(family, str):
        family = {"type": family}
    kind = str(family.get("type", "")).lower()
    if kind == "uniform":
        return Uniform()
    if kind == "thermal":
        return Thermal(float(family["beta"]), float(family["level_spacing"]))
    if kind in ("explicit", "expliciteigenvalues"):
        return ExplicitEigenvalues(str(family["file"]))
    raise ValueError(f"unknown spectrum family {family!r}")


# -- sweep -------------------------------------------------------------------

def particle_number(density: float, volume: int) -> int:
    return int(math.floor(density * volume + 0.5))


@dataclass(frozen=True)
class SweepConfig:
    sector: Sector
    density: float
    volumes: tuple
    spectrum_family: Uniform | Thermal | ExplicitEigenvalues
    k_max: int = 2
    observable_seed: int = 0
    epsilon: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "sector", Sector.coerce(self.sector))
        object.__setattr__(self, "volumes", tuple(int(v) for v in self.volumes))
        object.__setattr__(self, "spectrum_family", spectrum_from_dict(self.spectrum_family))
        if not self.density > 0:
            raise ValueError(f"density must be positive, got {self.density}")
        if self.k_max < 1:
            raise ValueError(f"k_max must be >= 1, got {self.k_max}")
        if not self.volumes:
            raise ValueError("volumes must be non-empty")
        if any(b <= a for a, b in zip(self.volumes, self.volumes[1:])):
            raise ValueError(f"volumes must be strictly increasing: {self.volumes}")
        for v in self.volumes:
            if particle_number(self.density, v) < self.k_max + 1:
                raise ValueError(f"volume {v} gives n = {particle_number(self.density, v)} < k_max + 1")

    @property
    def bose_epsilon(self) -> float:
        return default_epsilon(self.density) if self.epsilon is None else float(self.epsilon)

    @classmethod
    def from_dict(cls, raw: dict, base_dir: str | os.PathLike | None = None) -> "SweepConfig":
        family = raw["spectrum_family"]
        if isinstance(family, dict) and family.get("file") and base_dir is not None:
            path = FsPath(family["file"])
            if not path.is_absolute():
                family = dict(family, file=str(FsPath(base_dir) / path))
        return cls(
            sector=raw["sector"],
            density=float(raw["density"]),
            volumes=tuple(raw["volumes"]),
            spectrum_family=family,
            k_max=int(raw.get("k_max", 2)),
            observable_seed=int(raw.get("observable_seed", 0)),
            epsilon=raw.get("epsilon"),
        )

    @classmethod
    def from_json(cls, path) -> "SweepConfig":
        with open(path) as fh:
            raw = json.load(fh)
        return cls.from_dict(raw, base_dir=FsPath(path).parent)

    def to_dict(self) -> dict:
        return {
            "sector": self.sector.value,
            "density": self.density,
            "volumes": list(self.volumes),
            "spectrum_family": self.spectrum_family.to_dict(),
            "k_max": self.k_max,
            "observable_seed": self.observable_seed,
            "epsilon": self.epsilon,
        }


@dataclass
class SweepRecord:
    volume: int
    n: int
    sector: Sector
    s_ratio: float = float("nan")
    assumption_ok: bool = False
    strong_metric_sigma1: float = float("nan")
    strong_metric_sigmak: dict = field(default_factory=dict)
    weak_metric_k: dict = field(default_factory=dict)
    runtime_ms: float = 0.0
    sigma1_norm: float = float("nan")
    assumption_product: float = float("nan")
    min_weight: float = float("nan")
    error: str | None = None

    @property
    def failed(self) -> bool:
        return self.error is not None


def sweep_point(config: SweepConfig, volume: int) -> SweepRecord:
    """Evaluate one volume; errors are caught and stored on the record."""
    sector = config.sector
    n = particle_number(config.density, volume)
    rec = SweepRecord(volume=volume, n=n, sector=sector)
    start = time.perf_counter()
    try:
        lam = config.spectrum_family.eigenvalues(volume)
        state = SingleParticleState.from_eigenvalues(lam)
        xi = xi_table(state, n + 1, sector)
        if not xi[n] > 0:
            raise DegenerateState(f"xi_{n} = 0 for volume {volume}")
        rec.s_ratio = xi.ratio(n + 1)
        check = check_assumptions(state, n, sector, xi, config.bose_epsilon)
        rec.assumption_ok = check.ok
        rec.assumption_product = check.product

        exact1 = spectral_contraction(state, n, 1, sector, xi)
        sigma1 = state.apply(lambda _: exact1.weights)
        rec.sigma1_norm = exact1.operator_norm
        rec.strong_metric_sigma1 = strong_metric(sigma1, sigma1_asymptotic(state, n, sector, xi))
        min_weight = float(exact1.weights.min())
        for k in range(2, config.k_max + 1):
            exact = spectral_contraction(state, n, k, sector, xi)
            min_weight = min(min_weight, float(exact.weights.min()))
            rec.strong_metric_sigmak[k] = spectral_strong_metric(exact, sigmak_product_spectral(exact1, k))
            panel = observable_panel(volume, k, config.observable_seed)
            rec.weak_metric_k[k] = product_vs_tensor_weak_metric(sigma1, k, sector, panel)
        rec.min_weight = min_weight
    except (RdmError, ValueError, np.linalg.LinAlgError) as exc:
        rec.error = f"{type(exc).__name__}: {exc}"
    rec.runtime_ms = (time.perf_counter() - start) * 1e3
    return rec


def thread_count() -> int:
    raw = os.environ.get("RDMKIT_THREADS")
    if not raw:
        return 1
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"RDMKIT_THREADS must be a positive integer, got {raw!r}") from None
    if value < 1:
        raise ValueError(f"RDMKIT_THREADS must be a positive integer, got {raw!r}")
    return value


def run_sweep(config: SweepConfig, deterministic: bool = False, threads: int | None = None) -> list[SweepRecord]:
    """One record per volume, in volume order.

    Deterministic mode evaluates points sequentially and zeroes ``runtime_ms``
    so that serialized output is byte-stable.
    """
    workers = 1 if deterministic else (threads or thread_count())
    if workers > 1 and len(config.volumes) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(lambda v: sweep_point(config, v), config.volumes))
    else:
        records = [sweep_point(config, v) for v in config.volumes]
    if deterministic:
        for rec in records:
            rec.runtime_ms = 0.0
    return records


# -- serialization -----------------------------------------------------------

def csv_header(k_max: int) -> list[str]:
    ks = range(2, k_max + 1)
    return (
        ["volume", "n", "sector", "s_ratio", "assumption_ok", "strong_sigma1"]
        + [f"strong_sigma{k}" for k in ks]
        + [f"weak_k{k}" for k in ks]
        + ["runtime_ms"]
    )


def _fmt(x: float) -> str:
    return "nan" if x is None or not np.isfinite(x) else format(float(x), ".17g")


def record_row(rec: SweepRecord, k_max: int) -> dict:
    ks = range(2, k_max + 1)
    row = {
        "volume": rec.volume,
        "n": rec.n,
        "sector": rec.sector.value,
        "s_ratio": rec.s_ratio,
        "assumption_ok": rec.assumption_ok,
        "strong_sigma1": rec.strong_metric_sigma1,
    }
    for k in ks:
        row[f"strong_sigma{k}"] = rec.strong_metric_sigmak.get(k, float("nan"))
    for k in ks:
        row[f"weak_k{k}"] = rec.weak_metric_k.get(k, float("nan"))
    row["runtime_ms"] = rec.runtime_ms
    return row


def records_to_csv(records: Sequence[SweepRecord], k_max: int) -> str:
    header = csv_header(k_max)
    lines = [",".join(header)]
    for rec in records:
        row = record_row(rec, k_max)
        cells = []
        for name in header:
            v = row[name]
            if isinstance(v, bool):
                cells.append("true" if v else "false")
            elif isinstance(v, (int, np.integer)):
                cells.append(str(int(v)))
            elif isinstance(v, str):
                cells.append(v)
            else:
                cells.append(_fmt(v))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def records_to_json(records: Sequence[SweepRecord], k_max: int) -> str:
    out = []
    for rec in records:
        row = record_row(rec, k_max)
        row = {k: (None if isinstance(v, float) and not np.isfinite(v) else v) for k, v in row.items()}
        row["error"] = rec.error
        out.append(row)
    return json.dumps(out, indent=2) + "\n"
