"""Scenario runners for displacement scans, edge states and disorder ensembles,
plus similarity scoring and count-table ingestion."""
from __future__ import annotations

import csv
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import PLUS, CoinSpec, Frame, WalkerState, check_loss
from .engine import (
    DisorderSpec,
    DetectionRecord,
    FixedSteps,
    Observables,
    SurvivalBelow,
    average_displacement,
    dwell_time,
    evolve,
    lattice_half_width,
    run_walk,
    sample_disorder,
    survivor_distribution,
)
from .errors import DegenerateBand, EmptyDistribution, MalformedTable
from .field import CoinField
from .topology import winding_number

PI = math.pi

SCAN_THETA2 = PI / 4
SCAN_P_VALUES = (1.0, 2.0 / 3.0, 9.0 / 25.0)
SCAN_STEPS = 7
EDGE_INNER = CoinSpec(PI / 8, 3 * PI / 16)
EDGE_OUTER = {
    "a": CoinSpec(PI / 16, PI / 8),
    "b": CoinSpec(-7 * PI / 16, -3 * PI / 8),
    "c": CoinSpec(-5 * PI / 8, -9 * PI / 16),
}
EDGE_X0 = 4
EDGE_START = 4
EDGE_P = 2.0 / 3.0
EDGE_STEPS = 5
DISORDER_STEPS = 5


def sweep_theta1(count: int = 13) -> np.ndarray:
    """``count`` evenly spaced angles strictly inside (-pi/2, pi/2).

    Stand-in for the unprinted sample coordinates: the open interval is cut
    into ``count + 1`` equal pieces and the interior nodes are used.
    """
    return np.linspace(-PI / 2, PI / 2, count + 2)[1:-1]


def _pool_map(fn, items, workers):
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            return list(pool.map(fn, items))
    return [fn(item) for item in items]


# -------------------------------------------------------- displacement scans


@dataclass(frozen=True)
class ScanRow:
    frame: Frame
    p: float
    theta1: float
    theta2: float
    steps: int
    displacement: float
    dwell_time: float
    longrun_displacement: Observables
    longrun_dwell_time: Observables
    winding: int | None


def displacement_scan(
    theta2: float = SCAN_THETA2,
    theta1_values=None,
    p_values=SCAN_P_VALUES,
    steps: int = SCAN_STEPS,
    frames=(Frame.PRIME, Frame.DOUBLE_PRIME),
    longrun=SurvivalBelow(),
    with_winding: bool = True,
    workers: int = 1,
) -> list[ScanRow]:
    """Finite-step and long-run displacement/dwell time for every (frame, p, theta1)."""
    if steps < 1:
        raise ValueError("steps must be >= 1")
    theta1_values = sweep_theta1() if theta1_values is None else theta1_values
    if isinstance(frames, (Frame, str)):
        frames = (frames,)
    jobs = [(Frame.parse(f), check_loss(p), float(t1)) for f in frames for p in p_values for t1 in theta1_values]

    def run(job):
        frame, p, t1 = job
        coin = CoinSpec(t1, theta2)
        short = run_walk(coin, p, frame, FixedSteps(steps))
        long = run_walk(coin, p, frame, longrun)
        nu = None
        if with_winding:
            try:
                w = winding_number(coin, p, frame)
                nu = w.value if w.valid else None
            except DegenerateBand:
                nu = None
        return ScanRow(
            frame,
            p,
            t1,
            float(theta2),
            steps,
            average_displacement(short).value,
            dwell_time(short).value,
            average_displacement(long),
            dwell_time(long),
            nu,
        )

    return _pool_map(run, jobs, workers)


# ------------------------------------------------------------- edge states


@dataclass(frozen=True)
class RegionLayout:
    inner: CoinSpec
    outer: CoinSpec
    x0: int = EDGE_X0

    def field(self, half_width: int) -> CoinField:
        return CoinField.two_region(self.inner, self.outer, self.x0, half_width)


@dataclass(frozen=True, eq=False)
class EdgeResult:
    """Survivor distributions ``Q[t-1, i]`` for ``t = 1..steps`` at ``positions[i]``."""

    positions: np.ndarray
    Q: np.ndarray
    record: DetectionRecord

    def at(self, x: int, t: int) -> float:
        return float(self.Q[t - 1, x - self.positions[0]])


def _survivor_rows(field_: CoinField, p, steps, start, frame):
    L = field_.half_width
    rec = evolve(WalkerState.localized(L, start, PLUS), field_, p, frame, FixedSteps(steps), keep_states=True)
    Q = np.array([survivor_distribution(s) for s in rec.states[1:]])
    return rec, Q


def edge_experiment(
    layout: RegionLayout,
    p: float = EDGE_P,
    steps: int = EDGE_STEPS,
    start: int = EDGE_START,
    frame=Frame.PRIME,
    half_width: int | None = None,
) -> EdgeResult:
    L = half_width if half_width is not None else lattice_half_width(steps, start)
    if abs(start) > L:
        raise ValueError("start site outside the lattice")
    rec, Q = _survivor_rows(layout.field(L), p, steps, start, frame)
    return EdgeResult(rec.positions, Q, rec)


# ---------------------------------------------------------------- ensembles


@dataclass(frozen=True, eq=False)
class EnsembleSummary:
    """Per-member values with their mean and unbiased standard deviation.

    ``seeds`` holds ``(seed, stream, member)`` triples identifying each
    member's random stream.
    """

    values: np.ndarray
    mean: np.ndarray
    std: np.ndarray
    seeds: list

    @classmethod
    def from_members(cls, values, seeds) -> "EnsembleSummary":
        values = np.asarray(values, dtype=float)
        # shifted sums keep identical members exact (mean == member, std == 0)
        ref = values[0]
        dev = values - ref
        mean_dev = dev.mean(axis=0)
        if values.shape[0] > 1:
            std = np.sqrt(np.sum((dev - mean_dev) ** 2, axis=0) / (values.shape[0] - 1))
        else:
            std = np.zeros_like(ref)
        return cls(values, ref + mean_dev, std, list(seeds))


@dataclass(frozen=True, eq=False)
class DisorderEdgeResult:
    positions: np.ndarray
    Q_mean: np.ndarray
    members: EnsembleSummary

    def at(self, x: int, t: int) -> float:
        return float(self.Q_mean[t - 1, x - self.positions[0]])


def disorder_edge(
    layout: RegionLayout,
    spec: DisorderSpec = DisorderSpec(),
    p: float = EDGE_P,
    steps: int = EDGE_STEPS,
    start: int = EDGE_START,
    frame=Frame.PRIME,
    half_width: int | None = None,
    workers: int = 1,
) -> DisorderEdgeResult:
    """Edge runs on ``spec.ensemble_size`` disordered copies of ``layout``."""
    L = half_width if half_width is not None else lattice_half_width(steps, start)
    base = layout.field(L)

    def member(m):
        return _survivor_rows(sample_disorder(base, spec, m), p, steps, start, frame)[1]

    rows = _pool_map(member, range(spec.ensemble_size), workers)
    summary = EnsembleSummary.from_members(rows, [(spec.seed, 0, m) for m in range(spec.ensemble_size)])
    return DisorderEdgeResult(np.arange(-L, L + 1), summary.mean, summary)


@dataclass(frozen=True, eq=False)
class DisorderScanPoint:
    theta1: float
    theta2: float
    clean: float
    summary: EnsembleSummary

    @property
    def mean(self) -> float:
        return float(self.summary.mean)

    @property
    def std(self) -> float:
        return float(self.summary.std)


def disorder_displacement(
    theta2: float = SCAN_THETA2,
    theta1_values=None,
    spec: DisorderSpec = DisorderSpec(),
    p: float = EDGE_P,
    steps: int = DISORDER_STEPS,
    frame=Frame.PRIME,
    workers: int = 1,
) -> list[DisorderScanPoint]:
    """Ensemble statistics of the ``steps``-step displacement along a theta1 sweep.

    Sweep point ``i`` draws its members from disorder stream ``i``.
    """
    theta1_values = sweep_theta1() if theta1_values is None else theta1_values
    L = lattice_half_width(steps)
    frame = Frame.parse(frame)

    def point(args):
        i, t1 = args
        base = CoinField.homogeneous(CoinSpec(t1, theta2), L)
        start = WalkerState.localized(L, 0, PLUS)
        clean = average_displacement(evolve(start, base, p, frame, FixedSteps(steps))).value
        vals, seeds = [], []
        for m in range(spec.ensemble_size):
            f = sample_disorder(base, spec, m, stream=i)
            vals.append(average_displacement(evolve(start, f, p, frame, FixedSteps(steps))).value)
            seeds.append((spec.seed, i, m))
        return DisorderScanPoint(float(t1), float(theta2), clean, EnsembleSummary.from_members(vals, seeds))

    return _pool_map(point, list(enumerate(theta1_values)), workers)


# --------------------------------------------------------------- similarity


def _as_distribution(q, name):
    q = np.asarray(q, dtype=float)
    if q.size == 0 or np.any(~np.isfinite(q)) or np.any(q < 0):
        raise EmptyDistribution(f"{name} must be a non-empty, non-negative row")
    total = q.sum()
    if not total > 0:
        raise EmptyDistribution(f"{name} carries no probability")
    if abs(total - 1.0) > 1e-6:
        warnings.warn(f"{name} sums to {total:.6g}; renormalising", stacklevel=3)
    return q / total


def similarity(qa, qb) -> float:
    """``(sum_x sqrt(qa qb))^2``: 1 for identical rows, 0 for disjoint support."""
    a = _as_distribution(qa, "qa")
    b = _as_distribution(qb, "qb")
    if a.shape != b.shape:
        raise ValueError(f"rows differ in shape: {a.shape} vs {b.shape}")
    w = a * b
    if w.size <= 2048:
        # sum_xy sqrt(w_x w_y) squares before the root, so a single shared
        # cell (e.g. 1 vs 1/2) comes out exact instead of sqrt(1/2)**2
        total = float(np.sum(np.sqrt(np.outer(w, w))))
    else:
        total = float(np.sum(np.sqrt(w))) ** 2
    return min(1.0, total)


# ------------------------------------------------------------ count tables


@dataclass(frozen=True, eq=False)
class CountTable:
    """Reflected counts ``N_R[t'-1, i]`` for ``t' = 1..t`` and transmitted counts ``N_T[i]`` after step ``t``."""

    positions: np.ndarray
    N_R: np.ndarray
    N_T: np.ndarray

    def __post_init__(self):
        n_r = np.asarray(self.N_R, dtype=float)
        n_t = np.asarray(self.N_T, dtype=float)
        pos = np.asarray(self.positions)
        if n_r.ndim != 2 or n_t.ndim != 1 or n_r.shape[1] != pos.size or n_t.size != pos.size:
            raise MalformedTable("count arrays do not match the position grid")
        if np.any(n_r < 0) or np.any(n_t < 0) or not (np.all(np.isfinite(n_r)) and np.all(np.isfinite(n_t))):
            raise MalformedTable("counts must be finite and non-negative")
        object.__setattr__(self, "N_R", n_r)
        object.__setattr__(self, "N_T", n_t)
        object.__setattr__(self, "positions", pos)

    @property
    def steps(self) -> int:
        return self.N_R.shape[0]


def read_counts_csv(path) -> CountTable:
    """Parse a ``kind,x,t,count`` table (kind ``R`` or ``T``; missing cells are zero)."""
    path = Path(path)
    entries = {}
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header] != ["kind", "x", "t", "count"]:
            raise MalformedTable(f"{path}: header must be 'kind,x,t,count'")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 4:
                raise MalformedTable(f"{path}:{lineno}: expected 4 columns, got {len(row)}")
            kind = row[0].strip().upper()
            if kind not in ("R", "T"):
                raise MalformedTable(f"{path}:{lineno}: kind must be R or T")
            try:
                x, t, count = int(row[1]), int(row[2]), float(row[3])
            except ValueError:
                raise MalformedTable(f"{path}:{lineno}: unreadable number") from None
            if t < 1 or count < 0 or not math.isfinite(count):
                raise MalformedTable(f"{path}:{lineno}: need t >= 1 and a finite count >= 0")
            if (kind, x, t) in entries:
                raise MalformedTable(f"{path}:{lineno}: duplicate entry {kind},{x},{t}")
            entries[(kind, x, t)] = count
    if not entries:
        raise EmptyDistribution(f"{path}: no counts")
    t_final = max(t for (_, _, t) in entries)
    if any(kind == "T" and t != t_final for (kind, _, t) in entries):
        raise MalformedTable(f"{path}: transmitted counts must all belong to the final step {t_final}")
    xs = [x for (_, x, _) in entries]
    positions = np.arange(min(xs), max(xs) + 1)
    n_r = np.zeros((t_final, positions.size))
    n_t = np.zeros(positions.size)
    for (kind, x, t), count in entries.items():
        if kind == "R":
            n_r[t - 1, x - positions[0]] = count
        else:
            n_t[x - positions[0]] = count
    return CountTable(positions, n_r, n_t)


@dataclass(frozen=True, eq=False)
class IngestResult:
    positions: np.ndarray
    P_exp: np.ndarray
    Q_exp: np.ndarray | None
    record: DetectionRecord
    P_err: np.ndarray

    @property
    def displacement(self) -> float:
        return average_displacement(self.record).value

    @property
    def dwell_time(self) -> float:
        return dwell_time(self.record).value


def ingest_counts(table: CountTable) -> IngestResult:
    """Normalise counts into loss probabilities and the final survivor distribution.

    ``P_exp = N_R / (sum N_R + sum N_T)``, ``Q_exp = N_T / sum N_T``.
    ``P_err`` are Poisson errors ``sqrt(N_R) / total`` (denominator treated as exact).
    """
    total = float(table.N_R.sum() + table.N_T.sum())
    if not total > 0:
        raise EmptyDistribution("count table is all zeros")
    P = table.N_R / total
    t_sum = float(table.N_T.sum())
    Q = table.N_T / t_sum if t_sum > 0 else None
    survival = np.concatenate([[1.0], 1.0 - np.cumsum(P.sum(axis=1))])
    survival[-1] = t_sum / total
    rec = DetectionRecord(
        positions=table.positions,
        P=P,
        survival=survival,
        frame=Frame.PRIME,
        p=float("nan"),
        t_max=table.steps,
        eps=0.0,
        converged=False,
        field_info={"source": "counts"},
    )
    return IngestResult(table.positions, P, Q, rec, np.sqrt(table.N_R) / total)


def counts_from_record(rec: DetectionRecord, total: float = 1e6) -> CountTable:
    """Noise-free count table proportional to a simulated record."""
    if rec.states is None:
        raise ValueError("record must keep states to supply transmitted counts")
    final = rec.states[-1].amplitudes
    n_t = np.sum(final.real**2 + final.imag**2, axis=1) * total
    return CountTable(rec.positions, rec.P * total, n_t)
