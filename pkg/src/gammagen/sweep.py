"""Acceptance-rate sweep over a grid of shapes, with a fixed CSV schema."""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import IO, Iterable, Sequence

from .baselines import MethodId, reference_ar, sample
from .rng import seed_stream

CSV_HEADER = (
    "method", "alpha", "beta", "n", "proposed", "accepted",
    "empirical_ar", "theoretical_ar", "ar_source", "seed",
)
SCHEMA_VERSION = 1
DEFAULT_N = 600_000
DEFAULT_STEP = 0.05
AR_TOLERANCE = 0.005


def fmt(x: float) -> str:
    return f"{x:.9g}"


@dataclass(frozen=True)
class ARSweepRecord:
    method: MethodId
    alpha: float
    beta: float
    n: int
    proposed: int
    accepted: int
    empirical_ar: float
    theoretical_ar: float | None
    ar_source: str
    seed: int

    def row(self) -> list[str]:
        return [
            self.method.name,
            fmt(self.alpha),
            fmt(self.beta),
            str(self.n),
            str(self.proposed),
            str(self.accepted),
            fmt(self.empirical_ar),
            "NA" if self.theoretical_ar is None else fmt(self.theoretical_ar),
            self.ar_source,
            str(self.seed),
        ]

    @classmethod
    def from_row(cls, row: dict) -> ARSweepRecord:
        theo = row["theoretical_ar"]
        return cls(
            method=MethodId[row["method"]],
            alpha=float(row["alpha"]),
            beta=float(row["beta"]),
            n=int(row["n"]),
            proposed=int(row["proposed"]),
            accepted=int(row["accepted"]),
            empirical_ar=float(row["empirical_ar"]),
            theoretical_ar=None if theo == "NA" else float(theo),
            ar_source=row["ar_source"],
            seed=int(row["seed"]),
        )


def alpha_grid(alpha_min: float, alpha_max: float, step: float) -> list[float]:
    """``alpha_min, alpha_min + step, ...`` up to ``alpha_max`` inclusive, rounded to 10 decimals."""
    count = int(math.floor((alpha_max - alpha_min) / step + 1e-9))
    return [round(alpha_min + i * step, 10) for i in range(count + 1)]


def cell_index(method: MethodId, alpha: float) -> int:
    """Substream index for a sweep cell; a function of (method, alpha) only."""
    return (method.ordinal << 48) | int(round(alpha * 1e6))


def cell_supported(method: MethodId, alpha: float) -> bool:
    return alpha >= 1.0 if method is MethodId.M1 else alpha > 1.0


def run_cell(method: MethodId, alpha: float, beta: float, n: int, seed: int) -> ARSweepRecord:
    src = seed_stream(seed).substream(cell_index(method, alpha))
    batch = sample(method, alpha, beta, src, n)
    theo, source = reference_ar(method, alpha)
    return ARSweepRecord(
        method, alpha, beta, n, batch.proposed, batch.accepted,
        batch.empirical_ar, theo, source, seed,
    )


def _run_cell_args(args):
    return run_cell(*args)


def run_sweep(
    alphas: Sequence[float],
    methods: Iterable[MethodId],
    n: int = DEFAULT_N,
    seed: int = 0,
    beta: float = 1.0,
    workers: int = 1,
) -> list[ARSweepRecord]:
    """One record per supported (method, alpha) cell, sorted by method then alpha.

    Cells draw from their own substreams, so results do not depend on
    ``workers`` or on the order in which cells finish.
    """
    methods = sorted(set(methods), key=lambda m: m.ordinal)
    jobs = [
        (m, float(a), float(beta), int(n), int(seed))
        for m in methods
        for a in alphas
        if cell_supported(m, a)
    ]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_run_cell_args, jobs, chunksize=4))
    else:
        records = [run_cell(*job) for job in jobs]
    return sorted(records, key=lambda r: (r.method.ordinal, r.alpha))


def write_csv(records: Iterable[ARSweepRecord], fh: IO[str]) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in records:
        writer.writerow(r.row())


def read_csv(fh: IO[str]) -> list[ARSweepRecord]:
    reader = csv.DictReader(fh)
    if tuple(reader.fieldnames or ()) != CSV_HEADER:
        raise ValueError(f"unexpected sweep header: {reader.fieldnames}")
    return [ARSweepRecord.from_row(row) for row in reader]


def write_plot_data(records: Sequence[ARSweepRecord], fh: IO[str]) -> None:
    """Wide table: one row per alpha, empirical and theoretical columns per method."""
    methods = sorted({r.method for r in records}, key=lambda m: m.ordinal)
    alphas = sorted({r.alpha for r in records})
    cells = {(r.method, r.alpha): r for r in records}
    writer = csv.writer(fh, lineterminator="\n")
    header = ["alpha"]
    for m in methods:
        header += [f"{m.name}_empirical", f"{m.name}_theoretical"]
    writer.writerow(header)
    for a in alphas:
        row = [fmt(a)]
        for m in methods:
            r = cells.get((m, a))
            if r is None:
                row += ["NA", "NA"]
            else:
                row += [fmt(r.empirical_ar), "NA" if r.theoretical_ar is None else fmt(r.theoretical_ar)]
        writer.writerow(row)


def ar_violations(records: Iterable[ARSweepRecord], tol: float = AR_TOLERANCE) -> list[ARSweepRecord]:
    return [
        r for r in records
        if r.theoretical_ar is not None and not abs(r.empirical_ar - r.theoretical_ar) < tol
    ]


def ar_table(records: Sequence[ARSweepRecord], use_theoretical: bool = True) -> dict:
    """``{alpha: {method: ar}}`` for ranking queries."""
    table: dict = {}
    for r in records:
        value = r.theoretical_ar if use_theoretical else r.empirical_ar
        table.setdefault(r.alpha, {})[r.method] = value
    return table


def empirical_minimum(records: Sequence[ARSweepRecord], method: MethodId = MethodId.M1):
    rows = [r for r in records if r.method is method]
    best = min(rows, key=lambda r: r.empirical_ar)
    return best.alpha, best.empirical_ar

