"""CSV and report writers for experiment artifacts.

Every CSV starts with a header line and prints floats with 17 significant
digits, so identical runs produce byte-identical files.
"""

import csv
import logging
from pathlib import Path
from typing import TYPE_CHECKING, Iterable, List, Mapping, Optional, Sequence

import numpy as np

from relaxfree.integrators import ConvergenceResult, StepRecord
from relaxfree.stability import RegionGrid
from relaxfree.utils import ensure_directory

if TYPE_CHECKING:
    from relaxfree.harness import GoldenCheck

logger = logging.getLogger("relaxfree")

TIME_SERIES_HEADER = ["step", "t", "dt_effective", "energy", "control", "energy_drift", "linear_sum"]


def fmt(value: Optional[float]) -> str:
    """17-significant-digit float, empty for None."""
    if value is None:
        return ""
    return f"{float(value):.17g}"


class Exporter:
    """Write run artifacts into one output directory."""

    def __init__(self, output_dir: Path) -> None:
        """Initialize the exporter.

        Args:
            output_dir: Directory receiving all files; created on first write.
        """
        self.output_dir = Path(output_dir)
        self.written: List[Path] = []

    def _write_rows(self, name: str, header: Sequence[str], rows: Iterable[Sequence[str]]) -> Path:
        ensure_directory(self.output_dir)
        path = self.output_dir / name
        with open(path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(header)
            writer.writerows(rows)
        self.written.append(path)
        logger.info(f"Wrote {path}")
        return path

    def write_table(self, name: str, header: Sequence[str], rows: Iterable[Sequence[str]]) -> Path:
        """Write preformatted rows to {name}.csv."""
        return self._write_rows(f"{name}.csv", header, rows)

    def write_time_series(
        self,
        name: str,
        initial_energy: float,
        initial_sum: float,
        records: Sequence[StepRecord],
        every: int = 1,
    ) -> Path:
        """Write the per-step time series.

        A step-0 row carries the initial energy. ``energy_drift`` is
        energy − initial energy; ``linear_sum`` is Σ u_i.
        """
        rows = [["0", fmt(0.0), "", fmt(initial_energy), "", fmt(0.0), fmt(initial_sum)]]
        for i, rec in enumerate(records):
            if (i + 1) % every and i != len(records) - 1:
                continue
            rows.append(
                [
                    str(rec.step),
                    fmt(rec.t),
                    fmt(rec.effective_dt),
                    fmt(rec.energy),
                    fmt(rec.control),
                    fmt(rec.energy - initial_energy),
                    fmt(float(np.sum(rec.state))),
                ]
            )
        return self._write_rows(f"{name}_timeseries.csv", TIME_SERIES_HEADER, rows)

    def write_amplification(self, name: str, before: np.ndarray, after: np.ndarray, relative: np.ndarray) -> Path:
        """Per-mode amplitudes and relative amplification."""
        rows = (
            [str(k), fmt(b), fmt(a), fmt(r)]
            for k, (b, a, r) in enumerate(zip(before, after, relative))
        )
        return self._write_rows(f"{name}_modes.csv", ["k", "amp_initial", "amp_final", "relative"], rows)

    def write_profile(self, name: str, x: np.ndarray, columns: Sequence[str], values: Sequence[np.ndarray]) -> Path:
        """Solution profiles sampled on a grid, one column per state."""
        rows = ([fmt(xi)] + [fmt(v[i]) for v in values] for i, xi in enumerate(x))
        return self._write_rows(f"{name}_profile.csv", ["x", *columns], rows)

    def write_region(self, name: str, grids: Mapping[float, RegionGrid]) -> Path:
        """|R| samples of stability regions, one block per ε."""
        rows = (
            [fmt(eps), fmt(x), fmt(y), fmt(r)]
            for eps, grid in grids.items()
            for x, y, r in grid.samples()
        )
        return self._write_rows(f"{name}_region.csv", ["eps", "re", "im", "absR"], rows)

    def write_rf_limits(self, name: str, rows: Sequence[Sequence[float]]) -> Path:
        """Imaginary and real axis limits per ε."""
        return self._write_rows(
            f"{name}_limits.csv",
            ["eps", "imag_limit", "real_limit"],
            ([fmt(v) for v in row] for row in rows),
        )

    def write_convergence(self, name: str, results: Sequence[ConvergenceResult], labels: Sequence[str]) -> Path:
        """(label, dt, error, used) rows for several convergence studies."""
        rows = []
        for label, result in zip(labels, results):
            for dt, err, used in zip(result.dts, result.errors, result.used):
                rows.append([label, fmt(dt), fmt(err), str(int(used))])
        return self._write_rows(f"{name}_convergence.csv", ["label", "dt", "error", "used"], rows)

    def write_slopes(self, name: str, rows: Sequence[Sequence[object]]) -> Path:
        """(label, slope) rows; NaN slopes mark failed fits."""
        return self._write_rows(
            f"{name}_slopes.csv",
            ["label", "slope"],
            ([str(label), fmt(slope)] for label, slope in rows),
        )

    def write_report(self, name: str, checks: Sequence["GoldenCheck"], notes: Sequence[str] = ()) -> Path:
        """Write a plain-text report and a machine-readable CSV of golden checks.

        Returns:
            Path of the text report.
        """
        self._write_rows(
            f"{name}_report.csv",
            ["check", "measured", "expected", "passed"],
            ([c.name, c.measured, c.expected, "true" if c.passed else "false"] for c in checks),
        )

        passed = sum(c.passed for c in checks)
        lines = [f"{name}: {passed}/{len(checks)} checks passed", ""]
        for c in checks:
            status = "PASS" if c.passed else "FAIL"
            lines.append(f"[{status}] {c.name}: measured {c.measured}, expected {c.expected}")
        if notes:
            lines.append("")
            lines.extend(f"note: {n}" for n in notes)

        ensure_directory(self.output_dir)
        path = self.output_dir / f"{name}_report.txt"
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        self.written.append(path)
        logger.info(f"Wrote {path}")
        return path
