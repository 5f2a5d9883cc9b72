"""Result repository - CSV output of trajectories, convergence reports and stability fields"""

import csv
import io
import sys
from pathlib import Path
from typing import TextIO, Union

import numpy as np

from app.core.errors import PeerError, ResultWriteError
from app.core.logger import logger
from app.models.problem import Trajectory
from app.models.report import ConvergenceReport, StabilityField
from app.repositories.coefficients import format_decimal

Destination = Union[str, Path, TextIO]
CsvResult = Union[Trajectory, ConvergenceReport, StabilityField]


class ResultRepository:
    """Writes results as deterministic CSV (17 significant digits, LF line endings)"""

    @staticmethod
    def _write_trajectory(writer, trajectory: Trajectory):
        dim = trajectory.values.shape[1]
        writer.writerow(["t"] + [f"u{k}" for k in range(1, dim + 1)])
        for t, row in zip(trajectory.times, trajectory.values):
            writer.writerow([format_decimal(t)] + [format_decimal(x) for x in row])

    @staticmethod
    def _write_convergence(writer, report: ConvergenceReport, stream: TextIO):
        writer.writerow(["dt", "error"])
        for entry in report.entries:
            error = format_decimal(entry.error) if entry.succeeded else "nan"
            writer.writerow([format_decimal(entry.dt), error])
        stream.write(f"# fitted_order={format_decimal(report.fitted_order)}\n")

    @staticmethod
    def _write_stability(writer, field: StabilityField):
        writer.writerow(["re", "im", "radius"])
        for i, im in enumerate(field.im):
            for j, re in enumerate(field.re):
                radius = field.radius[i, j]
                writer.writerow([format_decimal(re), format_decimal(im),
                                 "pole" if np.isnan(radius) else format_decimal(radius)])

    @staticmethod
    def render_csv(result: CsvResult) -> str:
        stream = io.StringIO()
        writer = csv.writer(stream, lineterminator="\n")
        if isinstance(result, Trajectory):
            ResultRepository._write_trajectory(writer, result)
        elif isinstance(result, ConvergenceReport):
            ResultRepository._write_convergence(writer, result, stream)
        elif isinstance(result, StabilityField):
            ResultRepository._write_stability(writer, result)
        else:
            raise PeerError(f"No CSV layout for {type(result).__name__}")
        return stream.getvalue()

    @staticmethod
    def emit_csv(result: CsvResult, destination: Destination) -> None:
        """Write ``result`` to a path ("-" for stdout) or an open text stream."""
        text = ResultRepository.render_csv(result)
        if isinstance(destination, (str, Path)) and str(destination) != "-":
            path = Path(destination)
            try:
                with path.open("w", newline="") as handle:
                    handle.write(text)
            except OSError as e:
                raise ResultWriteError(str(path), e.strerror or str(e))
            logger.info("Wrote %s to %s", type(result).__name__, path)
            return
        stream = sys.stdout if isinstance(destination, (str, Path)) else destination
        stream.write(text)
