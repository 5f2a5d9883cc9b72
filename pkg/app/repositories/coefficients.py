"""Coefficient repository - line-oriented text files of IMEX Peer coefficient sets"""

from pathlib import Path
from typing import Dict, List, Union

import numpy as np

from app.core.errors import CoefficientParseError, CoefficientValidationError
from app.core.logger import logger
from app.models.coefficients import PeerCoefficients
from app.services.coefficients import CoefficientService

HEADER = "peer-coefficients v1"
MATRIX_KEYS = ("P", "Q", "R", "S2")
SCALAR_KEYS = ("s", "gamma", "c")


def format_decimal(value: float) -> str:
    return f"{value:.17g}"


class CoefficientRepository:
    """Reads and writes coefficient files; S1, Qhat and Rhat are never stored"""

    @staticmethod
    def format_coefficients(coeffs: PeerCoefficients) -> str:
        lines = [
            HEADER,
            f"s {coeffs.s}",
            f"gamma {format_decimal(coeffs.gamma)}",
            "c " + " ".join(format_decimal(x) for x in coeffs.c),
        ]
        for key in MATRIX_KEYS:
            lines.append(key)
            for row in getattr(coeffs, key):
                lines.append(" ".join(format_decimal(x) for x in row))
        return "\n".join(lines) + "\n"

    @staticmethod
    def _numbers(tokens: List[str], line: int) -> List[float]:
        try:
            return [float(token) for token in tokens]
        except ValueError:
            raise CoefficientParseError(f"invalid number in {' '.join(tokens)!r}", line)

    @staticmethod
    def parse_coefficients(text: str, label: str = "file") -> PeerCoefficients:
        """Parse coefficient text without validating it."""
        lines = [(number, raw.strip()) for number, raw in enumerate(text.splitlines(), start=1)]
        lines = [(number, content) for number, content in lines if content and not content.startswith("#")]
        if not lines or lines[0][1] != HEADER:
            raise CoefficientParseError(f"missing header {HEADER!r}", lines[0][0] if lines else 1)

        values: Dict[str, object] = {}
        position = 1
        while position < len(lines):
            number, content = lines[position]
            key, *rest = content.split()
            if key in values:
                raise CoefficientParseError(f"duplicate key {key!r}", number)

            if key == "s":
                if len(rest) != 1 or not rest[0].isdigit() or int(rest[0]) < 1:
                    raise CoefficientParseError("s must be a positive integer", number)
                values["s"] = int(rest[0])
            elif key == "gamma":
                if len(rest) != 1:
                    raise CoefficientParseError("gamma takes exactly one value", number)
                values["gamma"] = CoefficientRepository._numbers(rest, number)[0]
            elif key == "c":
                if "s" not in values:
                    raise CoefficientParseError("c must follow s", number)
                nodes = CoefficientRepository._numbers(rest, number)
                if len(nodes) != values["s"]:
                    raise CoefficientParseError(f"expected {values['s']} nodes, got {len(nodes)}", number)
                values["c"] = nodes
            elif key in MATRIX_KEYS:
                if "s" not in values:
                    raise CoefficientParseError(f"matrix {key} must follow s", number)
                if rest:
                    raise CoefficientParseError(f"matrix {key} rows start on the next line", number)
                s = values["s"]
                rows = []
                for offset in range(1, s + 1):
                    if position + offset >= len(lines):
                        raise CoefficientParseError(f"matrix {key} ends after {offset - 1} of {s} rows", number)
                    row_number, row_text = lines[position + offset]
                    row = CoefficientRepository._numbers(row_text.split(), row_number)
                    if len(row) != s:
                        raise CoefficientParseError(f"matrix {key} row has {len(row)} entries, expected {s}", row_number)
                    rows.append(row)
                values[key] = rows
                position += s
            else:
                raise CoefficientParseError(f"unknown key {key!r}", number)
            position += 1

        missing = [key for key in SCALAR_KEYS + MATRIX_KEYS if key not in values]
        if missing:
            raise CoefficientParseError(f"missing keys: {', '.join(missing)}", lines[-1][0])

        return CoefficientService.assemble(
            np.array(values["c"]),
            values["gamma"],
            np.array(values["P"]),
            np.array(values["Q"]),
            np.array(values["R"]),
            np.array(values["S2"]),
            label=label,
        )

    @staticmethod
    def save_coefficients(coeffs: PeerCoefficients, destination: Union[str, Path]) -> None:
        path = Path(destination)
        path.write_text(CoefficientRepository.format_coefficients(coeffs))
        logger.info("Saved coefficients %s to %s", coeffs.label, path)

    @staticmethod
    def load_coefficients(source: Union[str, Path], validate: bool = True) -> PeerCoefficients:
        """Load a coefficient file; by default reject sets that fail validation."""
        path = Path(source)
        try:
            text = path.read_text()
        except OSError as e:
            raise CoefficientParseError(f"cannot read {path}: {e.strerror}")
        coeffs = CoefficientRepository.parse_coefficients(text, label=path.stem)
        if validate:
            report = CoefficientService.validate(coeffs)
            if not report.passed:
                raise CoefficientValidationError(report)
        logger.info("Loaded coefficients %s from %s", coeffs.label, path)
        return coeffs
