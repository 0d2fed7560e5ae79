"""Reading and writing trial datasets as delimited text.

Expected layout: a header row naming at least ``time``, ``event`` and ``arm``;
every other column is a numeric covariate addressed by its header name.
``event`` and ``arm`` must be 0/1.  Any missing or non-numeric cell is an
error that reports the 1-based line number (the header is line 1).  Floats are
written with ``repr`` so a write-read round trip reproduces values bit-exactly.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Sequence

from .errors import InvalidInput, ParseError
from .survival import Arm, SurvivalSample

REQUIRED_COLUMNS = ("time", "event", "arm")


def read_dataset(path: str | Path) -> tuple[list[SurvivalSample], list[str]]:
    """Load a dataset; returns the samples and the covariate column names."""
    path = Path(path)
    if not path.exists():
        raise InvalidInput(f"data file not found: {path}")
    with path.open(newline="") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("file is empty", line=1) from None
        header = [name.strip() for name in header]
        for required in REQUIRED_COLUMNS:
            if required not in header:
                raise ParseError(f"missing required column {required!r}", line=1)
        seen = set()
        for name in header:
            if not name:
                raise ParseError("empty column name in header", line=1)
            if name in seen:
                raise ParseError(f"duplicate column {name!r}", line=1)
            seen.add(name)
        covariate_names = [name for name in header if name not in REQUIRED_COLUMNS]
        index = {name: header.index(name) for name in header}

        samples = []
        for line_no, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise ParseError(
                    f"expected {len(header)} fields, found {len(row)}", line=line_no
                )
            time = _parse_float(row[index["time"]], "time", line_no)
            event = _parse_binary(row[index["event"]], "event", line_no)
            arm = _parse_binary(row[index["arm"]], "arm", line_no)
            covs = tuple(
                _parse_float(row[index[name]], name, line_no) for name in covariate_names
            )
            try:
                samples.append(
                    SurvivalSample(time=time, event=bool(event), arm=Arm(arm), covariates=covs)
                )
            except InvalidInput as exc:
                raise ParseError(str(exc), line=line_no) from None
    if not samples:
        raise ParseError("file has a header but no data rows", line=1)
    return samples, covariate_names


def _parse_float(cell: str, column: str, line_no: int) -> float:
    text = cell.strip()
    if not text:
        raise ParseError(f"missing value in column {column!r}", line=line_no)
    try:
        value = float(text)
    except ValueError:
        raise ParseError(
            f"column {column!r} has non-numeric value {cell!r}", line=line_no
        ) from None
    if value != value:
        raise ParseError(f"column {column!r} has missing value {cell!r}", line=line_no)
    return value


def _parse_binary(cell: str, column: str, line_no: int) -> int:
    value = _parse_float(cell, column, line_no)
    if value not in (0.0, 1.0):
        raise ParseError(f"column {column!r} must be 0 or 1, got {cell!r}", line=line_no)
    return int(value)


def write_dataset(
    path: str | Path,
    samples: Sequence[SurvivalSample],
    covariate_names: Sequence[str],
) -> None:
    """Write samples with full float precision (round-trip safe)."""
    if samples and len(samples[0].covariates) != len(covariate_names):
        raise InvalidInput("covariate names do not match the covariate width")
    with Path(path).open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow([*REQUIRED_COLUMNS, *covariate_names])
        for sample in samples:
            writer.writerow(
                [
                    repr(sample.time),
                    int(sample.event),
                    int(sample.arm),
                    *(repr(v) for v in sample.covariates),
                ]
            )
