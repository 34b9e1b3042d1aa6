"""Streaming delimited-file ingestion into encoded batches.

Rows are read in fixed-size chunks and every column is re-encoded per batch
into dense 0-based integer codes in first-appearance order.  Codes are
batch-local on purpose: mutual information is relabel-invariant, and local
codes keep every counting table bounded by the batch row count no matter how
many distinct values a column takes over the whole file.

pandas' C parser does the heavy parsing, but it silently pads rows that have
too few fields, so the byte stream is routed through a small quote-aware
validator that counts fields per record and raises with the 1-based line
number on any width mismatch.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

import numpy as np
import pandas as pd

__all__ = [
    "CsvFormatError",
    "EncodedBatch",
    "Schema",
    "SchemaError",
    "encode_column",
    "read_batches",
]

ROLES = ("feature", "target", "ignore")
_FORMAT_SEPARATORS = {"csv": ",", "tsv": "\t"}


class SchemaError(ValueError):
    """Schema construction or header mismatch problem."""


class CsvFormatError(ValueError):
    """Structurally malformed input data."""


@dataclass(frozen=True)
class Schema:
    """Column layout: names with roles, plus the token treated as missing."""

    columns: tuple[tuple[str, str], ...]
    missing_token: str = ""

    def __post_init__(self):
        names = [name for name, _ in self.columns]
        if len(set(names)) != len(names):
            dupes = sorted({n for n in names if names.count(n) > 1})
            raise SchemaError(f"duplicate column names: {dupes}")
        for name, role in self.columns:
            if role not in ROLES:
                raise SchemaError(f"column {name!r}: unknown role {role!r}")
        targets = [n for n, r in self.columns if r == "target"]
        if len(targets) != 1:
            raise SchemaError(f"exactly one target column required, got {targets}")
        if not any(r == "feature" for _, r in self.columns):
            raise SchemaError("at least one feature column required")

    @classmethod
    def from_header(
        cls,
        header: list[str] | tuple[str, ...],
        target: str,
        ignore: tuple[str, ...] = (),
        missing_token: str = "",
    ) -> "Schema":
        if target not in header:
            raise SchemaError(f"target column {target!r} not in header {list(header)}")
        unknown = sorted(set(ignore) - set(header))
        if unknown:
            raise SchemaError(f"ignore columns not in header: {unknown}")
        cols = []
        for name in header:
            if name == target:
                cols.append((name, "target"))
            elif name in ignore:
                cols.append((name, "ignore"))
            else:
                cols.append((name, "feature"))
        return cls(columns=tuple(cols), missing_token=missing_token)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.columns)

    @property
    def feature_names(self) -> tuple[str, ...]:
        return tuple(name for name, role in self.columns if role == "feature")

    @property
    def target_name(self) -> str:
        return next(name for name, role in self.columns if role == "target")


@dataclass(frozen=True)
class EncodedBatch:
    """One chunk of rows with dense batch-local codes per retained column.

    `codes`, `cardinalities`, `uniques`, `counts` and `missing_counts` cover
    all feature columns and the target; `uniques[name][code]` decodes back to
    the original token, and `counts[name]` is the per-code occurrence count.
    """

    batch_index: int
    row_count: int
    feature_names: tuple[str, ...]
    target_name: str
    codes: dict[str, np.ndarray]
    cardinalities: dict[str, int]
    uniques: dict[str, np.ndarray]
    counts: dict[str, np.ndarray]
    missing_counts: dict[str, int]

    @property
    def target_codes(self) -> np.ndarray:
        return self.codes[self.target_name]

    @property
    def target_cardinality(self) -> int:
        return self.cardinalities[self.target_name]

    def decode(self, name: str) -> np.ndarray:
        """Recover the original token sequence for one column."""
        return self.uniques[name][self.codes[name]]


def encode_column(values, missing_token: str = "") -> tuple[np.ndarray, int, int]:
    """Encode tokens to dense codes in first-appearance order.

    Returns (codes, cardinality, missing_count).  The missing token, when
    present, is a category like any other; it is only counted separately so
    coverage can be reported.
    """
    arr = np.asarray(values, dtype=object)
    if arr.size == 0:
        raise ValueError("cannot encode an empty column")
    codes, uniques = pd.factorize(arr, use_na_sentinel=False)
    missing = int(np.count_nonzero(arr == missing_token))
    return codes.astype(np.int64), len(uniques), missing


class _ValidatingReader(io.RawIOBase):
    """Binary pass-through that checks the field count of every record.

    Tracks quote parity so separators and newlines inside quoted fields are
    ignored, handles records split across read() chunks, skips blank lines
    (matching pandas) and tolerates CRLF endings.
    """

    def __init__(self, raw, width: int, sep: bytes):
        self._raw = raw
        self._width = width
        self._sep = sep[0]
        self._quote = ord('"')
        self._nl = ord("\n")
        self._cr = ord("\r")
        self._parity = 0  # 1 while inside a quoted field
        self._line = 1
        self._carry_seps = 0
        self._carry_len = 0
        self._carry_last = -1  # last byte of the partial record, -1 if none
        self._eof_checked = False

    def readable(self) -> bool:
        return True

    def read(self, size: int = -1) -> bytes:
        data = self._raw.read(size)
        if data:
            self._scan(data)
        elif not self._eof_checked:
            self._finish()
            self._eof_checked = True
        return data

    def readinto(self, b) -> int:
        data = self.read(len(b))
        b[: len(data)] = data
        return len(data)

    def _scan(self, data: bytes) -> None:
        arr = np.frombuffer(data, dtype=np.uint8)
        is_quote = arr == self._quote
        cum = np.cumsum(is_quote)
        pre_parity = (cum - is_quote + self._parity) & 1
        outside = pre_parity == 0
        sep_idx = np.flatnonzero((arr == self._sep) & outside)
        nl_idx = np.flatnonzero((arr == self._nl) & outside)
        self._parity = int(cum[-1] + self._parity) & 1

        start = 0
        sep_cursor = 0
        for pos in nl_idx.tolist():
            n_sep = int(np.searchsorted(sep_idx, pos)) - sep_cursor
            sep_cursor += n_sep
            fields = self._carry_seps + n_sep + 1
            length = self._carry_len + (pos - start)
            last = int(arr[pos - 1]) if pos > start else self._carry_last
            blank = fields == 1 and (length == 0 or (length == 1 and last == self._cr))
            if not blank and fields != self._width:
                raise CsvFormatError(
                    f"line {self._line}: expected {self._width} fields, found {fields}"
                )
            self._line += 1
            self._carry_seps = 0
            self._carry_len = 0
            self._carry_last = -1
            start = pos + 1
        self._carry_seps += len(sep_idx) - sep_cursor
        self._carry_len += len(arr) - start
        if len(arr) > start:
            self._carry_last = int(arr[-1])

    def _finish(self) -> None:
        if self._parity:
            raise CsvFormatError(f"line {self._line}: unterminated quoted field")
        if self._carry_len == 0:
            return
        fields = self._carry_seps + 1
        blank = fields == 1 and self._carry_len == 1 and self._carry_last == self._cr
        if not blank and fields != self._width:
            raise CsvFormatError(
                f"line {self._line}: expected {self._width} fields, found {fields}"
            )


def _read_header(raw, sep: str) -> list[str]:
    buf = bytearray()
    while True:
        chunk = raw.read(65536)
        if not chunk:
            break
        buf.extend(chunk)
        if b"\n" in chunk:
            break
    if not buf:
        raise CsvFormatError("empty input: no header row")
    line = bytes(buf).split(b"\n", 1)[0].decode("utf-8").rstrip("\r")
    return next(csv.reader([line], delimiter=sep))


def read_batches(
    source,
    format: str,
    schema: Schema,
    batch_size: int,
) -> Iterator[EncodedBatch]:
    """Stream EncodedBatch objects from a CSV/TSV source in file order.

    `source` is a path or a seekable binary file object.  Batches carry
    consecutive indices starting at 0; the final batch may be short; rows are
    never split across batches.
    """
    if format not in _FORMAT_SEPARATORS:
        raise ValueError(f"format must be one of {sorted(_FORMAT_SEPARATORS)}, got {format!r}")
    if batch_size < 2:
        raise ValueError(f"batch_size must be >= 2, got {batch_size}")
    sep = _FORMAT_SEPARATORS[format]

    if isinstance(source, (str, Path)):
        raw = open(source, "rb")
        owns = True
    else:
        raw = source
        owns = False

    try:
        header = _read_header(raw, sep)
        if len(set(header)) != len(header):
            dupes = sorted({h for h in header if header.count(h) > 1})
            raise SchemaError(f"duplicate columns in header: {dupes}")
        if set(header) != set(schema.names):
            extra = sorted(set(header) - set(schema.names))
            missing = sorted(set(schema.names) - set(header))
            parts = []
            if extra:
                parts.append(f"unknown columns {extra}")
            if missing:
                parts.append(f"missing columns {missing}")
            raise SchemaError(f"header does not match schema: {'; '.join(parts)}")
        raw.seek(0)

        keep = [n for n in header if n in schema.feature_names or n == schema.target_name]
        validating = _ValidatingReader(raw, width=len(header), sep=sep.encode())
        reader = pd.read_csv(
            validating,
            sep=sep,
            dtype=str,
            na_filter=False,
            chunksize=batch_size,
            usecols=keep,
            encoding="utf-8",
        )
        missing_token = schema.missing_token
        for batch_index, chunk in enumerate(reader):
            yield _encode_chunk(chunk, batch_index, schema, keep, missing_token)
    finally:
        if owns:
            raw.close()


def _encode_chunk(
    chunk: pd.DataFrame,
    batch_index: int,
    schema: Schema,
    keep: list[str],
    missing_token: str,
) -> EncodedBatch:
    codes: dict[str, np.ndarray] = {}
    cards: dict[str, int] = {}
    uniques: dict[str, np.ndarray] = {}
    counts: dict[str, np.ndarray] = {}
    missing: dict[str, int] = {}
    for name in keep:
        col = chunk[name].to_numpy(dtype=object)
        c, uniq = pd.factorize(col, use_na_sentinel=False)
        c = c.astype(np.int64)
        uniq = np.asarray(uniq, dtype=object)
        cnt = np.bincount(c, minlength=len(uniq))
        codes[name] = c
        cards[name] = len(uniq)
        uniques[name] = uniq
        counts[name] = cnt
        hit = np.flatnonzero(uniq == missing_token)
        missing[name] = int(cnt[hit[0]]) if hit.size else 0
    feature_names = tuple(n for n in keep if n != schema.target_name)
    return EncodedBatch(
        batch_index=batch_index,
        row_count=len(chunk),
        feature_names=feature_names,
        target_name=schema.target_name,
        codes=codes,
        cardinalities=cards,
        uniques=uniques,
        counts=counts,
        missing_counts=missing,
    )
