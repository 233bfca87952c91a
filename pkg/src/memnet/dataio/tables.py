"""CSV formats: connectivity matrix, stimuli, resistance snapshots."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from ..errors import DataError

CONNECTIVITY_HEADER = ["pre", "post", "row", "col"]


@dataclass(frozen=True)
class ConnectivityMatrix:
    """(pre, post) synapse -> (array row, array col) device assignment."""
    entries: tuple[tuple[int, int, int, int], ...]

    def __len__(self):
        return len(self.entries)

    def device_of(self) -> dict[tuple[int, int], tuple[int, int]]:
        return {(p, q): (r, c) for p, q, r, c in self.entries}

    def index_arrays(self, n_in: int, n_out: int) -> tuple[np.ndarray, np.ndarray]:
        """Per-synapse device row/col as (n_in, n_out) arrays; -1 where unmapped."""
        rows = np.full((n_in, n_out), -1, dtype=np.int64)
        cols = np.full((n_in, n_out), -1, dtype=np.int64)
        for p, q, r, c in self.entries:
            rows[p, q] = r
            cols[p, q] = c
        return rows, cols

    def validate(self, n_in: int, n_out: int, rows: int, cols: int) -> "ConnectivityMatrix":
        seen_syn, seen_dev = set(), set()
        for p, q, r, c in self.entries:
            if not (0 <= p < n_in and 0 <= q < n_out):
                raise DataError(f"synapse {p}-{q} outside a {n_in}x{n_out} network")
            if not (0 <= r < rows and 0 <= c < cols):
                raise DataError(f"device ({r}, {c}) overflows a {rows}x{cols} array")
            if (p, q) in seen_syn:
                raise DataError(f"duplicate mapping for synapse {p}-{q}")
            if (r, c) in seen_dev:
                raise DataError(f"device ({r}, {c}) assigned to more than one synapse")
            seen_syn.add((p, q))
            seen_dev.add((r, c))
        return self


def dense_connectivity(n_in: int, n_out: int, cols: int) -> ConnectivityMatrix:
    """All-to-all mapping packed row-major: synapse (i, j) -> divmod(i*n_out + j, cols)."""
    return ConnectivityMatrix(tuple((i, j, *divmod(i * n_out + j, cols))
                                    for i in range(n_in) for j in range(n_out)))


def write_connectivity(conn: ConnectivityMatrix) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CONNECTIVITY_HEADER)
    w.writerows(conn.entries)
    return buf.getvalue()


def parse_connectivity(text: str, n_in: int | None = None, n_out: int | None = None,
                       rows: int | None = None, cols: int | None = None) -> ConnectivityMatrix:
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or [h.strip() for h in header] != CONNECTIVITY_HEADER:
        raise DataError(f"connectivity header must be {','.join(CONNECTIVITY_HEADER)}")
    entries = []
    for lineno, rec in enumerate(reader, start=2):
        if not rec or all(not f.strip() for f in rec):
            continue
        try:
            if len(rec) != 4:
                raise ValueError
            entries.append(tuple(int(f) for f in rec))
        except ValueError:
            raise DataError(f"malformed connectivity row at line {lineno}: {rec!r}") from None
    conn = ConnectivityMatrix(tuple(entries))
    big = 1 << 62
    return conn.validate(n_in or big, n_out or big, rows or big, cols or big)


@dataclass(frozen=True)
class StimuliSet:
    spikes: np.ndarray            # (timesteps, width) of 0/1
    labels: tuple[int | None, ...]

    def __len__(self):
        return self.spikes.shape[0]

    @property
    def width(self) -> int:
        return self.spikes.shape[1]


def write_stimuli(stim: StimuliSet) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "label"] + [f"s{i}" for i in range(stim.width)])
    for t, (row, label) in enumerate(zip(stim.spikes, stim.labels)):
        w.writerow([t, "" if label is None else label] + [int(v) for v in row])
    return buf.getvalue()


def parse_stimuli(text: str, width: int | None = None, n_labels: int | None = None) -> StimuliSet:
    rows, labels = [], []
    for lineno, rec in enumerate(csv.reader(io.StringIO(text)), start=1):
        if not rec or all(not f.strip() for f in rec):
            continue
        if lineno == 1 and rec[0].strip() == "t":
            continue
        if len(rec) < 3:
            raise DataError(f"stimuli line {lineno}: expected t, label and spike columns")
        bits = rec[2:]
        if width is None:
            width = len(bits)
        if len(bits) != width:
            raise DataError(f"stimuli line {lineno}: width {len(bits)} != {width}")
        try:
            vec = [int(b) for b in bits]
        except ValueError:
            raise DataError(f"stimuli line {lineno}: non-integer spike entry") from None
        if any(v not in (0, 1) for v in vec):
            raise DataError(f"stimuli line {lineno}: non-binary spike entry")
        label = rec[1].strip()
        if label:
            try:
                lab = int(label)
            except ValueError:
                raise DataError(f"stimuli line {lineno}: bad label {label!r}") from None
            if lab < 0 or (n_labels is not None and lab >= n_labels):
                raise DataError(f"stimuli line {lineno}: label {lab} out of range")
            labels.append(lab)
        else:
            labels.append(None)
        rows.append(vec)
    spikes = np.array(rows, dtype=np.int8).reshape(len(rows), width or 0)
    return StimuliSet(spikes, tuple(labels))


def write_snapshot(R: np.ndarray) -> str:
    """Full array as a rows x cols grid of resistances (ohms)."""
    return "".join(",".join(repr(float(v)) for v in row) + "\n" for row in np.asarray(R))


def parse_snapshot(text: str) -> np.ndarray:
    try:
        grid = [[float(v) for v in line.split(",")] for line in text.splitlines() if line.strip()]
    except ValueError as e:
        raise DataError(f"malformed snapshot value: {e}") from None
    if not grid or len({len(r) for r in grid}) != 1:
        raise DataError("snapshot must be a non-empty rectangular grid")
    return np.array(grid)
