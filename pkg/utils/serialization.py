"""
CSV and JSON readers and writers for run outputs.

Floats are written with ``repr`` so every file parses back to the exact
same values; JSON keys are sorted so reruns are byte-identical.
"""
import csv
import json
from pathlib import Path

import numpy as np

from models.measurement import CountRecord
from models.quantum import DensityMatrix
from utils.errors import ConfigurationError, UsageError

SCAN_HEADER = ['parameter', 'analytic_rate', 'sampled_counts', 'window']
COUNTS_HEADER = ['setting', 'counts', 'window']


def _to_builtin(value):
    if isinstance(value, dict):
        return {str(k): _to_builtin(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_to_builtin(v) for v in value]
    if isinstance(value, np.ndarray):
        return _to_builtin(value.tolist())
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, (complex, np.complexfloating)):
        return [float(value.real), float(value.imag)]
    return value


def write_json(path, payload):
    text = json.dumps(_to_builtin(payload), indent=2, sort_keys=True, allow_nan=False)
    Path(path).write_text(text + '\n', encoding='utf-8')
    return Path(path)


def read_json(path):
    path = Path(path)
    try:
        return json.loads(path.read_text(encoding='utf-8'))
    except OSError as e:
        raise ConfigurationError(f"cannot read {path}: {e.strerror}") from e
    except json.JSONDecodeError as e:
        raise ConfigurationError(f"{path.name}: invalid JSON ({e.msg})", line_number=e.lineno) from e


def write_csv(path, header, rows):
    with open(path, 'w', newline='', encoding='utf-8') as handle:
        writer = csv.writer(handle, lineterminator='\n')
        writer.writerow(header)
        writer.writerows(rows)
    return Path(path)


def read_csv(path, header):
    """Rows after an exact header match, as (line_number, row) pairs."""
    path = Path(path)
    try:
        with open(path, newline='', encoding='utf-8') as handle:
            rows = list(csv.reader(handle))
    except OSError as e:
        raise ConfigurationError(f"cannot read {path}: {e.strerror}") from e
    if not rows or [c.strip() for c in rows[0]] != header:
        raise ConfigurationError(f"{path.name}: expected header {','.join(header)}", line_number=1)
    return [(number, row) for number, row in enumerate(rows[1:], start=2) if row]


# -- scans -------------------------------------------------------------------

def write_scan(path, points):
    return write_csv(path, SCAN_HEADER, [p.to_row() for p in points])


def read_scan(path):
    """Scan rows as (parameter, analytic_rate, sampled_counts, window) tuples."""
    parsed = []
    for line_number, row in read_csv(path, SCAN_HEADER):
        try:
            parsed.append((float(row[0]), float(row[1]), int(row[2]), float(row[3])))
        except (ValueError, IndexError) as e:
            raise ConfigurationError(f"{Path(path).name}: malformed scan row ({e})", line_number=line_number) from e
    return parsed


# -- density matrices ---------------------------------------------------------

def write_density_csv(path, matrix):
    """One CSV row per matrix row, holding re,im pairs in column order."""
    entries = np.asarray(getattr(matrix, 'entries', matrix))
    rows = [[repr(float(part)) for z in row for part in (z.real, z.imag)] for row in entries]
    header = [f'{kind}{col}' for col in range(entries.shape[1]) for kind in ('re', 'im')]
    return write_csv(path, header, rows)


def read_density_csv(path, subsystem_dims=None, validate=True):
    """Inverse of ``write_density_csv``; ``validate`` returns a DensityMatrix."""
    path = Path(path)
    with open(path, newline='', encoding='utf-8') as handle:
        rows = list(csv.reader(handle))
    if len(rows) < 2:
        raise ConfigurationError(f"{path.name}: empty density matrix file")
    dim = len(rows[0]) // 2
    matrix = np.zeros((dim, dim), dtype=complex)
    if len(rows) - 1 != dim:
        raise ConfigurationError(f"{path.name}: expected {dim} rows, found {len(rows) - 1}")
    for index, row in enumerate(rows[1:]):
        try:
            values = [float(v) for v in row]
        except ValueError as e:
            raise ConfigurationError(f"{path.name}: malformed entry ({e})", line_number=index + 2) from e
        if len(values) != 2 * dim:
            raise ConfigurationError(f"{path.name}: expected {2 * dim} values", line_number=index + 2)
        matrix[index] = np.array(values[0::2]) + 1j * np.array(values[1::2])
    if not validate:
        return matrix
    return DensityMatrix(matrix, subsystem_dims)


# -- count files ----------------------------------------------------------------

def write_counts(path, records):
    rows = [[r.label, str(r.counts), repr(float(r.window))] for r in records]
    return write_csv(path, COUNTS_HEADER, rows)


def read_counts(path, protocol):
    """
    Count records for ``protocol`` from a (setting, counts, window) CSV.

    Errors name the offending row. Every protocol setting must appear once.
    """
    path = Path(path)
    records = {}
    for line_number, row in read_csv(path, COUNTS_HEADER):
        try:
            label, counts, window = row[0].strip(), int(row[1]), float(row[2])
        except (ValueError, IndexError) as e:
            raise ConfigurationError(f"{path.name}: malformed counts row ({e})", line_number=line_number) from e
        try:
            setting = protocol.settings[protocol.index(label)]
        except UsageError as e:
            raise ConfigurationError(f"{path.name}: {e.message}", line_number=line_number) from e
        if label in records:
            raise ConfigurationError(f"{path.name}: duplicate setting '{label}'", line_number=line_number)
        if counts < 0 or not window > 0:
            raise ConfigurationError(f"{path.name}: counts must be >= 0 and window > 0", line_number=line_number)
        records[label] = CountRecord(setting.with_changes(window=window), counts)
    missing = [label for label in protocol.labels if label not in records]
    if missing:
        raise ConfigurationError(f"{path.name}: missing settings {', '.join(missing)}")
    return [records[label] for label in protocol.labels]
