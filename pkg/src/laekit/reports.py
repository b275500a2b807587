"""CSV artifact writing: versioned schema comment, mandatory header row."""

import csv
import json
from pathlib import Path

import numpy as np


def format_value(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def write_csv(path, schema: str, header: list[str], rows) -> Path:
    """Write rows with a `# schema: <name> v1` comment line, then the header."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        f.write(f"# schema: {schema} v1\n")
        writer = csv.writer(f)
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_value(v) for v in row])
    return path


def write_matrix_csv(path, schema: str, M: np.ndarray, prefix: str = "c") -> Path:
    M = np.atleast_2d(np.asarray(M, dtype=float))
    header = [f"{prefix}{j}" for j in range(M.shape[1])]
    return write_csv(path, schema, header, M.tolist())


def read_csv(path) -> tuple[str, list[str], list[list[str]]]:
    """Read back a versioned CSV: (schema line, header, string rows)."""
    with open(path, newline="") as f:
        schema = f.readline().strip()
        reader = csv.reader(f)
        header = next(reader)
        rows = [row for row in reader]
    return schema, header, rows


def write_config(path, values: dict) -> Path:
    """Serialize a resolved run configuration as flat `key = value` lines."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = []
    for key in sorted(values):
        v = values[key]
        if isinstance(v, Path):
            v = str(v)
        lines.append(f"{key} = {json.dumps(v)}")
    path.write_text("\n".join(lines) + "\n")
    return path


def read_config(path) -> dict:
    """Parse flat `key = value` lines; values are JSON scalars/lists, else strings."""
    values = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        key, _, raw = line.partition("=")
        raw = raw.strip()
        try:
            values[key.strip()] = json.loads(raw)
        except json.JSONDecodeError:
            values[key.strip()] = raw
    return values
