"""On-disk formats: binary matrix and vector containers, layer maps, sparse
solutions, run configs and CSV result rows.

Binary layout (little-endian)::

    magic[8]  u32 version  u8 dtype  u8[3] reserved  u64 dims...  payload

``dtype`` is 1 for float32 and 2 for float64.  Matrices carry ``n, p`` and a
row-major payload, vectors carry a single length.
"""
from __future__ import annotations

import csv
import hashlib
import io as _io
import json
import math
import os
import struct
from dataclasses import asdict, dataclass, fields

import numpy as np

__all__ = [
    "FormatError",
    "ConfigError",
    "write_matrix",
    "read_matrix",
    "write_vector",
    "read_vector",
    "write_layers",
    "read_layers",
    "write_solution",
    "read_solution",
    "RunConfig",
    "load_config",
    "parse_config",
    "config_digest",
    "CSV_HEADER",
    "append_csv_row",
    "read_csv_rows",
]

MATRIX_MAGIC = b"CHITAMTX"
VECTOR_MAGIC = b"CHITAVEC"
VERSION = 1
DTYPES = {1: np.dtype("<f4"), 2: np.dtype("<f8")}
_CODES = {np.dtype("<f4"): 1, np.dtype("<f8"): 2}
_PREFIX = struct.Struct("<8sIB3s")


class FormatError(ValueError):
    """Malformed file; ``offset`` is the byte position of the problem."""

    def __init__(self, path, offset: int, msg: str):
        self.path, self.offset = str(path), int(offset)
        super().__init__(f"{path}: byte {offset}: {msg}")


class ConfigError(ValueError):
    pass


# binary containers --------------------------------------------------------

def _dtype_code(arr: np.ndarray) -> tuple:
    dt = arr.dtype.newbyteorder("<")
    if dt not in _CODES:
        raise TypeError(f"only float32/float64 can be stored, got {arr.dtype}")
    return _CODES[dt], dt


def _write(path, magic: bytes, dims: tuple, arr: np.ndarray) -> None:
    code, dt = _dtype_code(arr)
    with open(path, "wb") as fh:
        fh.write(_PREFIX.pack(magic, VERSION, code, b"\0\0\0"))
        fh.write(struct.pack(f"<{len(dims)}Q", *dims))
        # chunked so huge matrices are not copied when byte-swapping is needed
        flat = arr.reshape(-1)
        step = 1 << 22
        for start in range(0, flat.size, step):
            fh.write(np.ascontiguousarray(flat[start:start + step], dtype=dt).tobytes())


def _read(path, magic: bytes, ndims: int) -> tuple:
    size = os.path.getsize(path)
    head = _PREFIX.size + 8 * ndims
    with open(path, "rb") as fh:
        raw = fh.read(head)
    if len(raw) < 8 or raw[:8] != magic:
        got = raw[:8]
        raise FormatError(path, 0, f"bad magic {got!r}, expected {magic!r}")
    if len(raw) < head:
        raise FormatError(path, len(raw), f"truncated header ({len(raw)} of {head} bytes)")
    _, version, code, reserved = _PREFIX.unpack_from(raw)
    if version != VERSION:
        raise FormatError(path, 8, f"unsupported version {version}")
    if code not in DTYPES:
        raise FormatError(path, 12, f"unknown dtype code {code}")
    if reserved != b"\0\0\0":
        raise FormatError(path, 13, "reserved bytes must be zero")
    dims = struct.unpack_from(f"<{ndims}Q", raw, _PREFIX.size)
    dt = DTYPES[code]
    expected = head + math.prod(dims) * dt.itemsize
    if size != expected:
        raise FormatError(path, min(size, expected),
                          f"payload size mismatch: file has {size} bytes, header implies {expected}")
    data = np.fromfile(path, dtype=dt, offset=head)
    return dims, data


def write_matrix(path, A) -> None:
    A = np.asarray(A)
    if A.ndim != 2:
        raise ValueError(f"matrix must be 2-D, got shape {A.shape}")
    _write(path, MATRIX_MAGIC, A.shape, A)


def read_matrix(path) -> np.ndarray:
    (n, p), data = _read(path, MATRIX_MAGIC, 2)
    return data.reshape(n, p)


def write_vector(path, v) -> None:
    v = np.asarray(v)
    if v.ndim != 1:
        raise ValueError(f"vector must be 1-D, got shape {v.shape}")
    _write(path, VECTOR_MAGIC, v.shape, v)


def read_vector(path) -> np.ndarray:
    _, data = _read(path, VECTOR_MAGIC, 1)
    return data


# JSON files ---------------------------------------------------------------

def _load_json(path):
    with open(path, "rb") as fh:
        raw = fh.read()
    try:
        return json.loads(raw.decode("utf-8"))
    except UnicodeDecodeError as e:
        raise FormatError(path, e.start, "invalid UTF-8") from None
    except json.JSONDecodeError as e:
        # JSONDecodeError.pos counts characters; report bytes
        raise FormatError(path, len(e.doc[:e.pos].encode("utf-8")), e.msg) from None


def _dump_json(path, obj) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=1)
        fh.write("\n")


def write_layers(path, layers) -> None:
    _dump_json(path, [{"name": str(name), "length": int(length)} for name, length in layers])


def read_layers(path) -> list:
    obj = _load_json(path)
    if not isinstance(obj, list):
        raise FormatError(path, 0, "layer map must be a JSON array")
    out = []
    for i, item in enumerate(obj):
        if (not isinstance(item, dict) or set(item) != {"name", "length"}
                or not isinstance(item["name"], str) or type(item["length"]) is not int
                or item["length"] < 1):
            raise FormatError(path, 0, f"layer entry {i} must be {{name: str, length: positive int}}")
        out.append((item["name"], item["length"]))
    return out


def write_solution(path, weights, k: int, objective: float, digest: str) -> None:
    w = np.asarray(weights, dtype=np.float64)
    idx = np.flatnonzero(w)
    # json writes floats with repr, which round-trips float64 exactly
    _dump_json(path, {
        "p": int(w.size),
        "k": int(k),
        "indices": [int(i) for i in idx],
        "values": [float(x) for x in w[idx]],
        "objective": float(objective),
        "config_digest": digest,
    })


def read_solution(path) -> dict:
    obj = _load_json(path)
    keys = {"p", "k", "indices", "values", "objective", "config_digest"}
    if not isinstance(obj, dict) or set(obj) != keys:
        raise FormatError(path, 0, f"solution must be an object with keys {sorted(keys)}")
    idx = np.asarray(obj["indices"], dtype=np.int64)
    vals = np.asarray(obj["values"], dtype=np.float64)
    p = obj["p"]
    if idx.shape != vals.shape or idx.ndim != 1:
        raise FormatError(path, 0, "indices and values must be arrays of equal length")
    if idx.size and (np.any(np.diff(idx) <= 0) or idx[0] < 0 or idx[-1] >= p):
        raise FormatError(path, 0, "indices must be strictly ascending and inside [0, p)")
    w = np.zeros(p)
    w[idx] = vals
    return {**obj, "indices": idx, "values": vals, "weights": w}


# run configuration --------------------------------------------------------

SOLVER_NAMES = ("iht-cd", "chita-cd", "chita-bso", "blockwise", "multistage", "magnitude")
SCHEDULES = ("exponential", "linear", "constant")


@dataclass(frozen=True)
class RunConfig:
    solver: str
    lam: float
    sparsity: float | None = None
    k: int | None = None
    t_ht: int = 5
    t_cd: int = 2
    gamma: float = 2.0
    active_mult: float = 2.0
    block_size: int = 10_000
    stages: int = 10
    schedule: str = "exponential"
    tau_first: float = 0.5
    n: int = 500
    m: int = 1
    seed: int = 0

    def budget(self, p: int) -> int:
        """Nonzero budget on ``p`` weights (final stage for multi-stage runs)."""
        if self.k is not None:
            return self.k
        return int(math.floor((1.0 - self.sparsity) * p + 1e-9))

    def to_json(self) -> dict:
        d = asdict(self)
        d["lambda"] = d.pop("lam")
        return {key: val for key, val in d.items() if val is not None}


_INT_KEYS = ("k", "t_ht", "t_cd", "block_size", "stages", "n", "m", "seed")
_REAL_KEYS = ("lambda", "sparsity", "gamma", "active_mult", "tau_first")
CONFIG_KEYS = frozenset(_INT_KEYS + _REAL_KEYS + ("solver", "schedule"))


def parse_config(obj) -> RunConfig:
    """Strict validation of a config mapping."""
    if not isinstance(obj, dict):
        raise ConfigError("config must be a JSON object")
    unknown = sorted(set(obj) - CONFIG_KEYS)
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
    for key in ("solver", "lambda"):
        if key not in obj:
            raise ConfigError(f"missing required key {key!r}")
    if ("sparsity" in obj) == ("k" in obj):
        raise ConfigError("exactly one of 'sparsity' and 'k' is required")
    for key in _INT_KEYS:
        if key in obj and type(obj[key]) is not int:
            raise ConfigError(f"{key!r} must be an integer")
    for key in _REAL_KEYS:
        if key in obj and (type(obj[key]) not in (int, float) or not math.isfinite(obj[key])):
            raise ConfigError(f"{key!r} must be a finite number")
    if obj["solver"] not in SOLVER_NAMES:
        raise ConfigError(f"solver must be one of {SOLVER_NAMES}, got {obj['solver']!r}")
    if obj.get("schedule", "exponential") not in SCHEDULES:
        raise ConfigError(f"schedule must be one of {SCHEDULES}")
    kw = {key: obj[key] for key in obj if key != "lambda"}
    cfg = RunConfig(lam=float(obj["lambda"]), **kw)
    checks = [
        (cfg.lam >= 0, "lambda must be >= 0"),
        (cfg.sparsity is None or 0 < cfg.sparsity < 1, "sparsity must lie in (0, 1)"),
        (cfg.k is None or cfg.k >= 1, "k must be >= 1"),
        (cfg.t_ht >= 0 and cfg.t_cd >= 0 and cfg.t_ht + cfg.t_cd >= 1, "need t_ht, t_cd >= 0 and t_ht + t_cd >= 1"),
        (cfg.gamma > 1, "gamma must be > 1"),
        (cfg.active_mult >= 1, "active_mult must be >= 1"),
        (cfg.block_size >= 1 and cfg.stages >= 1, "block_size and stages must be positive"),
        (0 < cfg.tau_first < 1, "tau_first must lie in (0, 1)"),
        (cfg.n >= 1 and cfg.m >= 1, "n and m must be positive"),
        (cfg.seed >= 0, "seed must be non-negative"),
    ]
    for ok, msg in checks:
        if not ok:
            raise ConfigError(msg)
    return cfg


def load_config(path) -> RunConfig:
    try:
        obj = _load_json(path)
    except FormatError as e:
        raise ConfigError(str(e)) from None
    return parse_config(obj)


def config_digest(cfg: RunConfig) -> str:
    """SHA-256 of the canonical (sorted, compact) JSON form."""
    canon = json.dumps(cfg.to_json(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


# CSV results --------------------------------------------------------------

CSV_HEADER = ("solver", "p", "n", "k", "lambda", "seed", "objective_initial", "objective_final",
              "nnz", "wall_ms", "iterations")


def append_csv_row(path, row: dict) -> None:
    """Append one result row, writing the header if the file is new or empty."""
    missing = set(CSV_HEADER) - set(row)
    if missing:
        raise ValueError(f"row lacks columns {sorted(missing)}")
    fresh = not os.path.exists(path) or os.path.getsize(path) == 0
    with open(path, "a", newline="", encoding="utf-8") as fh:
        out = csv.writer(fh)
        if fresh:
            out.writerow(CSV_HEADER)
        out.writerow([_csv_cell(row[c]) for c in CSV_HEADER])


def _csv_cell(x):
    return repr(float(x)) if isinstance(x, (float, np.floating)) else x


def read_csv_rows(path) -> list:
    with open(path, newline="", encoding="utf-8") as fh:
        text = fh.read()
    rows = list(csv.reader(_io.StringIO(text)))
    if not rows or tuple(rows[0]) != CSV_HEADER:
        raise FormatError(path, 0, "missing or wrong CSV header")
    return [dict(zip(CSV_HEADER, r)) for r in rows[1:]]
