"""Readers and writers for HSC1 cubes, PGM masks/maps and CSV score tables."""

import re
import struct
from pathlib import Path

import numpy as np
import numpy.typing as npt
import structlog

from errors import (
    BadMagicError,
    CubeIOError,
    DegenerateInputError,
    DimensionMismatchError,
    NonFiniteValueError,
    TruncatedCubeError,
)
from models import GroundTruth, Map2D, Tensor3, Trace
from tensor_core import band_sequential, from_band_sequential

HSC1_MAGIC = b"HSC1"
HSC1_HEADER = struct.Struct("<4sIIIB")
HSC1_DTYPES = {0: np.dtype("<f4"), 1: np.dtype("<f8")}

PGM_MAGIC = b"P5"
# Magic, then width, height and maxval, each preceded by whitespace and optional comments
PGM_HEADER_PATTERN = re.compile(rb"P5(?:\s+|#[^\n]*\n)+(\d+)(?:\s+|#[^\n]*\n)+(\d+)(?:\s+|#[^\n]*\n)+(\d+)\s")
MASK_THRESHOLD = 127
MAP_MAXVAL = 65535

CSV_FORMAT = "%.17g"
TRACE_HEADER = "iter,F,step,r,seconds,removed,restored"

logger = structlog.get_logger(__name__)


def _read_bytes(path: Path, what: str) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as e:
        logger.error("Failed to read file", what=what, path=str(path), error=str(e))
        raise CubeIOError(f"Cannot read {what} {path}: {e.strerror or e}") from e


def _write_bytes(path: Path, data: bytes, what: str) -> None:
    try:
        Path(path).write_bytes(data)
    except OSError as e:
        logger.error("Failed to write file", what=what, path=str(path), error=str(e))
        raise CubeIOError(f"Cannot write {what} {path}: {e.strerror or e}") from e
    logger.debug("File written", what=what, path=str(path), size=len(data))


def _require_finite(values: npt.NDArray[np.floating], what: str) -> None:
    bad = int(np.count_nonzero(~np.isfinite(values)))
    if bad:
        raise NonFiniteValueError(f"{what} contains {bad} non-finite value(s)")


def read_cube(path: Path) -> Tensor3:
    """Read an HSC1 cube into an (n1, n2, n3) float64 array.

    Raises:
        CubeIOError: If the file cannot be read or has an unknown dtype or trailing bytes
        BadMagicError: If the file does not start with HSC1
        TruncatedCubeError: If the header or payload is shorter than declared
        NonFiniteValueError: If any value is NaN or infinite
    """
    data = _read_bytes(path, "cube")
    if data[: len(HSC1_MAGIC)] != HSC1_MAGIC[: len(data)]:
        raise BadMagicError(f"{path}: not an HSC1 cube")
    if len(data) < HSC1_HEADER.size:
        raise TruncatedCubeError(f"{path}: header is {len(data)} bytes, expected {HSC1_HEADER.size}")

    magic, n1, n2, n3, dtype_code = HSC1_HEADER.unpack_from(data)
    if magic != HSC1_MAGIC:
        raise BadMagicError(f"{path}: bad magic {magic!r}, expected {HSC1_MAGIC!r}")
    if dtype_code not in HSC1_DTYPES:
        raise CubeIOError(f"{path}: unknown dtype code {dtype_code}")
    if min(n1, n2, n3) == 0:
        raise CubeIOError(f"{path}: empty cube {n1}x{n2}x{n3}")

    dtype = HSC1_DTYPES[dtype_code]
    expected = n1 * n2 * n3 * dtype.itemsize
    payload = data[HSC1_HEADER.size :]
    if len(payload) < expected:
        raise TruncatedCubeError(f"{path}: payload is {len(payload)} bytes, header declares {expected}")
    if len(payload) > expected:
        raise CubeIOError(f"{path}: {len(payload) - expected} trailing bytes after payload")

    values = np.frombuffer(payload, dtype=dtype)
    _require_finite(values, f"Cube {path}")

    logger.info("Cube read", path=str(path), shape=(n1, n2, n3), dtype=str(dtype))
    return from_band_sequential(values.astype(np.float64), n1, n2, n3)


def write_cube(path: Path, t: Tensor3, dtype_code: int = 1) -> None:
    """Write an HSC1 cube; dtype 1 (float64) round-trips bit-exactly."""
    t = np.asarray(t)
    if t.ndim != 3:
        raise DimensionMismatchError(f"Cube must be a third-order tensor, got shape {t.shape}")
    if dtype_code not in HSC1_DTYPES:
        raise CubeIOError(f"Unknown dtype code {dtype_code}")
    _require_finite(t, "Cube")

    n1, n2, n3 = t.shape
    payload = band_sequential(t).astype(HSC1_DTYPES[dtype_code]).tobytes()
    _write_bytes(path, HSC1_HEADER.pack(HSC1_MAGIC, n1, n2, n3, dtype_code) + payload, "cube")
    logger.info("Cube written", path=str(path), shape=t.shape, dtype_code=dtype_code)


def normalize_cube(t: Tensor3, peak: float = 1.0) -> Tensor3:
    """Global min-max scaling to [0, peak].

    Raises:
        DegenerateInputError: If the cube is constant
    """
    t = np.asarray(t, dtype=np.float64)
    lo, hi = float(t.min()), float(t.max())
    if not hi > lo:
        raise DegenerateInputError(f"Cannot normalize a constant cube (value {lo})")
    out = (t - lo) / (hi - lo) * peak
    # Pin the extremes so min/max are exactly 0 and peak
    out[t == lo] = 0.0
    out[t == hi] = peak
    return out


def _parse_pgm(data: bytes, path: Path) -> tuple[int, int, int, bytes]:
    if not data.startswith(PGM_MAGIC):
        raise BadMagicError(f"{path}: not a binary PGM (P5) file")
    match = PGM_HEADER_PATTERN.match(data)
    if match is None:
        raise CubeIOError(f"{path}: malformed PGM header")
    width, height, maxval = (int(g) for g in match.groups())
    return width, height, maxval, data[match.end() :]


def read_mask(path: Path) -> GroundTruth:
    """Read an 8-bit P5 mask; pixels above 127 are anomalies.

    Raises:
        BadMagicError: If the file is not P5
        TruncatedCubeError: If the raster is shorter than the header declares
        CubeIOError: On other format problems
    """
    data = _read_bytes(path, "mask")
    width, height, maxval, raster = _parse_pgm(data, path)
    if not 0 < maxval <= 255:
        raise CubeIOError(f"{path}: mask maxval must be in 1..255, got {maxval}")
    expected = width * height
    if len(raster) < expected:
        raise TruncatedCubeError(f"{path}: raster is {len(raster)} bytes, header declares {expected}")

    pixels = np.frombuffer(raster[:expected], dtype=np.uint8).reshape(height, width)
    labels = pixels > MASK_THRESHOLD
    logger.info("Mask read", path=str(path), shape=labels.shape, anomalies=int(labels.sum()))
    return GroundTruth(labels=labels)


def write_mask(path: Path, gt: GroundTruth) -> None:
    n1, n2 = gt.shape
    raster = np.where(gt.labels, 255, 0).astype(np.uint8).tobytes()
    _write_bytes(path, b"P5\n%d %d\n255\n" % (n2, n1) + raster, "mask")


def write_map_pgm(path: Path, m: Map2D) -> None:
    """Write a detection map as a 16-bit P5 image, min-max scaled to 0..65535."""
    m = np.asarray(m, dtype=np.float64)
    _require_finite(m, "Detection map")
    lo, hi = float(m.min()), float(m.max())
    scaled = np.zeros_like(m) if hi <= lo else (m - lo) / (hi - lo)
    raster = np.rint(scaled * MAP_MAXVAL).astype(">u2").tobytes()
    n1, n2 = m.shape
    _write_bytes(path, b"P5\n%d %d\n%d\n" % (n2, n1, MAP_MAXVAL) + raster, "map")


def read_map_pgm(path: Path) -> Map2D:
    """Read a P5 map (8- or 16-bit) scaled back to [0, 1]."""
    data = _read_bytes(path, "map")
    width, height, maxval, raster = _parse_pgm(data, path)
    if not 0 < maxval <= MAP_MAXVAL:
        raise CubeIOError(f"{path}: maxval must be in 1..{MAP_MAXVAL}, got {maxval}")
    dtype = np.dtype(np.uint8) if maxval <= 255 else np.dtype(">u2")
    expected = width * height * dtype.itemsize
    if len(raster) < expected:
        raise TruncatedCubeError(f"{path}: raster is {len(raster)} bytes, header declares {expected}")
    pixels = np.frombuffer(raster[:expected], dtype=dtype).reshape(height, width)
    return pixels.astype(np.float64) / maxval


def write_scores_csv(path: Path, m: Map2D) -> None:
    """Write a score map as comma-separated rows (one per image row) at full precision."""
    try:
        np.savetxt(path, np.asarray(m, dtype=np.float64), fmt=CSV_FORMAT, delimiter=",")
    except OSError as e:
        raise CubeIOError(f"Cannot write scores {path}: {e.strerror or e}") from e
    logger.debug("Scores written", path=str(path), shape=np.shape(m))


def read_scores_csv(path: Path) -> Map2D:
    """Read a comma-separated score map.

    Raises:
        CubeIOError: If the file cannot be read or parsed
        NonFiniteValueError: If any score is NaN or infinite
    """
    try:
        scores = np.loadtxt(path, delimiter=",", ndmin=2, dtype=np.float64)
    except OSError as e:
        logger.error("Failed to read scores", path=str(path), error=str(e))
        raise CubeIOError(f"Cannot read scores {path}: {e.strerror or e}") from e
    except ValueError as e:
        raise CubeIOError(f"{path}: malformed score table: {e}") from e
    if scores.size == 0:
        raise CubeIOError(f"{path}: empty score table")
    _require_finite(scores, f"Scores {path}")
    logger.info("Scores read", path=str(path), shape=scores.shape)
    return scores


def write_roc_csv(path: Path, roc: npt.NDArray[np.float64]) -> None:
    try:
        np.savetxt(path, roc, fmt=CSV_FORMAT, delimiter=",", header="fpr,tpr", comments="")
    except OSError as e:
        raise CubeIOError(f"Cannot write ROC {path}: {e.strerror or e}") from e


def write_trace_csv(path: Path, trace: Trace) -> None:
    lines = [TRACE_HEADER]
    lines.extend(f"{t},{f:.17g},{s:.17g},{r},{sec:.6f},{rem},{res}" for t, f, s, r, sec, rem, res in trace.rows())
    try:
        Path(path).write_text("\n".join(lines) + "\n")
    except OSError as e:
        raise CubeIOError(f"Cannot write trace {path}: {e.strerror or e}") from e
    logger.debug("Trace written", path=str(path), rows=len(trace))
