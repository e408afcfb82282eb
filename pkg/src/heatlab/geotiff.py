"""Minimal single-band GeoTIFF converter for the ingestion boundary.

Supported layouts: classic TIFF (either byte order), striped, single band,
uncompressed or DEFLATE, integer or IEEE-float samples, horizontal-difference
predictor for integers. Georeferencing comes from ModelPixelScale +
ModelTiepoint and the GeoKeyDirectory EPSG code; nodata from the GDAL nodata
tag. Anything else is rejected with a clear error rather than guessed at.

The writer emits uncompressed float32 strips and is the test fixture source;
the analysis core itself only speaks the portable .grid format.
"""

from __future__ import annotations

import struct
import zlib
from pathlib import Path

import numpy as np

from .errors import DataError
from .grid import DEFAULT_NODATA, GeoGrid, GridSpec

# tag ids
_WIDTH, _HEIGHT, _BITS, _COMPRESSION, _PHOTOMETRIC = 256, 257, 258, 259, 262
_STRIP_OFFSETS, _SAMPLES_PER_PIXEL, _ROWS_PER_STRIP, _STRIP_COUNTS = 273, 277, 278, 279
_PREDICTOR, _TILE_WIDTH, _SAMPLE_FORMAT = 317, 322, 339
_MODEL_SCALE, _MODEL_TIEPOINT, _GEO_KEYS, _GDAL_NODATA = 33550, 33922, 34735, 42113

_TYPE_SIZE = {1: 1, 2: 1, 3: 2, 4: 4, 5: 8, 6: 1, 7: 1, 8: 2, 9: 4, 10: 8, 11: 4, 12: 8}
_TYPE_FMT = {1: "B", 3: "H", 4: "I", 6: "b", 8: "h", 9: "i", 11: "f", 12: "d"}


def _bad(path, why: str) -> DataError:
    return DataError("bad_geotiff", f"{path}: {why}")


def _read_values(buf: bytes, endian: str, ftype: int, count: int, raw: bytes, path) -> list:
    size = _TYPE_SIZE.get(ftype)
    if size is None:
        raise _bad(path, f"unsupported tag type {ftype}")
    total = size * count
    data = raw[:4] if total <= 4 else None
    if data is None:
        (offset,) = struct.unpack(endian + "I", raw)
        data = buf[offset : offset + total]
        if len(data) < total:
            raise _bad(path, "tag value runs past end of file")
    if ftype == 2:
        return [data[:count]]
    if ftype == 5:
        vals = struct.unpack(endian + "I" * (2 * count), data[:total])
        return [vals[2 * i] / vals[2 * i + 1] for i in range(count)]
    fmt = _TYPE_FMT[ftype]
    return list(struct.unpack(endian + fmt * count, data[:total]))


def _parse_geokeys(keys: list, path) -> int:
    if len(keys) < 4 or len(keys) % 4 != 0:
        raise _bad(path, "malformed GeoKey directory")
    epsg = None
    fallback = None
    for i in range(4, len(keys), 4):
        key_id, location, _count, value = keys[i : i + 4]
        if location != 0:
            continue
        if key_id == 3072:
            epsg = value
        elif key_id == 2048:
            fallback = value
    code = epsg if epsg is not None else fallback
    if code is None:
        raise _bad(path, "no EPSG code in GeoKey directory")
    return int(code)


def _inflate(chunk: bytes, path) -> bytes:
    try:
        return zlib.decompress(chunk)
    except zlib.error:
        try:
            return zlib.decompress(chunk, -15)
        except zlib.error as e:
            raise _bad(path, f"bad deflate strip: {e}") from e


def read_geotiff(path) -> GeoGrid:
    path = Path(path)
    buf = path.read_bytes()
    if len(buf) < 8:
        raise _bad(path, "file too short for a TIFF header")
    if buf[:2] == b"II":
        endian = "<"
    elif buf[:2] == b"MM":
        endian = ">"
    else:
        raise _bad(path, "not a TIFF file")
    (magic,) = struct.unpack(endian + "H", buf[2:4])
    if magic == 43:
        raise _bad(path, "BigTIFF is not supported")
    if magic != 42:
        raise _bad(path, "not a TIFF file")
    (ifd_offset,) = struct.unpack(endian + "I", buf[4:8])
    if ifd_offset + 2 > len(buf):
        raise _bad(path, "IFD offset out of range")
    (n_entries,) = struct.unpack(endian + "H", buf[ifd_offset : ifd_offset + 2])

    tags: dict[int, list] = {}
    for i in range(n_entries):
        base = ifd_offset + 2 + 12 * i
        entry = buf[base : base + 12]
        if len(entry) < 12:
            raise _bad(path, "IFD entry table runs past end of file")
        tag, ftype, count = struct.unpack(endian + "HHI", entry[:8])
        try:
            tags[tag] = _read_values(buf, endian, ftype, count, entry[8:12], path)
        except DataError:
            raise
        except Exception:
            continue  # tolerate exotic private tags

    def need(tag: int, name: str) -> list:
        if tag not in tags:
            raise _bad(path, f"missing required tag {name}")
        return tags[tag]

    if _TILE_WIDTH in tags:
        raise _bad(path, "tiled layouts are not supported, expected strips")
    width = int(need(_WIDTH, "ImageWidth")[0])
    height = int(need(_HEIGHT, "ImageLength")[0])
    samples = int(tags.get(_SAMPLES_PER_PIXEL, [1])[0])
    if samples != 1:
        raise _bad(path, f"expected a single band, found {samples}")
    bits = int(need(_BITS, "BitsPerSample")[0])
    compression = int(tags.get(_COMPRESSION, [1])[0])
    if compression not in (1, 8, 32946):  # none; zlib deflate (both code points)
        raise _bad(path, f"unsupported compression {compression}")
    predictor = int(tags.get(_PREDICTOR, [1])[0])
    sample_format = int(tags.get(_SAMPLE_FORMAT, [1])[0])
    kind = {1: "u", 2: "i", 3: "f"}.get(sample_format)
    if kind is None:
        raise _bad(path, f"unsupported sample format {sample_format}")
    if kind == "f" and bits not in (32, 64):
        raise _bad(path, f"unsupported float width {bits}")
    if kind != "f" and bits not in (8, 16, 32):
        raise _bad(path, f"unsupported integer width {bits}")
    if predictor == 2 and kind == "f":
        raise _bad(path, "horizontal predictor on float samples is not supported")
    if predictor not in (1, 2):
        raise _bad(path, f"unsupported predictor {predictor}")

    offsets = [int(v) for v in need(_STRIP_OFFSETS, "StripOffsets")]
    counts = [int(v) for v in need(_STRIP_COUNTS, "StripByteCounts")]
    rows_per_strip = int(tags.get(_ROWS_PER_STRIP, [height])[0])
    if len(offsets) != len(counts):
        raise _bad(path, "strip offset/count tables disagree")

    dtype = np.dtype(f"{endian}{kind}{bits // 8}")
    rows = []
    for i, (off, cnt) in enumerate(zip(offsets, counts)):
        n_rows = min(rows_per_strip, height - i * rows_per_strip)
        if n_rows <= 0:
            raise _bad(path, "more strips than image rows")
        chunk = buf[off : off + cnt]
        if len(chunk) < cnt:
            raise _bad(path, "strip data runs past end of file")
        if compression != 1:
            chunk = _inflate(chunk, path)
        expected = n_rows * width * dtype.itemsize
        if len(chunk) != expected:
            raise _bad(path, f"strip {i} holds {len(chunk)} bytes, expected {expected}")
        strip = np.frombuffer(chunk, dtype=dtype).reshape(n_rows, width)
        if predictor == 2:
            strip = np.cumsum(strip, axis=1, dtype=dtype)
        rows.append(strip)
    data = np.concatenate(rows, axis=0)
    if data.shape != (height, width):
        raise _bad(path, f"assembled {data.shape}, expected {(height, width)}")

    scale = tags.get(_MODEL_SCALE)
    tiepoint = tags.get(_MODEL_TIEPOINT)
    if not scale or not tiepoint or len(scale) < 2 or len(tiepoint) < 6:
        raise _bad(path, "missing ModelPixelScale/ModelTiepoint georeferencing")
    sx, sy = float(scale[0]), float(scale[1])
    if sx <= 0 or sy <= 0 or abs(sx - sy) > 1e-6 * max(sx, sy):
        raise _bad(path, f"pixels must be square and positive, got {sx} x {sy}")
    ti, tj, _tk, tx, ty = (float(v) for v in tiepoint[:5])
    origin_x = tx - ti * sx
    origin_y = ty + tj * sy
    epsg = _parse_geokeys(need(_GEO_KEYS, "GeoKeyDirectory"), path)

    declared = None
    if _GDAL_NODATA in tags:
        text = tags[_GDAL_NODATA][0]
        if isinstance(text, bytes):
            text = text.split(b"\x00")[0].decode("ascii", "replace").strip()
        try:
            declared = float(text)
        except ValueError:
            declared = None

    values = data.astype(np.float64)
    bad = ~np.isfinite(values)
    if declared is not None and np.isfinite(declared):
        bad |= values == declared
        nodata = declared
    else:
        nodata = DEFAULT_NODATA
    out = values.astype(np.float32)
    out[bad] = np.float32(nodata)
    spec = GridSpec(width=width, height=height, origin_x=origin_x, origin_y=origin_y,
                    pixel_size=sx, crs_code=epsg)
    return GeoGrid(spec, out, nodata=nodata)


def write_geotiff(path, grid: GeoGrid) -> None:
    """Write an uncompressed striped float32 GeoTIFF (little-endian)."""
    path = Path(path)
    h, w = grid.spec.height, grid.spec.width
    rows_per_strip = max(1, min(h, 8192 // max(1, w * 4) + 1))
    payload = np.ascontiguousarray(grid.values, dtype="<f4").tobytes()
    strips = []
    for r0 in range(0, h, rows_per_strip):
        n = min(rows_per_strip, h - r0)
        strips.append(payload[r0 * w * 4 : (r0 + n) * w * 4])
    n_strips = len(strips)

    nodata_text = (f"{grid.nodata:g}").encode("ascii") + b"\x00"
    geokeys = [1, 1, 0, 3, 1024, 0, 1, 1, 1025, 0, 1, 1, 3072, 0, 1, int(grid.spec.crs_code)]
    scale = [grid.spec.pixel_size, grid.spec.pixel_size, 0.0]
    tiepoint = [0.0, 0.0, 0.0, grid.spec.origin_x, grid.spec.origin_y, 0.0]

    # data layout: header | strips | IFD | external tag values
    strip_offsets = []
    pos = 8
    for s in strips:
        strip_offsets.append(pos)
        pos += len(s)
    ifd_offset = pos

    entries = []  # (tag, type, count, packed-or-bytes)

    def inline(tag, ftype, values, fmt):
        raw = struct.pack("<" + fmt * len(values), *values)
        entries.append((tag, ftype, len(values), raw.ljust(4, b"\x00")))

    def external(tag, ftype, values, fmt):
        raw = struct.pack("<" + fmt * len(values), *values)
        entries.append((tag, ftype, len(values), raw))

    def add_array(tag, ftype, values, fmt):
        size = struct.calcsize(fmt) * len(values)
        (inline if size <= 4 else external)(tag, ftype, values, fmt)

    add_array(_WIDTH, 4, [w], "I")
    add_array(_HEIGHT, 4, [h], "I")
    add_array(_BITS, 3, [32], "H")
    add_array(_COMPRESSION, 3, [1], "H")
    add_array(_PHOTOMETRIC, 3, [1], "H")
    add_array(_STRIP_OFFSETS, 4, strip_offsets, "I")
    add_array(_SAMPLES_PER_PIXEL, 3, [1], "H")
    add_array(_ROWS_PER_STRIP, 4, [rows_per_strip], "I")
    add_array(_STRIP_COUNTS, 4, [len(s) for s in strips], "I")
    add_array(_SAMPLE_FORMAT, 3, [3], "H")
    add_array(_MODEL_SCALE, 12, scale, "d")
    add_array(_MODEL_TIEPOINT, 12, tiepoint, "d")
    add_array(_GEO_KEYS, 3, geokeys, "H")
    entries.append((_GDAL_NODATA, 2, len(nodata_text), nodata_text))

    entries.sort(key=lambda e: e[0])
    ifd_size = 2 + 12 * len(entries) + 4
    ext_pos = ifd_offset + ifd_size
    ifd = [struct.pack("<H", len(entries))]
    ext_blobs = []
    for tag, ftype, count, raw in entries:
        if len(raw) <= 4 and count * _TYPE_SIZE[ftype] <= 4:
            ifd.append(struct.pack("<HHI", tag, ftype, count) + raw.ljust(4, b"\x00"))
        else:
            ifd.append(struct.pack("<HHII", tag, ftype, count, ext_pos))
            ext_blobs.append(raw)
            ext_pos += len(raw)
            if ext_pos % 2:  # keep word alignment
                ext_blobs.append(b"\x00")
                ext_pos += 1
    ifd.append(struct.pack("<I", 0))

    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        f.write(b"II" + struct.pack("<HI", 42, ifd_offset))
        for s in strips:
            f.write(s)
        f.write(b"".join(ifd))
        f.write(b"".join(ext_blobs))
