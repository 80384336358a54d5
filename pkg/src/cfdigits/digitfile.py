"""Reading and writing continued-fraction digit files.

Text form::

    # cf-digits v1 const=<name> leading=<a0> count=<N> [key=value ...]
    7
    15
    ...

Binary form: magic ``CFD1``, the leading term as a zigzag LEB128 varint,
then each digit as an unsigned LEB128 varint.  The binary form carries no
metadata.
"""

import os

import numpy as np

from .cf import CFDigitStream
from .errors import ParseError, ValidationError

MAGIC = b"CFD1"
TEXT_TAG = "# cf-digits v1"

# Header keys that are part of the stream itself, not free-form provenance.
_CORE_KEYS = ("const", "leading", "count")


def zigzag(n):
    return 2 * n if n >= 0 else -2 * n - 1


def unzigzag(z):
    return z >> 1 if not z & 1 else -((z + 1) >> 1)


def encode_varint(n):
    out = bytearray()
    while True:
        byte = n & 0x7F
        n >>= 7
        if n:
            out.append(byte | 0x80)
        else:
            out.append(byte)
            return bytes(out)


def _decode_one(buf, pos):
    shift = 0
    value = 0
    while True:
        if pos >= len(buf):
            raise ParseError("truncated varint", pos)
        b = buf[pos]
        pos += 1
        value |= (b & 0x7F) << shift
        if not b & 0x80:
            return value, pos
        shift += 7


def encode_varints(values):
    """LEB128-encode a sequence of non-negative ints (vectorized when they fit in 63 bits)."""
    if not len(values):
        return b""
    if max(values) >= 1 << 63:
        return b"".join(encode_varint(int(v)) for v in values)
    v = np.asarray(values, dtype=np.uint64)
    nbytes = np.ones(len(v), dtype=np.int64)
    rest = v >> np.uint64(7)
    while rest.any():
        nz = rest != 0
        nbytes += nz
        rest = rest >> np.uint64(7)
    offsets = np.concatenate(([0], np.cumsum(nbytes)[:-1]))
    out = np.zeros(int(nbytes.sum()), dtype=np.uint8)
    for i in range(int(nbytes.max())):
        sel = nbytes > i
        chunk = (v[sel] >> np.uint64(7 * i)) & np.uint64(0x7F)
        cont = (nbytes[sel] - 1 > i).astype(np.uint64) << np.uint64(7)
        out[offsets[sel] + i] = (chunk | cont).astype(np.uint8)
    return out.tobytes()


def decode_varints(buf, start=0):
    """Decode every varint in ``buf[start:]`` into a list of ints."""
    arr = np.frombuffer(buf, dtype=np.uint8, offset=start)
    if not len(arr):
        return []
    ends = np.flatnonzero((arr & 0x80) == 0)
    if not len(ends) or ends[-1] != len(arr) - 1:
        raise ParseError("truncated varint at end of file", len(buf))
    starts = np.concatenate(([0], ends[:-1] + 1))
    lengths = ends - starts + 1
    if lengths.max() > 9:
        values = []
        pos = start
        while pos < len(buf):
            value, pos = _decode_one(buf, pos)
            values.append(value)
        return values
    pos_in_group = np.arange(len(arr)) - np.repeat(starts, lengths)
    parts = (arr & 0x7F).astype(np.uint64) << (7 * pos_in_group).astype(np.uint64)
    return np.add.reduceat(parts, starts).tolist()


def to_binary(stream):
    return MAGIC + encode_varint(zigzag(stream.leading)) + encode_varints(stream.digits)


def from_binary(data, meta=None):
    if data[:4] != MAGIC:
        raise ParseError("bad magic, expected CFD1", 0)
    z, pos = _decode_one(data, 4)
    digits = decode_varints(data, pos)
    if digits and min(digits) < 1:
        raise ParseError("digit 0 in binary digit file")
    return CFDigitStream(unzigzag(z), tuple(digits), False, dict(meta or {}))


def header_line(stream, const=None, **extra):
    meta = dict(stream.provenance)
    meta.update(extra)
    if stream.finite:
        meta["finite"] = 1
    name = const or meta.pop("const", None) or "unknown"
    meta.pop("const", None)
    fields = [TEXT_TAG, f"const={name}", f"leading={stream.leading}", f"count={len(stream.digits)}"]
    for key in sorted(meta):
        if key in _CORE_KEYS:
            continue
        fields.append(f"{key}={meta[key]}")
    return " ".join(fields)


def to_text(stream, const=None, **extra):
    lines = [header_line(stream, const, **extra)]
    lines.extend(map(str, stream.digits))
    return "\n".join(lines) + "\n"


def parse_header(line):
    if not line.startswith(TEXT_TAG):
        raise ParseError("missing '# cf-digits v1' header", 0)
    meta = {}
    for token in line[len(TEXT_TAG):].split():
        key, sep, value = token.partition("=")
        if not sep:
            raise ParseError(f"bad header field {token!r}")
        meta[key] = value
    for key in ("leading", "count"):
        if key not in meta:
            raise ParseError(f"header lacks {key}=")
    return meta


def from_text(text):
    head, _, body = text.partition("\n")
    meta = parse_header(head.strip())
    leading = int(meta.pop("leading"))
    count = int(meta.pop("count"))
    try:
        arr = np.array(body.split(), dtype=np.int64) if body.strip() else np.zeros(0, np.int64)
        digits = arr.tolist()
    except (ValueError, OverflowError):
        digits = []
        for i, tok in enumerate(body.split()):
            if not tok.isdigit():
                raise ParseError(f"bad digit {tok!r} on line {i + 2}") from None
            digits.append(int(tok))
    if len(digits) != count:
        raise ValidationError(f"header count={count} but file holds {len(digits)} digits")
    if digits and min(digits) < 1:
        raise ParseError("digit < 1 in text digit file")
    finite = meta.get("finite") == "1"
    return CFDigitStream(leading, tuple(digits), finite, meta)


def write(stream, path, fmt="text", const=None, **extra):
    """Write ``stream`` to ``path`` in ``fmt`` ('text' or 'binary')."""
    if fmt == "binary":
        data = to_binary(stream)
    elif fmt == "text":
        data = to_text(stream, const, **extra).encode("ascii")
    else:
        raise ValueError(f"unknown digit file format {fmt!r}")
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(data)
    os.replace(tmp, path)


def read(path):
    """Read a text or binary digit file (format sniffed from the first bytes)."""
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] == MAGIC:
        return from_binary(data)
    try:
        text = data.decode("ascii")
    except UnicodeDecodeError as exc:
        raise ParseError("digit file is neither CFD1 binary nor ASCII text", exc.start) from None
    return from_text(text)


def read_format(path):
    """'binary' or 'text', from the first bytes of ``path``."""
    with open(path, "rb") as fh:
        return "binary" if fh.read(4) == MAGIC else "text"
