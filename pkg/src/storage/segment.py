"""
Binary data segments.

A segment file holds the records of one partition:

    CVDSEG1 <partition_id> <attr_id,attr_id,...>\\n
    row*

Each row is ``>I`` payload length followed by the payload: ``>Q`` rid,
``>H`` value count n, a presence bitmap of ceil(n/8) bytes (bit i set when
attribute i+1 is non-null), then the present values in attribute order:
integer ``>q``, decimal ``>d``, text ``>I`` byte length plus UTF-8.
"""

import struct
from dataclasses import dataclass, field
from typing import AbstractSet, Dict, Iterator, List, Sequence, Tuple

from ..core.exceptions import CorruptionError
from ..core.types import Attribute, DType, Record

MAGIC = "CVDSEG1"

_LEN = struct.Struct(">I")
_ROW_HEAD = struct.Struct(">QH")
_INT = struct.Struct(">q")
_DEC = struct.Struct(">d")


@dataclass
class DataSegment:
    """Records of one partition as loaded from disk."""

    partition_id: int
    records: List[Record] = field(default_factory=list)
    skipped: int = 0
    _index: Dict[int, Record] = field(default_factory=dict, repr=False, compare=False)

    @property
    def cost(self) -> int:
        """Records read to load this segment."""
        return len(self.records)

    @property
    def stored_rows(self) -> int:
        return len(self.records) + self.skipped

    def by_rid(self) -> Dict[int, Record]:
        # segments only grow by appending
        for record in self.records[len(self._index) :]:
            self._index[record.rid] = record
        return self._index

    def rids(self) -> List[int]:
        return [r.rid for r in self.records]


def encode_header(partition_id: int, attr_ids: Sequence[int]) -> bytes:
    ids = ",".join(str(a) for a in attr_ids)
    return f"{MAGIC} {partition_id} {ids}\n".encode("ascii")


def decode_header(data: bytes) -> Tuple[int, List[int], int]:
    """Return (partition_id, attr_ids, header byte length)."""
    end = data.find(b"\n")
    if end < 0:
        raise CorruptionError("segment header is truncated")
    parts = data[:end].decode("ascii").split(" ")
    if len(parts) != 3 or parts[0] != MAGIC:
        raise CorruptionError(f"bad segment header: {data[:end]!r}")
    attr_ids = [int(a) for a in parts[2].split(",") if a]
    return int(parts[1]), attr_ids, end + 1


def encode_row(record: Record, dtypes: Dict[int, DType]) -> bytes:
    values = list(record.values)
    while values and values[-1] is None:
        values.pop()
    n = len(values)
    bitmap = bytearray((n + 7) // 8)
    body = bytearray()
    for i, value in enumerate(values):
        if value is None:
            continue
        bitmap[i // 8] |= 1 << (i % 8)
        dtype = dtypes[i + 1]
        if dtype is DType.INTEGER:
            body += _INT.pack(int(value))
        elif dtype is DType.DECIMAL:
            body += _DEC.pack(float(value))
        else:
            raw = str(value).encode("utf-8")
            body += _LEN.pack(len(raw)) + raw
    payload = _ROW_HEAD.pack(record.rid, n) + bytes(bitmap) + bytes(body)
    return _LEN.pack(len(payload)) + payload


def _decode_payload(payload: bytes, dtypes: Dict[int, DType]) -> Record:
    rid, n = _ROW_HEAD.unpack_from(payload, 0)
    pos = _ROW_HEAD.size
    nbytes = (n + 7) // 8
    bitmap = payload[pos:pos + nbytes]
    pos += nbytes
    values: List[object] = []
    for i in range(n):
        if not bitmap[i // 8] & (1 << (i % 8)):
            values.append(None)
            continue
        dtype = dtypes.get(i + 1)
        if dtype is None:
            raise CorruptionError(f"record {rid} references unknown attribute {i + 1}")
        if dtype is DType.INTEGER:
            values.append(_INT.unpack_from(payload, pos)[0])
            pos += _INT.size
        elif dtype is DType.DECIMAL:
            values.append(_DEC.unpack_from(payload, pos)[0])
            pos += _DEC.size
        else:
            (length,) = _LEN.unpack_from(payload, pos)
            pos += _LEN.size
            values.append(payload[pos:pos + length].decode("utf-8"))
            pos += length
    if pos != len(payload):
        raise CorruptionError(f"record {rid} has {len(payload) - pos} trailing bytes")
    return Record(int(rid), tuple(values))


def iter_payloads(data: bytes, offset: int) -> Iterator[bytes]:
    pos = offset
    size = len(data)
    while pos < size:
        if pos + _LEN.size > size:
            raise CorruptionError("segment row length is truncated")
        (length,) = _LEN.unpack_from(data, pos)
        pos += _LEN.size
        if pos + length > size:
            raise CorruptionError("segment row is truncated")
        if length < _ROW_HEAD.size:
            raise CorruptionError("segment row is shorter than its header")
        yield data[pos:pos + length]
        pos += length


def decode_segment(
    data: bytes, attributes: Sequence[Attribute], deleted: AbstractSet[int] = frozenset()
) -> DataSegment:
    """Decode a segment, passing over rows whose rid is in ``deleted``."""
    partition_id, _, offset = decode_header(data)
    dtypes = {a.attr_id: a.dtype for a in attributes}
    segment = DataSegment(partition_id)
    for payload in iter_payloads(data, offset):
        if deleted and _ROW_HEAD.unpack_from(payload, 0)[0] in deleted:
            segment.skipped += 1
            continue
        segment.records.append(_decode_payload(payload, dtypes))
    return segment


def encode_rows(records: Sequence[Record], attributes: Sequence[Attribute]) -> bytes:
    dtypes = {a.attr_id: a.dtype for a in attributes}
    return b"".join(encode_row(r, dtypes) for r in records)
