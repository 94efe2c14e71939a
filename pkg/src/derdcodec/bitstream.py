"""Bitstream container: "DERD" magic, little-endian u32 header, frame payloads.

Layout:
  magic  4 bytes  "DERD"
  u32    version (1)
  u32    width, height, frame_count
  u32    objective id (0 rdo, 1 dedo, 2 derdo)
  u32    QP
  u32    flags (bit 0: audit section present)
  per frame: u32 payload length + payload bytes
  audit (optional): u32 length + JSON feature-count summary of the stream
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass

from .energy_model import FeatureCounts
from .errors import BitstreamError

MAGIC = b"DERD"
VERSION = 1
OBJECTIVE_IDS = {"rdo": 0, "dedo": 1, "derdo": 2}
OBJECTIVE_NAMES = {v: k for k, v in OBJECTIVE_IDS.items()}
FLAG_AUDIT = 1

HEADER_FMT = "<4s7I"
HEADER_SIZE = struct.calcsize(HEADER_FMT)
OBJECTIVE_FIELD_OFFSET = 4 + 4 * 4  # byte offset of the objective-id field


@dataclass(frozen=True)
class StreamHeader:
    width: int
    height: int
    frame_count: int
    objective: str
    qp: int
    has_audit: bool


def write_container(path, header: StreamHeader, payloads,
                    audit_counts: FeatureCounts | None = None) -> None:
    flags = FLAG_AUDIT if audit_counts is not None else 0
    blob = struct.pack(
        HEADER_FMT, MAGIC, VERSION, header.width, header.height,
        header.frame_count, OBJECTIVE_IDS[header.objective], header.qp, flags,
    )
    parts = [blob]
    for p in payloads:
        parts.append(struct.pack("<I", len(p)))
        parts.append(p)
    if audit_counts is not None:
        audit = json.dumps(audit_counts.to_json_dict()).encode()
        parts.append(struct.pack("<I", len(audit)))
        parts.append(audit)
    with open(path, "wb") as fh:
        fh.write(b"".join(parts))


def read_container(path):
    """Returns (StreamHeader, list of payload bytes, audit FeatureCounts or None)."""
    data = open(path, "rb").read()
    return parse_container(data)


def parse_container(data: bytes):
    if len(data) < HEADER_SIZE:
        raise BitstreamError("file shorter than container header", position=len(data))
    magic, version, w, h, nframes, obj_id, qp, flags = struct.unpack_from(HEADER_FMT, data)
    if magic != MAGIC:
        raise BitstreamError(f"bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise BitstreamError(f"unsupported container version {version}")
    if obj_id not in OBJECTIVE_NAMES:
        raise BitstreamError(f"unknown objective id {obj_id}")
    if not (0 <= qp <= 51):
        raise BitstreamError(f"header QP {qp} out of range")
    header = StreamHeader(w, h, nframes, OBJECTIVE_NAMES[obj_id], qp,
                          bool(flags & FLAG_AUDIT))
    pos = HEADER_SIZE
    payloads = []
    for i in range(nframes):
        if pos + 4 > len(data):
            raise BitstreamError(f"truncated at frame {i} length field", position=pos)
        (ln,) = struct.unpack_from("<I", data, pos)
        pos += 4
        if pos + ln > len(data):
            raise BitstreamError(f"truncated inside frame {i} payload", position=pos)
        payloads.append(data[pos:pos + ln])
        pos += ln
    audit = None
    if header.has_audit:
        if pos + 4 > len(data):
            raise BitstreamError("truncated at audit length field", position=pos)
        (ln,) = struct.unpack_from("<I", data, pos)
        pos += 4
        if pos + ln > len(data):
            raise BitstreamError("truncated inside audit section", position=pos)
        audit = FeatureCounts.from_json_dict(json.loads(data[pos:pos + ln]))
    return header, payloads, audit
