"""Stream-level encode/decode: frames x objective -> container payloads."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bitstream import StreamHeader, write_container
from .decoder import decode_frame
from .encoder import encode_frame
from .energy_model import FeatureCounts
from .errors import CodecError
from .frames import Frame
from .optimizer import Objective


@dataclass(frozen=True)
class StreamEncodeResult:
    payloads: list
    counts: FeatureCounts
    recons: list
    log_rows: list          # (frame_idx, x, y, size, mode, skip, d, r, e, j)
    payload_bits: int


def encode_stream(frames, qp: int, objective: Objective) -> StreamEncodeResult:
    if not frames:
        raise CodecError("no frames to encode")
    w, h = frames[0].width, frames[0].height
    wvec = objective.profile.weight_vector()
    payloads = []
    recons = []
    rows = []
    total = np.zeros_like(wvec)
    for idx, frame in enumerate(frames):
        if frame.width != w or frame.height != h:
            raise CodecError("all frames in a stream must share dimensions")
        enc = encode_frame(frame, qp, objective.lambda_r, objective.lambda_e, wvec)
        payloads.append(enc.payload)
        recons.append(enc.recon)
        total += enc.counts_vec
        rows.extend((idx,) + r for r in enc.log_rows)
    counts = FeatureCounts.from_vector(total)
    bits = sum(len(p) * 8 for p in payloads)
    return StreamEncodeResult(payloads, counts, recons, rows, bits)


def decode_stream(payloads, width: int, height: int, qp: int):
    """Decode payloads; returns (frames, FeatureCounts recounted while parsing)."""
    frames = []
    total = None
    for payload in payloads:
        frame, cvec = decode_frame(payload, width, height, qp)
        frames.append(frame)
        total = cvec if total is None else total + cvec
    counts = FeatureCounts.from_vector(total) if total is not None else FeatureCounts.zero()
    return frames, counts


def encode_to_file(path, frames, qp: int, objective: Objective,
                   audit: bool = True) -> StreamEncodeResult:
    result = encode_stream(frames, qp, objective)
    header = StreamHeader(frames[0].width, frames[0].height, len(frames),
                          objective.kind, qp, audit)
    write_container(path, header, result.payloads,
                    result.counts if audit else None)
    return result


def decode_file(path):
    """Decode a container file; returns (header, frames, FeatureCounts)."""
    from .bitstream import read_container
    header, payloads, audit = read_container(path)
    frames, counts = decode_stream(payloads, header.width, header.height, header.qp)
    if audit is not None and audit != counts:
        raise CodecError(
            "audit mismatch: decoder-recounted features differ from the "
            "encoder's audit section"
        )
    return header, frames, counts
