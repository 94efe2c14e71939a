"""Evaluation metrics: combined-plane PSNR, Bjontegaard deltas, and the
WiFi transmission-energy extension for streaming scenarios.

PSNR_YUV weights the plane PSNRs 6:1:1. A lossless plane yields an infinite
PSNR; psnr_yuv then returns math.inf as the "lossless" sentinel, and such
points are rejected by BD curve validation.

BD deltas fit log10(metric) against PSNR with a monotone piecewise-cubic
interpolant (PCHIP), integrate the two fits exactly over the common PSNR
interval (no resampling), and map the mean log offset to percent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import CurveError
from .frames import Frame

DEFAULT_BD_QPS = (15, 25, 35, 45)

# WiFi per-bit transmission energy model: a/throughput + b, in nJ per bit.
TRANSMISSION_A = 305.3
TRANSMISSION_B = 13.1


def plane_psnr(reference: np.ndarray, reconstruction: np.ndarray) -> float:
    if reference.shape != reconstruction.shape:
        raise CurveError("plane shapes differ")
    diff = reference.astype(np.float64) - reconstruction.astype(np.float64)
    mse = float(np.mean(diff * diff))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(255.0 ** 2 / mse)


def psnr_yuv(reference: Frame, reconstruction: Frame) -> float:
    """(6*PSNR_Y + PSNR_U + PSNR_V) / 8; inf if any plane is lossless."""
    py = plane_psnr(reference.y, reconstruction.y)
    pu = plane_psnr(reference.u, reconstruction.u)
    pv = plane_psnr(reference.v, reconstruction.v)
    if math.isinf(py) or math.isinf(pu) or math.isinf(pv):
        return math.inf
    return (6.0 * py + pu + pv) / 8.0


@dataclass(frozen=True)
class RateQualityEnergyPoint:
    """One operating point of a stream: rate, quality and (estimated) energy."""

    qp: int
    bits: float
    psnr_yuv: float
    energy_j: float

    def __post_init__(self):
        if not self.bits > 0:
            raise CurveError(f"bitrate must be positive, got {self.bits}")
        if not self.energy_j > 0:
            raise CurveError(f"energy must be positive, got {self.energy_j}")
        if not math.isfinite(self.psnr_yuv):
            raise CurveError("PSNR must be finite (identical frames are rejected)")


@dataclass(frozen=True)
class BDCurve:
    """Exactly four rate/energy-quality points with strictly monotone PSNR."""

    points: tuple

    def __post_init__(self):
        if len(self.points) != 4:
            raise CurveError(f"BD curve needs exactly 4 points, got {len(self.points)}")
        pts = tuple(sorted(self.points, key=lambda p: p.qp))
        object.__setattr__(self, "points", pts)
        psnrs = [p.psnr_yuv for p in pts]
        if not all(a > b for a, b in zip(psnrs, psnrs[1:])):
            raise CurveError("PSNR must be strictly monotone across the curve")

    def psnr(self):
        return np.array([p.psnr_yuv for p in self.points])

    def metric(self, axis: str):
        if axis == "rate":
            return np.array([p.bits for p in self.points])
        if axis == "energy":
            return np.array([p.energy_j for p in self.points])
        raise CurveError(f"unknown BD axis {axis!r}")


def _mean_log10_offset(psnr_a, metric_a, psnr_b, metric_b) -> float:
    """Integral-mean of log10(metric_b) - log10(metric_a) over common PSNR."""
    order_a = np.argsort(psnr_a)
    order_b = np.argsort(psnr_b)
    xa, ya = psnr_a[order_a], np.log10(metric_a[order_a])
    xb, yb = psnr_b[order_b], np.log10(metric_b[order_b])
    lo = max(xa.min(), xb.min())
    hi = min(xa.max(), xb.max())
    if not hi > lo:
        raise CurveError(f"curves share no PSNR overlap ([{lo:.3f}, {hi:.3f}])")
    fa = PchipInterpolator(xa, ya)
    fb = PchipInterpolator(xb, yb)
    return float((fb.integrate(lo, hi) - fa.integrate(lo, hi)) / (hi - lo))


def bd_delta(curve_anchor: BDCurve, curve_test: BDCurve, axis: str) -> float:
    """Classic Bjontegaard delta in percent on the chosen axis.

    Positive means the test curve spends more (bits or joules) than the anchor
    at equal quality; energy savings are therefore reported as -bd_delta.
    """
    delta = _mean_log10_offset(
        curve_anchor.psnr(), curve_anchor.metric(axis),
        curve_test.psnr(), curve_test.metric(axis),
    )
    return (10.0 ** delta - 1.0) * 100.0


def bd_rate(anchor: BDCurve, test: BDCurve) -> float:
    return bd_delta(anchor, test, "rate")


def bd_energy(anchor: BDCurve, test: BDCurve) -> float:
    return bd_delta(anchor, test, "energy")


@dataclass(frozen=True)
class TransmissionModel:
    """Per-bit WiFi transmission energy: a/Th + b (nJ/bit), Th in Mbit/s."""

    a: float = TRANSMISSION_A
    b: float = TRANSMISSION_B
    framerate: float = 30.0

    def __post_init__(self):
        if self.a <= 0 or self.b <= 0:
            raise CurveError("transmission parameters must be positive")
        if self.framerate <= 0:
            raise CurveError("frame rate must be positive")


def per_bit_transmission_energy(throughput_mbps: float,
                                model: TransmissionModel | None = None) -> float:
    """nJ per transmitted bit at the given throughput."""
    m = model or TransmissionModel()
    if throughput_mbps <= 0:
        raise CurveError("throughput must be positive")
    return m.a / throughput_mbps + m.b


def streaming_energy(point: RateQualityEnergyPoint, model: TransmissionModel,
                     frame_count: int) -> float:
    """Total energy in J: decoding energy plus R * E_b transmission energy.

    Throughput is bits * framerate / frame_count. Algebraically the
    transmission term is affine in R: a*frame_count/framerate * 1e-3 + b*R*1e-9.
    A zero-rate degenerate stream transmits nothing.
    """
    if frame_count <= 0:
        raise CurveError("frame count must be positive")
    r = point.bits
    if r == 0:
        return point.energy_j
    th_mbps = r * model.framerate / frame_count / 1e6
    eb_nj = per_bit_transmission_energy(th_mbps, model)
    return point.energy_j + r * eb_nj * 1e-9
