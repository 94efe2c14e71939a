"""Decoding-energy model: feature counts, specific-energy profiles, estimator.

The decoder-side energy of a bitstream is modeled as a constant offset plus a
weighted sum of feature counts (how often each decoder function runs), with the
transform-skip term entering negatively. Profiles hold the per-feature energies
in joules; counts are accumulated per bitstream or per coding-block candidate.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import InvalidCountsError, KeyMismatchError, ProfileFormatError

BLOCK_SIZES = (4, 8, 16, 32)
MODE_CLASSES = ("DC", "Planar", "Angular")
COMPONENTS = ("Y", "U", "V")

MODE_SIZE_KEYS = tuple((c, s) for c in MODE_CLASSES for s in BLOCK_SIZES)
COMP_SIZE_KEYS = tuple((c, s) for c in COMPONENTS for s in BLOCK_SIZES)

# Flat vector layout shared with the codec kernels. Weight vectors built by
# SpecificEnergyProfile.weight_vector() follow the same indices, with the
# transform-skip weight already negated.
FEAT_SLICE = 0
FEAT_MODE0 = 1                      # 3 mode classes x 4 sizes
FEAT_COMP0 = FEAT_MODE0 + 12        # 3 components x 4 sizes
FEAT_COEFF = FEAT_COMP0 + 12
FEAT_G1 = FEAT_COEFF + 1
FEAT_VAL = FEAT_G1 + 1
FEAT_CSBF = FEAT_VAL + 1
FEAT_NOMPM = FEAT_CSBF + 1
FEAT_TSF = FEAT_NOMPM + 1
NFEAT = FEAT_TSF + 1

_SIZE_IDX = {4: 0, 8: 1, 16: 2, 32: 3}
_CLS_IDX = {c: i for i, c in enumerate(MODE_CLASSES)}
_COMP_IDX = {c: i for i, c in enumerate(COMPONENTS)}


def mode_size_index(mode_class: str, size: int) -> int:
    return FEAT_MODE0 + _CLS_IDX[mode_class] * 4 + _SIZE_IDX[size]


def comp_size_index(component: str, size: int) -> int:
    return FEAT_COMP0 + _COMP_IDX[component] * 4 + _SIZE_IDX[size]


def _check_map_keys(name: str, mapping: dict, expected: tuple) -> None:
    if set(mapping.keys()) != set(expected):
        missing = sorted(set(expected) - set(mapping.keys()))
        extra = sorted(set(mapping.keys()) - set(expected))
        raise KeyMismatchError(
            f"{name}: bad key set (missing {missing}, unexpected {extra})"
        )


@dataclass(frozen=True)
class SpecificEnergyProfile:
    """Per-feature decoding energies in joules, plus the constant offset e0."""

    e0: float
    e_slice: float
    e_mode_size: dict        # (mode class, block size) -> J per prediction
    e_comp_size: dict        # (component, block size) -> J per inverse transform
    e_coeff: float
    e_g1: float
    e_val: float
    e_csbf: float
    e_nompm: float
    e_tsf: float
    name: str = ""
    provenance: str = ""

    def __post_init__(self):
        _check_map_keys("e_mode_size", self.e_mode_size, MODE_SIZE_KEYS)
        _check_map_keys("e_comp_size", self.e_comp_size, COMP_SIZE_KEYS)
        for label, v in self._scalar_items() + self._map_items():
            if not math.isfinite(v):
                raise ProfileFormatError(f"{label}: not finite ({v!r})")
            if v < 0:
                raise ProfileFormatError(f"{label}: negative specific energy {v!r}")

    def _scalar_items(self):
        return [
            ("e0", self.e0), ("e_slice", self.e_slice), ("e_coeff", self.e_coeff),
            ("e_g1", self.e_g1), ("e_val", self.e_val), ("e_csbf", self.e_csbf),
            ("e_nompm", self.e_nompm), ("e_tsf", self.e_tsf),
        ]

    def _map_items(self):
        out = [(f"e_mode_size.{c}.{s}", self.e_mode_size[(c, s)]) for c, s in MODE_SIZE_KEYS]
        out += [(f"e_comp_size.{c}.{s}", self.e_comp_size[(c, s)]) for c, s in COMP_SIZE_KEYS]
        return out

    def weight_vector(self) -> np.ndarray:
        """Feature weights aligned with FeatureCounts.vector(); e_tsf negated."""
        w = np.zeros(NFEAT, dtype=np.float64)
        w[FEAT_SLICE] = self.e_slice
        for c, s in MODE_SIZE_KEYS:
            w[mode_size_index(c, s)] = self.e_mode_size[(c, s)]
        for c, s in COMP_SIZE_KEYS:
            w[comp_size_index(c, s)] = self.e_comp_size[(c, s)]
        w[FEAT_COEFF] = self.e_coeff
        w[FEAT_G1] = self.e_g1
        w[FEAT_VAL] = self.e_val
        w[FEAT_CSBF] = self.e_csbf
        w[FEAT_NOMPM] = self.e_nompm
        w[FEAT_TSF] = -self.e_tsf
        return w

    def scaled(self, k: float) -> "SpecificEnergyProfile":
        """All specific energies (including e0) multiplied by k."""
        return replace(
            self,
            e0=self.e0 * k, e_slice=self.e_slice * k,
            e_mode_size={key: v * k for key, v in self.e_mode_size.items()},
            e_comp_size={key: v * k for key, v in self.e_comp_size.items()},
            e_coeff=self.e_coeff * k, e_g1=self.e_g1 * k, e_val=self.e_val * k,
            e_csbf=self.e_csbf * k, e_nompm=self.e_nompm * k, e_tsf=self.e_tsf * k,
            name=f"{self.name} x{k:g}" if self.name else "",
        )

    def to_json_dict(self) -> dict:
        return {
            "name": self.name,
            "provenance": self.provenance,
            "e0": self.e0,
            "e_slice": self.e_slice,
            "e_mode_size": _nest(self.e_mode_size, MODE_CLASSES),
            "e_comp_size": _nest(self.e_comp_size, COMPONENTS),
            "e_coeff": self.e_coeff,
            "e_g1": self.e_g1,
            "e_val": self.e_val,
            "e_csbf": self.e_csbf,
            "e_nompm": self.e_nompm,
            "e_tsf": self.e_tsf,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "SpecificEnergyProfile":
        allowed = {"name", "provenance", "e0", "e_slice", "e_mode_size",
                   "e_comp_size", "e_coeff", "e_g1", "e_val", "e_csbf",
                   "e_nompm", "e_tsf"}
        _reject_unknown("profile", d, allowed)
        try:
            return cls(
                e0=float(d["e0"]),
                e_slice=float(d["e_slice"]),
                e_mode_size=_unnest("e_mode_size", d["e_mode_size"], MODE_CLASSES),
                e_comp_size=_unnest("e_comp_size", d["e_comp_size"], COMPONENTS),
                e_coeff=float(d["e_coeff"]),
                e_g1=float(d["e_g1"]),
                e_val=float(d["e_val"]),
                e_csbf=float(d["e_csbf"]),
                e_nompm=float(d["e_nompm"]),
                e_tsf=float(d["e_tsf"]),
                name=str(d.get("name", "")),
                provenance=str(d.get("provenance", "")),
            )
        except KeyError as exc:
            raise ProfileFormatError(f"profile: missing key {exc}") from exc

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json_dict(), indent=2) + "\n")

    @classmethod
    def load(cls, path) -> "SpecificEnergyProfile":
        try:
            d = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ProfileFormatError(f"{path}: invalid JSON ({exc})") from exc
        if not isinstance(d, dict):
            raise ProfileFormatError(f"{path}: profile must be a JSON object")
        return cls.from_json_dict(d)


def _nest(flat: dict, outer_keys: tuple) -> dict:
    return {ok: {str(s): flat[(ok, s)] for s in BLOCK_SIZES} for ok in outer_keys}


def _unnest(name: str, nested, outer_keys: tuple) -> dict:
    if not isinstance(nested, dict):
        raise ProfileFormatError(f"{name}: expected nested object")
    _reject_unknown(name, nested, set(outer_keys))
    flat = {}
    for ok in outer_keys:
        inner = nested.get(ok)
        if not isinstance(inner, dict):
            raise ProfileFormatError(f"{name}.{ok}: expected object keyed by block size")
        _reject_unknown(f"{name}.{ok}", inner, {str(s) for s in BLOCK_SIZES})
        for s in BLOCK_SIZES:
            if str(s) not in inner:
                raise ProfileFormatError(f"{name}.{ok}.{s}: missing")
            flat[(ok, s)] = float(inner[str(s)])
    return flat


def _reject_unknown(name: str, d: dict, allowed: set) -> None:
    unknown = set(d.keys()) - allowed
    if unknown:
        raise ProfileFormatError(f"{name}: unknown keys {sorted(unknown)}")


@dataclass(frozen=True)
class FeatureCounts:
    """Counts of decoder-side events for one bitstream or one block candidate."""

    n_slice: int = 0
    n_mode_size: dict = field(default_factory=lambda: dict.fromkeys(MODE_SIZE_KEYS, 0))
    n_comp_size: dict = field(default_factory=lambda: dict.fromkeys(COMP_SIZE_KEYS, 0))
    n_coeff: int = 0
    n_g1: int = 0
    sum_log2_val: float = 0.0
    n_csbf: int = 0
    n_nompm: int = 0
    n_tsf: int = 0

    def __post_init__(self):
        _check_map_keys("n_mode_size", self.n_mode_size, MODE_SIZE_KEYS)
        _check_map_keys("n_comp_size", self.n_comp_size, COMP_SIZE_KEYS)
        ints = [("n_slice", self.n_slice), ("n_coeff", self.n_coeff),
                ("n_g1", self.n_g1), ("n_csbf", self.n_csbf),
                ("n_nompm", self.n_nompm), ("n_tsf", self.n_tsf)]
        ints += [(f"n_mode_size.{c}.{s}", self.n_mode_size[(c, s)]) for c, s in MODE_SIZE_KEYS]
        ints += [(f"n_comp_size.{c}.{s}", self.n_comp_size[(c, s)]) for c, s in COMP_SIZE_KEYS]
        for label, v in ints:
            if not isinstance(v, (int, np.integer)) or isinstance(v, bool):
                raise InvalidCountsError(f"{label}: must be an integer, got {v!r}")
            if v < 0:
                raise InvalidCountsError(f"{label}: negative count {v}")
        if not (math.isfinite(self.sum_log2_val) and self.sum_log2_val >= 0):
            raise InvalidCountsError(f"sum_log2_val: must be finite and >= 0, got {self.sum_log2_val!r}")
        if self.n_g1 > self.n_coeff:
            raise InvalidCountsError(f"n_g1 ({self.n_g1}) exceeds n_coeff ({self.n_coeff})")

    @classmethod
    def zero(cls) -> "FeatureCounts":
        return cls()

    def vector(self) -> np.ndarray:
        """Flat float64 vector aligned with SpecificEnergyProfile.weight_vector()."""
        v = np.zeros(NFEAT, dtype=np.float64)
        v[FEAT_SLICE] = self.n_slice
        for c, s in MODE_SIZE_KEYS:
            v[mode_size_index(c, s)] = self.n_mode_size[(c, s)]
        for c, s in COMP_SIZE_KEYS:
            v[comp_size_index(c, s)] = self.n_comp_size[(c, s)]
        v[FEAT_COEFF] = self.n_coeff
        v[FEAT_G1] = self.n_g1
        v[FEAT_VAL] = self.sum_log2_val
        v[FEAT_CSBF] = self.n_csbf
        v[FEAT_NOMPM] = self.n_nompm
        v[FEAT_TSF] = self.n_tsf
        return v

    @classmethod
    def from_vector(cls, v) -> "FeatureCounts":
        v = np.asarray(v)
        if v.shape != (NFEAT,):
            raise InvalidCountsError(f"count vector must have shape ({NFEAT},)")
        return cls(
            n_slice=int(v[FEAT_SLICE]),
            n_mode_size={(c, s): int(v[mode_size_index(c, s)]) for c, s in MODE_SIZE_KEYS},
            n_comp_size={(c, s): int(v[comp_size_index(c, s)]) for c, s in COMP_SIZE_KEYS},
            n_coeff=int(v[FEAT_COEFF]),
            n_g1=int(v[FEAT_G1]),
            sum_log2_val=float(v[FEAT_VAL]),
            n_csbf=int(v[FEAT_CSBF]),
            n_nompm=int(v[FEAT_NOMPM]),
            n_tsf=int(v[FEAT_TSF]),
        )

    def __add__(self, other: "FeatureCounts") -> "FeatureCounts":
        return accumulate(self, other)

    def to_json_dict(self) -> dict:
        return {
            "n_slice": self.n_slice,
            "n_mode_size": _nest(self.n_mode_size, MODE_CLASSES),
            "n_comp_size": _nest(self.n_comp_size, COMPONENTS),
            "n_coeff": self.n_coeff,
            "n_g1": self.n_g1,
            "sum_log2_val": self.sum_log2_val,
            "n_csbf": self.n_csbf,
            "n_nompm": self.n_nompm,
            "n_tsf": self.n_tsf,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "FeatureCounts":
        allowed = {"n_slice", "n_mode_size", "n_comp_size", "n_coeff", "n_g1",
                   "sum_log2_val", "n_csbf", "n_nompm", "n_tsf"}
        _reject_unknown("feature counts", d, allowed)
        try:
            mode = _unnest("n_mode_size", d["n_mode_size"], MODE_CLASSES)
            comp = _unnest("n_comp_size", d["n_comp_size"], COMPONENTS)
            return cls(
                n_slice=int(d["n_slice"]),
                n_mode_size={k: int(v) for k, v in mode.items()},
                n_comp_size={k: int(v) for k, v in comp.items()},
                n_coeff=int(d["n_coeff"]),
                n_g1=int(d["n_g1"]),
                sum_log2_val=float(d["sum_log2_val"]),
                n_csbf=int(d["n_csbf"]),
                n_nompm=int(d["n_nompm"]),
                n_tsf=int(d["n_tsf"]),
            )
        except KeyError as exc:
            raise ProfileFormatError(f"feature counts: missing key {exc}") from exc

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json_dict(), indent=2) + "\n")

    @classmethod
    def load(cls, path) -> "FeatureCounts":
        d = json.loads(Path(path).read_text())
        if not isinstance(d, dict):
            raise ProfileFormatError(f"{path}: feature log must be a JSON object")
        return cls.from_json_dict(d)


def estimate_decoding_energy(profile: SpecificEnergyProfile,
                             counts: FeatureCounts) -> float:
    """Modeled decoding energy in joules for the given counts.

    Pure function: offset plus the weighted feature counts, with the
    transform-skip term subtracted. May go negative for degenerate profiles;
    callers that care should warn rather than clamp (clamping would break
    linearity).
    """
    if set(profile.e_mode_size) != set(counts.n_mode_size):
        raise KeyMismatchError("e_mode_size / n_mode_size key sets differ")
    if set(profile.e_comp_size) != set(counts.n_comp_size):
        raise KeyMismatchError("e_comp_size / n_comp_size key sets differ")
    e = profile.e0 + profile.e_slice * counts.n_slice
    for key in MODE_SIZE_KEYS:
        e += profile.e_mode_size[key] * counts.n_mode_size[key]
    for key in COMP_SIZE_KEYS:
        e += profile.e_comp_size[key] * counts.n_comp_size[key]
    e += profile.e_coeff * counts.n_coeff
    e += profile.e_g1 * counts.n_g1
    e += profile.e_val * counts.sum_log2_val
    e += profile.e_csbf * counts.n_csbf
    e += profile.e_nompm * counts.n_nompm
    e -= profile.e_tsf * counts.n_tsf
    return e


def block_energy(profile: SpecificEnergyProfile, counts: FeatureCounts) -> float:
    """Energy of a per-block count delta: stream constants (e0, slice) excluded."""
    return (estimate_decoding_energy(profile, counts)
            - profile.e0 - profile.e_slice * counts.n_slice)


def accumulate(a: FeatureCounts, b: FeatureCounts) -> FeatureCounts:
    """Elementwise sum of two count sets (the estimator is linear in counts)."""
    if set(a.n_mode_size) != set(b.n_mode_size) or set(a.n_comp_size) != set(b.n_comp_size):
        raise KeyMismatchError("cannot accumulate counts with differing key sets")
    return FeatureCounts(
        n_slice=a.n_slice + b.n_slice,
        n_mode_size={k: a.n_mode_size[k] + b.n_mode_size[k] for k in MODE_SIZE_KEYS},
        n_comp_size={k: a.n_comp_size[k] + b.n_comp_size[k] for k in COMP_SIZE_KEYS},
        n_coeff=a.n_coeff + b.n_coeff,
        n_g1=a.n_g1 + b.n_g1,
        sum_log2_val=a.sum_log2_val + b.sum_log2_val,
        n_csbf=a.n_csbf + b.n_csbf,
        n_nompm=a.n_nompm + b.n_nompm,
        n_tsf=a.n_tsf + b.n_tsf,
    )


def default_profile() -> SpecificEnergyProfile:
    """The bundled synthetic profile (clearly labeled as such in its provenance)."""
    from importlib.resources import files
    text = files("derdcodec.data").joinpath("default_profile.json").read_text()
    return SpecificEnergyProfile.from_json_dict(json.loads(text))
