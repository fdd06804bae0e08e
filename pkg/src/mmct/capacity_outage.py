"""Rates, angle-dependent capacity bounds, and outage probabilities.

Both streams ride a two-layer SVD-precoded link whose eigenvalues, for a
large transmit array with receive correlation angle theta, concentrate at
(1 +- cos(theta)) * n_t. Moving the expectation inside log(1 + x) gives the
capacity expressions used here; outage is the probability, over a uniform
angle in (-pi/2, pi/2], that a scheme's capacity falls below its rate
target. All rates are base-2 (bits/s/Hz). The x-axis convention throughout
is normalized SNR, 10*log10(n_t * snr).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ValidationError

__all__ = [
    "Scheme",
    "RateTargets",
    "OutageCurve",
    "rate_nr",
    "rate_mmct",
    "capacity_bounds",
    "theta_grid",
    "outage_numeric",
    "outage_closed_nr",
    "outage_closed_mmct_h",
    "outage_thresholds",
    "outage_curves",
]

logger = logging.getLogger(__name__)


class Scheme(Enum):
    NR = "nr"
    MMCT_H = "mmct_h"
    MMCT_V = "mmct_v"


@dataclass(frozen=True)
class RateTargets:
    """Per-scheme rate targets plus the resource split they refer to."""

    nr_rate: float
    haptic_rate: float
    video_rate: float
    rbs_per_layer: int
    shared_haptic_rbs: int
    layers: int
    tx_antennas: int

    def __post_init__(self):
        for name in ("nr_rate", "haptic_rate", "video_rate"):
            if getattr(self, name) <= 0:
                raise ValidationError(f"{name} must be positive")
        if not 1 <= self.shared_haptic_rbs <= self.rbs_per_layer:
            raise ValidationError(
                f"shared_haptic_rbs={self.shared_haptic_rbs} outside "
                f"1..{self.rbs_per_layer}"
            )
        if self.layers < 1 or self.tx_antennas < 1:
            raise ValidationError("layers and tx_antennas must be >= 1")

    @classmethod
    def fair_split(
        cls,
        nr_rate: float = 12.0,
        rbs_per_layer: int = 20,
        shared_haptic_rbs: int = 2,
        layers: int = 2,
        tx_antennas: int = 64,
    ) -> "RateTargets":
        """Targets where the haptic stream's rate matches its resource share.

        The haptic stream uses one layer and shared_haptic_rbs of the
        rbs_per_layer RBs, so its fair target is
        (nr_rate / layers) * (shared_haptic_rbs / rbs_per_layer); the video
        target stays at the full joint rate.
        """
        haptic_rate = (nr_rate / layers) * (shared_haptic_rbs / rbs_per_layer)
        return cls(
            nr_rate=nr_rate,
            haptic_rate=haptic_rate,
            video_rate=nr_rate,
            rbs_per_layer=rbs_per_layer,
            shared_haptic_rbs=shared_haptic_rbs,
            layers=layers,
            tx_antennas=tx_antennas,
        )

    @property
    def haptic_rb_fraction(self) -> float:
        return self.shared_haptic_rbs / self.rbs_per_layer


@dataclass(frozen=True)
class OutageCurve:
    """Sampled (normalized SNR dB, outage probability) pairs for one scheme."""

    scheme: Scheme
    method: str  # "numeric" or "closed"
    snr_db: np.ndarray
    p_out: np.ndarray

    def __post_init__(self):
        snr_db = np.asarray(self.snr_db, dtype=np.float64)
        p = np.asarray(self.p_out, dtype=np.float64)
        if snr_db.shape != p.shape or snr_db.ndim != 1:
            raise ValidationError("snr_db and p_out must be matching 1-D arrays")
        if np.any(p < 0) or np.any(p > 1):
            raise ValidationError("outage probabilities outside [0, 1]")
        if np.any(np.diff(p) > 1e-12):
            raise ValidationError("outage must be non-increasing in SNR")
        object.__setattr__(self, "snr_db", snr_db)
        object.__setattr__(self, "p_out", p)


def _checked_eigenvalues(lambda1, lambda2):
    l1 = np.asarray(lambda1, dtype=np.float64)
    l2 = np.asarray(lambda2, dtype=np.float64)
    if np.any(l2 < 0) or np.any(l1 < 0):
        raise ValidationError("eigenvalues must be nonnegative")
    if np.any(l1 < l2):
        raise ValidationError("expected lambda1 >= lambda2")
    return l1, l2


def rate_nr(lambda1, lambda2):
    """Two-layer sum rate log2(1 + l1) + log2(1 + l2). Accepts arrays."""
    l1, l2 = _checked_eigenvalues(lambda1, lambda2)
    return np.log2(1.0 + l1) + np.log2(1.0 + l2)


def rate_mmct(lambda1, lambda2, rbs_per_layer: int, shared_haptic_rbs: int):
    """(haptic, video) rates when the top layer is split B_1 : B - B_1.

    The haptic stream gets shared_haptic_rbs/rbs_per_layer of the top
    layer's rate; video gets the rest plus all of the second layer, so the
    two add up to the joint rate exactly.
    """
    if not 0 <= shared_haptic_rbs <= rbs_per_layer:
        raise ValidationError(
            f"shared_haptic_rbs={shared_haptic_rbs} outside 0..{rbs_per_layer}"
        )
    l1, l2 = _checked_eigenvalues(lambda1, lambda2)
    frac = shared_haptic_rbs / rbs_per_layer
    top = np.log2(1.0 + l1)
    r_h = frac * top
    r_v = (1.0 - frac) * top + np.log2(1.0 + l2)
    return r_h, r_v


def _checked_theta(theta):
    th = np.asarray(theta, dtype=np.float64)
    if np.any(th <= -math.pi / 2) or np.any(th > math.pi / 2):
        raise ValidationError("theta outside (-pi/2, pi/2]")
    return th


def capacity_bounds(theta, tx_antennas: int, snr: float, rbs_per_layer: int, shared_haptic_rbs: int):
    """(C_joint, C_haptic, C_video) capacity bounds at correlation angle theta.

    Layer eigenvalues are replaced by their means (1 +- cos(theta)) * n_t
    inside the logs; the three bounds satisfy C_haptic + C_video = C_joint.
    Accepts scalar or array theta.
    """
    th = _checked_theta(theta)
    if snr <= 0:
        raise ValidationError(f"snr must be positive, got {snr}")
    g = tx_antennas * snr
    c = np.cos(th)
    top = np.log2(1.0 + (1.0 + c) * g)
    bottom = np.log2(1.0 + (1.0 - c) * g)
    c_nr = top + bottom
    c_h = (shared_haptic_rbs / rbs_per_layer) * top
    return c_nr, c_h, c_nr - c_h


def theta_grid(m: int) -> np.ndarray:
    """Deterministic uniform angle grid m*pi/M - pi/2 for m = 1..M."""
    return np.arange(1, m + 1) * (math.pi / m) - math.pi / 2


def _coerce_scheme(scheme) -> Scheme:
    if isinstance(scheme, Scheme):
        return scheme
    try:
        return Scheme(scheme)
    except ValueError:
        raise ValidationError(f"unknown scheme {scheme!r}") from None


def _target_for(scheme: Scheme, targets: RateTargets) -> float:
    return {
        Scheme.NR: targets.nr_rate,
        Scheme.MMCT_H: targets.haptic_rate,
        Scheme.MMCT_V: targets.video_rate,
    }[scheme]


def outage_numeric(scheme, targets: RateTargets, snr: float, m: int) -> float:
    """Fraction of the angle grid where the scheme's capacity misses target."""
    scheme = _coerce_scheme(scheme)
    if m < 1_000:
        raise ValidationError(f"angle grid needs at least 10^3 points, got {m}")
    c_nr, c_h, c_v = capacity_bounds(
        theta_grid(m),
        targets.tx_antennas,
        snr,
        targets.rbs_per_layer,
        targets.shared_haptic_rbs,
    )
    cap = {Scheme.NR: c_nr, Scheme.MMCT_H: c_h, Scheme.MMCT_V: c_v}[scheme]
    return float(np.count_nonzero(cap < _target_for(scheme, targets)) / m)


def _clip_unit(arg: np.ndarray, where: str) -> np.ndarray:
    """Clamp an inverse-trig argument into [0, 1], logging real excursions."""
    excess = max(float(np.max(arg, initial=0.0)) - 1.0, -float(np.min(arg, initial=0.0)))
    if excess > 1e-9:
        logger.debug("%s argument clamped into [0, 1] (excess %.3e)", where, excess)
    return np.clip(arg, 0.0, 1.0)


def outage_closed_nr(targets: RateTargets, snr):
    """Closed-form joint-transmission outage. Accepts scalar or array snr."""
    snr = np.asarray(snr, dtype=np.float64)
    if np.any(snr <= 0):
        raise ValidationError("snr must be positive")
    x = targets.tx_antennas * snr
    r = targets.nr_rate
    full_below = 2.0 ** (r / 2.0) - 1.0
    zero_above = (2.0**r - 1.0) / 2.0
    with np.errstate(invalid="ignore"):
        arg = np.sqrt(np.clip((1.0 + x) ** 2 - 2.0**r, 0.0, None)) / x
    mid = (2.0 / math.pi) * np.arccos(_clip_unit(arg, "arccos"))
    out = np.where(x < full_below, 1.0, np.where(x > zero_above, 0.0, mid))
    return float(out) if out.ndim == 0 else out


def outage_closed_mmct_h(targets: RateTargets, snr):
    """Closed-form haptic-stream outage. Accepts scalar or array snr."""
    snr = np.asarray(snr, dtype=np.float64)
    if np.any(snr <= 0):
        raise ValidationError("snr must be positive")
    x = targets.tx_antennas * snr
    k = 2.0 ** (targets.haptic_rate / targets.haptic_rb_fraction) - 1.0
    mid = (2.0 / math.pi) * np.arcsin(_clip_unit(k / x - 1.0, "arcsin"))
    out = np.where(x < k / 2.0, 1.0, np.where(x > k, 0.0, mid))
    return float(out) if out.ndim == 0 else out


def outage_thresholds(targets: RateTargets) -> dict[str, float]:
    """Case boundaries of the closed forms, in normalized SNR (n_t * snr).

    ``*_full`` is the boundary below which outage is certain, ``*_zero``
    the boundary above which it cannot occur; ``*_db`` are the same values
    in 10*log10 form.
    """
    nr_full = 2.0 ** (targets.nr_rate / 2.0) - 1.0
    nr_zero = (2.0**targets.nr_rate - 1.0) / 2.0
    k = 2.0 ** (targets.haptic_rate / targets.haptic_rb_fraction) - 1.0
    out = {
        "nr_full": nr_full,
        "nr_zero": nr_zero,
        "mmct_h_full": k / 2.0,
        "mmct_h_zero": k,
    }
    out.update({f"{key}_db": 10.0 * math.log10(val) for key, val in out.items()})
    return out


def outage_curves(
    targets: RateTargets, snr_grid_db, m: int = 100_000
) -> list[OutageCurve]:
    """Standard four-curve outage lineup over a normalized-SNR dB grid.

    Emits the joint-transmission and video curves from the angle-grid
    estimator and the haptic curve by both the estimator and the closed
    form, so the two methods can be compared pointwise.
    """
    snr_db = np.asarray(snr_grid_db, dtype=np.float64)
    if snr_db.ndim != 1 or snr_db.size == 0:
        raise ValidationError("snr grid must be a non-empty 1-D array")
    if m < 1_000:
        raise ValidationError(f"angle grid needs at least 10^3 points, got {m}")

    cos_grid = np.cos(theta_grid(m))
    frac = targets.haptic_rb_fraction
    n = snr_db.size
    p_nr = np.empty(n)
    p_h = np.empty(n)
    p_v = np.empty(n)
    for i, db in enumerate(snr_db):
        g = 10.0 ** (db / 10.0)  # normalized SNR n_t * snr
        top = np.log2(1.0 + (1.0 + cos_grid) * g)
        c_nr = top + np.log2(1.0 + (1.0 - cos_grid) * g)
        c_h = frac * top
        p_nr[i] = np.count_nonzero(c_nr < targets.nr_rate) / m
        p_h[i] = np.count_nonzero(c_h < targets.haptic_rate) / m
        p_v[i] = np.count_nonzero(c_nr - c_h < targets.video_rate) / m

    snr_lin = 10.0 ** (snr_db / 10.0) / targets.tx_antennas
    closed_h = outage_closed_mmct_h(targets, snr_lin)
    return [
        OutageCurve(Scheme.NR, "numeric", snr_db, p_nr),
        OutageCurve(Scheme.MMCT_H, "closed", snr_db, closed_h),
        OutageCurve(Scheme.MMCT_H, "numeric", snr_db, p_h),
        OutageCurve(Scheme.MMCT_V, "numeric", snr_db, p_v),
    ]
