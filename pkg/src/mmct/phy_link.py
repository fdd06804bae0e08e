"""End-to-end Monte-Carlo link simulation of the six reference schemes.

Every scheme runs over the same B x L resource pool with per-RB
independent correlated Rayleigh fading (independent draws stand in for
frequency selectivity), SVD precoding per RB, zero-forcing detection on
the effective channel, max-log soft demapping, and the punctured
convolutional codec. The schemes differ only in how streams, rates and
resources are arranged:

* ``nr_haptic_alone`` / ``nr_video_alone``: one stream on a proportional
  bandwidth split (haptic_share of the RBs for haptic, the rest for
  video), both spatial layers.
* ``nr_haptic_low_mcs``: the haptic-alone split at a reduced MCS.
* ``nr_joint``: one jointly coded block (haptic and video bits mixed)
  over the whole pool.
* ``mmct_haptic`` / ``mmct_video``: both streams concurrently, each with
  its own MCS, arranged by the frame mapper with the SNR-driven frequency
  permutation on the shared layer. The two scheme ids report the two
  streams of the same concurrent transmission.

Per-trial randomness is derived from (seed, snr_index, trial_index), and
the receive-correlation angle plus channel draws happen before any
payload or noise draws, so runs with equal seeds share channels across
schemes (common random numbers).
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from enum import Enum
from typing import Mapping, Sequence

import numpy as np

from . import coding, modem
from .errors import ConfigurationError, ValidationError
from .frame_mapper import MapperConfig, SnrMap, build_permutation, identity_permutations, stream_slots
from .mimo_channel import CorrelationModel, sample_channel_batch

__all__ = [
    "McsEntry",
    "MCS_TABLE",
    "SchemeId",
    "LinkScenario",
    "LinkResult",
    "GainReport",
    "run_scenario",
    "run_reference_schemes",
    "gain_report",
    "crossing_snr",
    "resource_summary",
]


@dataclass(frozen=True)
class McsEntry:
    """Modulation order (bits/symbol) and code rate for one table index."""

    index: int
    modulation_order: int
    code_rate: float

    def __post_init__(self):
        if self.modulation_order not in modem.SUPPORTED_ORDERS:
            raise ConfigurationError(
                f"modulation order {self.modulation_order} unsupported"
            )
        if not 0 < self.code_rate <= 1:
            raise ConfigurationError(f"code rate {self.code_rate} outside (0, 1]")

    @property
    def spectral_efficiency(self) -> float:
        """Bits/s/Hz carried per layer."""
        return self.modulation_order * self.code_rate


# Documented working table spanning QPSK r=1/3 to 256QAM r=0.86375
# (6.91 bits/s/Hz per layer at index 25; index 17 sits 35% below that).
MCS_TABLE: dict[int, McsEntry] = {
    e.index: e
    for e in (
        McsEntry(0, 2, 1.0 / 3.0),
        McsEntry(4, 2, 1.0 / 2.0),
        McsEntry(9, 4, 1.0 / 2.0),
        McsEntry(13, 4, 2.0 / 3.0),
        McsEntry(17, 6, 3.0 / 4.0),
        McsEntry(20, 6, 5.0 / 6.0),
        McsEntry(23, 8, 3.0 / 4.0),
        McsEntry(25, 8, 0.86375),
    )
}


class SchemeId(Enum):
    NR_HAPTIC_ALONE = "nr_haptic_alone"
    NR_VIDEO_ALONE = "nr_video_alone"
    NR_JOINT = "nr_joint"
    NR_HAPTIC_LOW_MCS = "nr_haptic_low_mcs"
    MMCT_HAPTIC = "mmct_haptic"
    MMCT_VIDEO = "mmct_video"


_MMCT_SCHEMES = (SchemeId.MMCT_HAPTIC, SchemeId.MMCT_VIDEO)


@dataclass(frozen=True)
class LinkScenario:
    """Everything needed to reproduce one BLER/BER run."""

    scheme: SchemeId
    mapper: MapperConfig
    mcs_haptic: McsEntry
    mcs_video: McsEntry
    snr_grid_db: tuple[float, ...]
    trials_per_point: int
    rng_seed: int
    tx_antennas: int = 8
    rx_antennas: int = 2
    rx_angle: float | None = None  # None: drawn uniform per trial
    haptic_share: float = 0.1
    per_rb_codewords: bool = False

    def __post_init__(self):
        object.__setattr__(self, "snr_grid_db", tuple(float(v) for v in self.snr_grid_db))
        if not self.snr_grid_db:
            raise ConfigurationError("snr_grid_db must be non-empty")
        if self.trials_per_point < 1:
            raise ConfigurationError("trials_per_point must be >= 1")
        if self.rx_antennas < self.mapper.layers:
            raise ConfigurationError(
                f"{self.mapper.layers} layers need at least as many receive "
                f"antennas, got {self.rx_antennas}"
            )
        if self.tx_antennas < self.mapper.layers:
            raise ConfigurationError("tx_antennas must be >= layers")
        if not 0.0 <= self.haptic_share <= 1.0:
            raise ConfigurationError("haptic_share outside [0, 1]")
        if self.rx_angle is not None and not -math.pi / 2 < self.rx_angle <= math.pi / 2:
            raise ConfigurationError("rx_angle outside (-pi/2, pi/2]")
        resource_summary(self)  # fail fast on allocations that cannot carry bits


@dataclass(frozen=True)
class LinkResult:
    """Per-SNR error rates; NaN marks a stream the scheme does not carry."""

    scheme: SchemeId
    snr_db: np.ndarray
    bler_haptic: np.ndarray
    bler_video: np.ndarray
    ber_haptic: np.ndarray
    ber_video: np.ndarray
    blocks_counted: np.ndarray

    def bler(self, stream: str) -> np.ndarray:
        return self.bler_haptic if stream == "haptic" else self.bler_video

    def ber(self, stream: str) -> np.ndarray:
        return self.ber_haptic if stream == "haptic" else self.ber_video


def _fixed_plans(scenario: LinkScenario) -> list[tuple[str, McsEntry, list[tuple[int, int]]]] | None:
    """Static (stream, mcs, slots) plans; None for the channel-driven MMCT."""
    cfg = scenario.mapper
    b, n_layers = cfg.rbs_per_layer, cfg.layers
    share_rows = math.ceil(scenario.haptic_share * b)
    scheme = scenario.scheme
    if scheme in (SchemeId.NR_HAPTIC_ALONE, SchemeId.NR_HAPTIC_LOW_MCS):
        rows = range(share_rows)
        return [("haptic", scenario.mcs_haptic, [(r, l) for l in range(n_layers) for r in rows])]
    if scheme is SchemeId.NR_VIDEO_ALONE:
        rows = range(share_rows, b)
        return [("video", scenario.mcs_video, [(r, l) for l in range(n_layers) for r in rows])]
    if scheme is SchemeId.NR_JOINT:
        return [("joint", scenario.mcs_video, [(r, l) for l in range(n_layers) for r in range(b)])]
    return None


def _mmct_slot_counts(cfg: MapperConfig) -> list[tuple[str, int]]:
    out = []
    if cfg.haptic_rb_count:
        out.append(("haptic", cfg.haptic_rb_count))
    if cfg.video_rb_count:
        out.append(("video", cfg.video_rb_count))
    return out


def resource_summary(scenario: LinkScenario) -> dict[str, dict[str, int]]:
    """Slots, channel bits, and information bits per stream of a scenario."""
    cfg = scenario.mapper
    res = cfg.res_per_rb
    plans = _fixed_plans(scenario)
    if plans is None:
        mcs_of = {"haptic": scenario.mcs_haptic, "video": scenario.mcs_video}
        plans = [(name, mcs_of[name], [(0, 0)] * count) for name, count in _mmct_slot_counts(cfg)]
    summary: dict[str, dict[str, int]] = {}
    for name, mcs, slots in plans:
        if not slots:
            raise ConfigurationError(f"scheme {scenario.scheme.value} leaves stream {name} without RBs")
        slots_per_block = 1 if scenario.per_rb_codewords else len(slots)
        chan_bits = slots_per_block * res * mcs.modulation_order
        info_bits = coding.payload_capacity(chan_bits, mcs.code_rate)
        summary[name] = {
            "slots": len(slots),
            "blocks_per_trial": len(slots) // slots_per_block,
            "chan_bits_per_block": chan_bits,
            "info_bits_per_block": info_bits,
        }
    return summary


def _trial_rng(seed: int, point: int, trial: int) -> np.random.Generator:
    return np.random.default_rng([seed, point, trial])


class _StreamAccum:
    __slots__ = ("blocks", "block_errors", "bits", "bit_errors")

    def __init__(self):
        self.blocks = 0
        self.block_errors = 0
        self.bits = 0
        self.bit_errors = 0

    def add(self, block_errors: int, blocks: int, bit_errors: int, bits: int):
        self.blocks += blocks
        self.block_errors += block_errors
        self.bits += bits
        self.bit_errors += bit_errors


def _segments(slots: Sequence[tuple[int, int]], per_rb: bool):
    if per_rb:
        return [[s] for s in slots]
    return [list(slots)]


def _simulate_point(scenario: LinkScenario, point: int) -> dict[str, tuple[int, int, int, int]]:
    cfg = scenario.mapper
    b, n_layers, res = cfg.rbs_per_layer, cfg.layers, cfg.res_per_rb
    n_t, n_r = scenario.tx_antennas, scenario.rx_antennas
    snr_lin = 10.0 ** (scenario.snr_grid_db[point] / 10.0)
    sigma2 = 1.0 / snr_lin
    fixed_plans = _fixed_plans(scenario)
    is_mmct = fixed_plans is None
    accum = {"h": _StreamAccum(), "v": _StreamAccum()}

    for trial in range(scenario.trials_per_point):
        rng = _trial_rng(scenario.rng_seed, point, trial)
        if scenario.rx_angle is None:
            theta = math.pi / 2 - rng.uniform(0.0, math.pi)
        else:
            theta = scenario.rx_angle
        corr = CorrelationModel.from_angle(theta)
        h = sample_channel_batch(n_t, n_r, corr, b, rng)

        _, sig, vh = np.linalg.svd(h)
        v_cols = np.swapaxes(vh, 1, 2).conj()[:, :, :n_layers]
        precoder = v_cols / math.sqrt(n_layers)
        eff = h @ precoder  # (b, n_r, layers)
        lam = sig[:, :n_layers] ** 2

        if is_mmct:
            snr_map = SnrMap(lam * (snr_lin / n_layers))
            perms = identity_permutations(cfg)
            perms[cfg.shared_layer - 1] = build_permutation(snr_map, cfg.shared_layer, cfg)
            hap_slots, vid_slots = stream_slots(cfg, perms)
            plans = []
            if hap_slots:
                plans.append(("haptic", scenario.mcs_haptic, hap_slots))
            if vid_slots:
                plans.append(("video", scenario.mcs_video, vid_slots))
        else:
            plans = fixed_plans

        # Transmit side: bits are drawn per stream in plan order, after the
        # channel, so equal seeds share channels across schemes.
        x = np.zeros((b, n_layers, res), dtype=np.complex128)
        tx_records = []
        for name, mcs, slots in plans:
            segs = _segments(slots, scenario.per_rb_codewords)
            seg_records = []
            for seg in segs:
                chan_bits = len(seg) * res * mcs.modulation_order
                info_len = coding.payload_capacity(chan_bits, mcs.code_rate)
                bits = rng.integers(0, 2, size=info_len, dtype=np.uint8)
                coded = coding.encode(bits, mcs.code_rate, chan_bits)
                syms = modem.modulate(coded, mcs.modulation_order)
                for i, (row, col) in enumerate(seg):
                    x[row, col] = syms[i * res : (i + 1) * res]
                seg_records.append((seg, bits, info_len))
            tx_records.append((name, mcs, seg_records))

        noise = rng.standard_normal((b, n_r, res)) + 1j * rng.standard_normal((b, n_r, res))
        y = eff @ x + noise * math.sqrt(sigma2 / 2.0)

        w = np.linalg.pinv(eff)  # zero forcing on the effective channel
        x_hat = w @ y
        layer_noise = sigma2 * np.sum(np.abs(w) ** 2, axis=2)  # (b, layers)

        for name, mcs, seg_records in tx_records:
            dec_all, bits_all = [], []
            block_errs = 0
            for seg, bits, info_len in seg_records:
                rows = np.array([s[0] for s in seg])
                cols = np.array([s[1] for s in seg])
                ys = x_hat[rows, cols].reshape(-1)
                nv = np.repeat(layer_noise[rows, cols], res)
                llrs = modem.llrs_maxlog(ys, mcs.modulation_order, nv)
                dec, _crc_ok = coding.decode(llrs, mcs.code_rate, info_len)
                if np.any(dec != bits):
                    block_errs += 1
                dec_all.append(dec)
                bits_all.append(bits)
            dec_cat = np.concatenate(dec_all)
            bits_cat = np.concatenate(bits_all)
            n_blocks = len(seg_records)
            if name == "haptic":
                accum["h"].add(block_errs, n_blocks, int(np.count_nonzero(dec_cat != bits_cat)), bits_cat.size)
            elif name == "video":
                accum["v"].add(block_errs, n_blocks, int(np.count_nonzero(dec_cat != bits_cat)), bits_cat.size)
            else:  # jointly coded mixture: haptic_share of the bits are haptic
                split = int(round(scenario.haptic_share * bits_cat.size))
                err_h = int(np.count_nonzero(dec_cat[:split] != bits_cat[:split]))
                err_v = int(np.count_nonzero(dec_cat[split:] != bits_cat[split:]))
                accum["h"].add(block_errs, n_blocks, err_h, split)
                accum["v"].add(block_errs, n_blocks, err_v, bits_cat.size - split)

    return {
        key: (a.block_errors, a.blocks, a.bit_errors, a.bits)
        for key, a in accum.items()
    }


def _point_worker(args) -> dict[str, tuple[int, int, int, int]]:
    scenario, point = args
    return _simulate_point(scenario, point)


def run_scenario(scenario: LinkScenario, threads: int = 1) -> LinkResult:
    """Run the scenario over its SNR grid; deterministic given the seed."""
    points = list(range(len(scenario.snr_grid_db)))
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            stats = list(pool.map(_point_worker, [(scenario, p) for p in points]))
    else:
        stats = [_simulate_point(scenario, p) for p in points]

    def rates(key: str):
        bler, ber, blocks = [], [], []
        for st in stats:
            blk_err, blk, bit_err, bits = st[key]
            bler.append(blk_err / blk if blk else np.nan)
            ber.append(bit_err / bits if bits else np.nan)
            blocks.append(blk)
        return np.array(bler), np.array(ber), np.array(blocks, dtype=np.int64)

    bler_h, ber_h, blocks_h = rates("h")
    bler_v, ber_v, blocks_v = rates("v")
    return LinkResult(
        scheme=scenario.scheme,
        snr_db=np.array(scenario.snr_grid_db),
        bler_haptic=bler_h,
        bler_video=bler_v,
        ber_haptic=ber_h,
        ber_video=ber_v,
        blocks_counted=np.maximum(blocks_h, blocks_v),
    )


def run_reference_schemes(
    mapper: MapperConfig,
    mcs: McsEntry,
    low_mcs: McsEntry,
    snr_grid_db: Sequence[float],
    trials_per_point: int,
    rng_seed: int,
    threads: int = 1,
    **scenario_kwargs,
) -> dict[SchemeId, LinkResult]:
    """All six reference curves; the concurrent scheme is simulated once."""
    base = dict(
        mapper=mapper,
        mcs_haptic=mcs,
        mcs_video=mcs,
        snr_grid_db=tuple(snr_grid_db),
        trials_per_point=trials_per_point,
        rng_seed=rng_seed,
        **scenario_kwargs,
    )
    results: dict[SchemeId, LinkResult] = {}
    for scheme in (SchemeId.NR_HAPTIC_ALONE, SchemeId.NR_VIDEO_ALONE, SchemeId.NR_JOINT):
        results[scheme] = run_scenario(LinkScenario(scheme=scheme, **base), threads)
    low = dict(base, mcs_haptic=low_mcs)
    results[SchemeId.NR_HAPTIC_LOW_MCS] = run_scenario(
        LinkScenario(scheme=SchemeId.NR_HAPTIC_LOW_MCS, **low), threads
    )
    mmct = run_scenario(LinkScenario(scheme=SchemeId.MMCT_HAPTIC, **base), threads)
    results[SchemeId.MMCT_HAPTIC] = mmct
    results[SchemeId.MMCT_VIDEO] = replace(mmct, scheme=SchemeId.MMCT_VIDEO)
    return results


def crossing_snr(snr_db: np.ndarray, bler: np.ndarray, target: float) -> float | None:
    """First SNR where the curve drops to the target, interpolated in dB.

    Interpolation is linear in log10(BLER) between the bracketing grid
    points, falling back to linear in BLER when the lower point is zero.
    Returns None when the grid does not bracket the crossing (including a
    curve already at or below target at the first point).
    """
    snr_db = np.asarray(snr_db, dtype=np.float64)
    bler = np.asarray(bler, dtype=np.float64)
    if snr_db.size != bler.size:
        raise ValidationError("snr/bler size mismatch")
    if not 0 < target < 1:
        raise ValidationError(f"target {target} outside (0, 1)")
    if bler.size == 0 or np.isnan(bler).all():
        return None
    if bler[0] <= target:
        return None
    for i in range(1, bler.size):
        b_hi, b_lo = bler[i - 1], bler[i]
        if np.isnan(b_hi) or np.isnan(b_lo):
            continue
        if b_hi > target >= b_lo:
            if b_lo > 0:
                frac = (math.log10(b_hi) - math.log10(target)) / (
                    math.log10(b_hi) - math.log10(b_lo)
                )
            else:
                frac = (b_hi - target) / (b_hi - b_lo)
            return float(snr_db[i - 1] + frac * (snr_db[i] - snr_db[i - 1]))
    return None


@dataclass(frozen=True)
class GainReport:
    """SNR gains of the concurrent scheme over the joint baseline (dB)."""

    bler_target_haptic: float
    bler_target_video: float
    snr_mmct_haptic_db: float | None
    snr_mmct_video_db: float | None
    snr_mmct_both_db: float | None
    snr_joint_haptic_db: float | None
    snr_joint_stringent_db: float | None
    gain_haptic_db: float | None
    gain_effective_db: float | None
    warnings: tuple[str, ...]


def gain_report(
    results: Mapping[SchemeId, LinkResult],
    bler_target_h: float = 1e-3,
    bler_target_v: float = 1e-1,
) -> GainReport:
    """Power gains read off the curves at the per-stream BLER targets.

    The effective gain compares the joint baseline at the most stringent
    target with the concurrent scheme meeting both stream targets; the
    haptic gain compares the two haptic curves at the haptic target.
    Missing crossings are reported as warnings, never extrapolated.
    """
    warnings: list[str] = []

    def cross(scheme: SchemeId, stream: str, target: float) -> float | None:
        if scheme not in results:
            warnings.append(f"{scheme.value}: no result provided")
            return None
        res = results[scheme]
        snr = crossing_snr(res.snr_db, res.bler(stream), target)
        if snr is None:
            warnings.append(
                f"{scheme.value} {stream} BLER {target:g} not reached within the grid"
            )
        return snr

    snr_mmct_h = cross(SchemeId.MMCT_HAPTIC, "haptic", bler_target_h)
    snr_mmct_v = cross(SchemeId.MMCT_VIDEO, "video", bler_target_v)
    stringent = min(bler_target_h, bler_target_v)
    snr_joint_str = cross(SchemeId.NR_JOINT, "haptic", stringent)
    snr_joint_h = (
        snr_joint_str
        if stringent == bler_target_h
        else cross(SchemeId.NR_JOINT, "haptic", bler_target_h)
    )

    both = None
    if snr_mmct_h is not None and snr_mmct_v is not None:
        both = max(snr_mmct_h, snr_mmct_v)
    gain_eff = None
    if both is not None and snr_joint_str is not None:
        gain_eff = snr_joint_str - both
    gain_h = None
    if snr_mmct_h is not None and snr_joint_h is not None:
        gain_h = snr_joint_h - snr_mmct_h

    return GainReport(
        bler_target_haptic=bler_target_h,
        bler_target_video=bler_target_v,
        snr_mmct_haptic_db=snr_mmct_h,
        snr_mmct_video_db=snr_mmct_v,
        snr_mmct_both_db=both,
        snr_joint_haptic_db=snr_joint_h,
        snr_joint_stringent_db=snr_joint_str,
        gain_haptic_db=gain_h,
        gain_effective_db=gain_eff,
        warnings=tuple(warnings),
    )
