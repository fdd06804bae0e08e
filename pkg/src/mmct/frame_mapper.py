"""Space-frequency arrangement of two concurrent data streams.

One slot's resources form a B x L grid of resource blocks: ``rbs_per_layer``
RBs in frequency by ``layers`` spatial layers, each RB carrying an
n_s x n_o matrix of modulated symbols. The high-reliability (haptic) stream
is packed column-major onto the strongest layers first; the last haptic
layer is shared with the video stream, which fills the remainder. A
per-layer frequency permutation then moves the haptic blocks of the shared
layer onto its highest-SNR RBs.

Conventions: layer *numbers* in public signatures are 1-based (layer 1 is
the strongest eigenchannel, matching the descending singular values
produced by :mod:`mmct.mimo_channel`). RB rows and permutation entries are
0-based array indices. A slot is the pair ``(row, col)`` indexing
``SpaceFreqGrid.blocks``, where ``col = layer_number - 1``.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .errors import (
    ConfigurationError,
    CorruptionError,
    MappingError,
    ValidationError,
)

__all__ = [
    "StreamTag",
    "MapperConfig",
    "RbBlock",
    "SpaceFreqGrid",
    "LayerPermutation",
    "SnrMap",
    "rb_counts",
    "map_layers",
    "build_permutation",
    "identity_permutations",
    "apply_permutation",
    "demap",
    "stream_slots",
    "blocks_from_symbols",
    "symbols_from_blocks",
]


class StreamTag(Enum):
    HAPTIC = "haptic"
    VIDEO = "video"


def _frozen_array(values, dtype) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class MapperConfig:
    """Geometry of the space-frequency grid and the haptic allocation.

    ``haptic_layers`` counts the strongest layers reserved (fully or
    partly) for the haptic stream; ``shared_haptic_rbs`` is the number of
    RBs the haptic stream occupies on the last of those layers, the one it
    shares with video.
    """

    layers: int
    haptic_layers: int
    rbs_per_layer: int
    shared_haptic_rbs: int
    subcarriers: int = 12
    ofdm_symbols: int = 12

    def __post_init__(self):
        if self.layers < 1 or self.rbs_per_layer < 1:
            raise ConfigurationError(
                f"need at least one layer and one RB, got layers={self.layers}, "
                f"rbs_per_layer={self.rbs_per_layer}"
            )
        if self.subcarriers < 1 or self.ofdm_symbols < 1:
            raise ConfigurationError(
                f"RB dimensions must be positive, got {self.subcarriers}x{self.ofdm_symbols}"
            )
        if not 1 <= self.haptic_layers <= self.layers:
            raise ConfigurationError(
                f"haptic_layers={self.haptic_layers} outside 1..{self.layers}"
            )
        if not 0 <= self.shared_haptic_rbs <= self.rbs_per_layer:
            raise ConfigurationError(
                f"shared_haptic_rbs={self.shared_haptic_rbs} outside 0..{self.rbs_per_layer}"
            )

    @property
    def shared_layer(self) -> int:
        """1-based number of the layer shared between the two streams."""
        return self.haptic_layers

    @property
    def haptic_rb_count(self) -> int:
        return (self.haptic_layers - 1) * self.rbs_per_layer + self.shared_haptic_rbs

    @property
    def video_rb_count(self) -> int:
        return (self.layers - self.haptic_layers + 1) * self.rbs_per_layer - self.shared_haptic_rbs

    @property
    def res_per_rb(self) -> int:
        return self.subcarriers * self.ofdm_symbols


def rb_counts(config: MapperConfig) -> tuple[int, int]:
    """Number of RBs assigned to the (haptic, video) streams."""
    return config.haptic_rb_count, config.video_rb_count


@dataclass(frozen=True)
class RbBlock:
    """One resource block of modulated symbols, tagged with its stream."""

    symbols: np.ndarray
    stream_tag: StreamTag

    def __post_init__(self):
        arr = _frozen_array(self.symbols, np.complex128)
        if arr.ndim != 2:
            raise ValidationError(f"RB symbols must be 2-D, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValidationError("RB symbols contain non-finite entries")
        object.__setattr__(self, "symbols", arr)
        if not isinstance(self.stream_tag, StreamTag):
            raise ValidationError(f"bad stream tag {self.stream_tag!r}")

    @property
    def shape(self) -> tuple[int, int]:
        return self.symbols.shape


@dataclass(frozen=True)
class SpaceFreqGrid:
    """B x L arrangement of RB blocks; ``blocks[row][col]``, col = layer - 1."""

    blocks: tuple[tuple[RbBlock, ...], ...]
    config: MapperConfig

    def __post_init__(self):
        cfg = self.config
        rows = tuple(tuple(row) for row in self.blocks)
        object.__setattr__(self, "blocks", rows)
        if len(rows) != cfg.rbs_per_layer or any(len(r) != cfg.layers for r in rows):
            raise MappingError(
                f"grid must be {cfg.rbs_per_layer}x{cfg.layers}, "
                f"got {len(rows)} rows"
            )
        expect_shape = (cfg.subcarriers, cfg.ofdm_symbols)
        tags = {StreamTag.HAPTIC: 0, StreamTag.VIDEO: 0}
        for row in rows:
            for blk in row:
                if blk.shape != expect_shape:
                    raise MappingError(
                        f"RB shape {blk.shape} does not match config {expect_shape}"
                    )
                tags[blk.stream_tag] += 1
        if tags[StreamTag.HAPTIC] != cfg.haptic_rb_count:
            raise MappingError(
                f"expected {cfg.haptic_rb_count} haptic blocks, "
                f"found {tags[StreamTag.HAPTIC]}"
            )

    def column(self, layer: int) -> tuple[RbBlock, ...]:
        """All blocks of a layer (1-based), ordered by RB row."""
        if not 1 <= layer <= self.config.layers:
            raise IndexError(f"layer {layer} outside 1..{self.config.layers}")
        return tuple(row[layer - 1] for row in self.blocks)


@dataclass(frozen=True)
class LayerPermutation:
    """RB reordering on one layer: input row k moves to row ``order[k]``."""

    layer: int
    order: np.ndarray

    def __post_init__(self):
        arr = _frozen_array(self.order, np.intp)
        if arr.ndim != 1:
            raise ValidationError("permutation order must be 1-D")
        n = arr.size
        if not np.array_equal(np.sort(arr), np.arange(n)):
            raise ValidationError(f"order {arr} is not a permutation of 0..{n - 1}")
        object.__setattr__(self, "order", arr)

    @property
    def inverse(self) -> np.ndarray:
        """Destination-to-source map: ``inverse[order[k]] == k``."""
        return np.argsort(self.order)


@dataclass(frozen=True)
class SnrMap:
    """Per-RB, per-layer linear SNRs, shape (rbs_per_layer, layers)."""

    values: np.ndarray

    def __post_init__(self):
        arr = _frozen_array(self.values, np.float64)
        if arr.ndim != 2:
            raise ValidationError("SNR map must be 2-D (rows x layers)")
        if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
            raise ValidationError("SNR map entries must be finite and positive")
        object.__setattr__(self, "values", arr)


def _canonical_slots(config: MapperConfig) -> tuple[list[tuple[int, int]], list[tuple[int, int]]]:
    """Column-major fill positions for each stream, before any permutation."""
    b = config.rbs_per_layer
    shared = config.haptic_layers - 1  # 0-based column of the shared layer
    haptic = [(k % b, k // b) for k in range(config.haptic_rb_count)]
    video = []
    for j in range(config.video_rb_count):
        if j < b - config.shared_haptic_rbs:
            video.append((config.shared_haptic_rbs + j, shared))
        else:
            k = j - (b - config.shared_haptic_rbs)
            video.append((k % b, shared + 1 + k // b))
    return haptic, video


def stream_slots(
    config: MapperConfig, perms: Sequence[LayerPermutation] | None = None
) -> tuple[list[tuple[int, int]], list[tuple[int, int]]]:
    """Final ``(row, col)`` grid coordinates of each stream's blocks, in order.

    With ``perms=None`` the canonical (un-permuted) placement is returned.
    """
    haptic, video = _canonical_slots(config)
    if perms is None:
        return haptic, video
    _check_perms(perms, config)
    orders = [p.order for p in perms]
    haptic = [(int(orders[col][row]), col) for row, col in haptic]
    video = [(int(orders[col][row]), col) for row, col in video]
    return haptic, video


def map_layers(
    haptic_blocks: Sequence[RbBlock],
    video_blocks: Sequence[RbBlock],
    config: MapperConfig,
) -> SpaceFreqGrid:
    """Arrange per-stream RB blocks into the canonical space-frequency grid.

    The haptic stream fills the strongest layers column-major: layers
    1..haptic_layers-1 completely, then the first ``shared_haptic_rbs``
    rows of the shared layer. Video continues with the rest of the shared
    layer, then the remaining layers, preserving input order.
    """
    if len(haptic_blocks) != config.haptic_rb_count:
        raise MappingError(
            f"expected {config.haptic_rb_count} haptic blocks, got {len(haptic_blocks)}"
        )
    if len(video_blocks) != config.video_rb_count:
        raise MappingError(
            f"expected {config.video_rb_count} video blocks, got {len(video_blocks)}"
        )
    for blocks, tag in ((haptic_blocks, StreamTag.HAPTIC), (video_blocks, StreamTag.VIDEO)):
        for blk in blocks:
            if blk.stream_tag is not tag:
                raise MappingError(f"block tagged {blk.stream_tag} passed as {tag}")

    cells: list[list[RbBlock | None]] = [
        [None] * config.layers for _ in range(config.rbs_per_layer)
    ]
    hap_slots, vid_slots = _canonical_slots(config)
    for blk, (row, col) in zip(haptic_blocks, hap_slots):
        cells[row][col] = blk
    for blk, (row, col) in zip(video_blocks, vid_slots):
        cells[row][col] = blk
    return SpaceFreqGrid(tuple(tuple(row) for row in cells), config)


def build_permutation(
    snr: SnrMap | np.ndarray, layer: int, config: MapperConfig
) -> LayerPermutation:
    """Frequency permutation for one layer, driven by per-RB SNR.

    On the shared layer the haptic blocks (input rows 0..shared_haptic_rbs-1)
    are sent to the rows with the highest SNRs, in descending SNR order
    (ties broken toward the lower row index); the video rows fill the
    remaining positions in ascending row order. Every other layer gets the
    identity, as does a shared layer that is entirely haptic or entirely
    video.
    """
    if not 1 <= layer <= config.layers:
        raise IndexError(f"layer {layer} outside 1..{config.layers}")
    if not isinstance(snr, SnrMap):
        snr = SnrMap(np.asarray(snr, dtype=np.float64))
    b = config.rbs_per_layer
    if snr.values.shape != (b, config.layers):
        raise ValidationError(
            f"SNR map shape {snr.values.shape} does not match "
            f"({b}, {config.layers})"
        )
    b1 = config.shared_haptic_rbs
    if layer != config.shared_layer or b1 == 0 or b1 == b:
        return LayerPermutation(layer, np.arange(b))
    col = snr.values[:, layer - 1]
    ranked = np.lexsort((np.arange(b), -col))  # descending SNR, then row index
    top = ranked[:b1]
    rest = np.sort(ranked[b1:])
    return LayerPermutation(layer, np.concatenate([top, rest]))


def identity_permutations(config: MapperConfig) -> list[LayerPermutation]:
    return [
        LayerPermutation(layer, np.arange(config.rbs_per_layer))
        for layer in range(1, config.layers + 1)
    ]


def _check_perms(perms: Sequence[LayerPermutation], config: MapperConfig) -> None:
    if len(perms) != config.layers:
        raise ValidationError(
            f"need one permutation per layer ({config.layers}), got {len(perms)}"
        )
    for i, perm in enumerate(perms):
        if perm.layer != i + 1:
            raise ValidationError(
                f"permutation at position {i} is for layer {perm.layer}, expected {i + 1}"
            )
        if perm.order.size != config.rbs_per_layer:
            raise ValidationError(
                f"layer {perm.layer} permutation has length {perm.order.size}, "
                f"expected {config.rbs_per_layer}"
            )


def apply_permutation(
    grid: SpaceFreqGrid, perms: Sequence[LayerPermutation]
) -> SpaceFreqGrid:
    """Reorder RB rows independently on each layer; tags travel with blocks."""
    cfg = grid.config
    _check_perms(perms, cfg)
    cells: list[list[RbBlock | None]] = [[None] * cfg.layers for _ in range(cfg.rbs_per_layer)]
    for col, perm in enumerate(perms):
        for row in range(cfg.rbs_per_layer):
            cells[int(perm.order[row])][col] = grid.blocks[row][col]
    return SpaceFreqGrid(tuple(tuple(row) for row in cells), cfg)


def demap(
    grid: SpaceFreqGrid,
    perms: Sequence[LayerPermutation],
    config: MapperConfig,
) -> tuple[list[RbBlock], list[RbBlock]]:
    """Receiver-side inverse of ``map_layers`` + ``apply_permutation``.

    Returns the (haptic, video) block sequences in their original order.
    Raises :class:`CorruptionError` if the grid's tags do not sit where the
    configuration and permutations say they should.
    """
    if grid.config != config:
        raise CorruptionError("grid was built with a different mapper configuration")
    hap_slots, vid_slots = stream_slots(config, perms)
    haptic, video = [], []
    for slots, tag, out in (
        (hap_slots, StreamTag.HAPTIC, haptic),
        (vid_slots, StreamTag.VIDEO, video),
    ):
        for row, col in slots:
            blk = grid.blocks[row][col]
            if blk.stream_tag is not tag:
                raise CorruptionError(
                    f"block at row {row}, layer {col + 1} tagged "
                    f"{blk.stream_tag.value}, expected {tag.value}"
                )
            out.append(blk)
    return haptic, video


def blocks_from_symbols(
    symbols: np.ndarray, config: MapperConfig, tag: StreamTag
) -> list[RbBlock]:
    """Cut a flat symbol vector into RB blocks (row-major inside each RB)."""
    symbols = np.asarray(symbols)
    per_rb = config.res_per_rb
    if symbols.size % per_rb != 0:
        raise MappingError(
            f"{symbols.size} symbols do not fill whole RBs of {per_rb}"
        )
    n = symbols.size // per_rb
    return [
        RbBlock(
            symbols[i * per_rb : (i + 1) * per_rb].reshape(
                config.subcarriers, config.ofdm_symbols
            ),
            tag,
        )
        for i in range(n)
    ]


def symbols_from_blocks(blocks: Sequence[RbBlock]) -> np.ndarray:
    """Inverse of :func:`blocks_from_symbols`."""
    if not blocks:
        return np.zeros(0, dtype=np.complex128)
    return np.concatenate([blk.symbols.reshape(-1) for blk in blocks])
