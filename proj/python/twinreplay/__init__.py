"""Python access to the twinreplay core: point-cloud codecs, rendering,
playback timing and pose comparison."""

from ._twin import (
    EMPTY_CELL,
    CommandError,
    FormatError,
    ManifestError,
    compare_poses,
    decode_spcf,
    encode_spcf,
    frame_index_at,
    generate_synthetic,
    pack_cell,
    quantize_depth,
    read_ppm,
    render,
    simulate_loader,
    voxel_downsample,
)

__all__ = [
    "EMPTY_CELL",
    "CommandError",
    "FormatError",
    "ManifestError",
    "compare_poses",
    "decode_spcf",
    "encode_spcf",
    "frame_index_at",
    "generate_synthetic",
    "pack_cell",
    "quantize_depth",
    "read_ppm",
    "render",
    "simulate_loader",
    "voxel_downsample",
]

__version__ = "0.1.0"
