"""Half-pel interpolation toolkit.

Images are 2-D float64 arrays of shape (height, width) on the 0..255 scale.
"""

from ._halfpel import (
    ConfigError,
    FormatError,
    IoError,
    Network,
    PgmParseError,
    PreconditionError,
    apply_network,
    bd_rate,
    blur,
    build_dataset,
    degrade_intra_surrogate,
    extract_phases,
    init_network,
    interleave_phases,
    interp_half,
    load_pgm,
    load_weights,
    mse,
    psnr,
    run_cli,
    save_pgm,
    save_weights,
    select_model_qp,
    simulate_sequence,
    synthetic_clip,
    synthetic_image,
    train,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
