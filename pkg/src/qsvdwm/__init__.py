"""Structure-preserving quaternion SVD and blind color-image watermarking."""

__version__ = "0.1.0"

from .quaternion import (
    CompactReal,
    FormatError,
    Quat,
    QuatMatrix,
    frob_norm,
    from_compact,
    quat_conj,
    quat_inverse,
    quat_matmul,
    quat_mul,
    quat_norm,
    to_compact,
    to_full_counterpart,
)
from .transforms import (
    GeneralizedGivens,
    HouseholderReflector,
    OpLedger,
    apply_givens_pair,
    apply_householder,
    make_givens,
    make_householder,
    phase_matrix,
)
from .qsvd import BidiagResult, QsvdFactors, bench_qsvd, bidiagonalize, qsvd, qsvd_batch, real_bidiagonal_svd, residual, unitarity_error
from .codec import RgbImage, ber, decode_quaternion, encode_quaternion, load_ppm, ncc, partition, psnr, reassemble, save_ppm
from .attacks import AttackSpec
from .watermark import (
    CapacityError,
    EmbedConfig,
    WatermarkKey,
    analyze_pairs,
    embed,
    embed_block,
    embed_triple,
    extract,
    extract_block,
    extract_triple,
    key_schedule,
)
