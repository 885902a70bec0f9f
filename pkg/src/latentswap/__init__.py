"""Exemplar-based multi-attribute image transfer.

Two images with opposite attributes are encoded into latent tensors split
channel-wise into per-attribute parts; swapping the i-th parts and decoding
residuals against the originals produces each image wearing the other's
attribute style. Training is dual-scale conditional adversarial plus
reconstruction. See README.md for the CLI and the HTTP service.
"""

from .backend import active_backend
from .config import ModelConfig, TrainConfig
from .data import (
    ArrayDataset,
    AttributeTable,
    EpochPairSampler,
    denormalize,
    normalize,
    parse_attribute_file,
    sample_pair_batches,
    serialize_attribute_file,
)
from .align import LandmarkSet, align_and_crop, canonical_template, similarity_transform
from .errors import (
    AlignmentError,
    AttributeFileParseError,
    CheckpointError,
    ConfigError,
    ContractError,
    DataError,
    LatentSwapError,
    NumericsError,
    ShapeError,
    TrainingDivergedError,
)
from .evaluate import (
    emit_grid,
    evaluation_report,
    interpolate_matrix,
    interpolate_single,
    reconstruct,
    transfer,
    transfer_accuracy,
    transfer_multi,
)
from .fid import FeatureExtractor, GaussianStats, fid, gaussian_stats, get_extractor, \
    make_projection_extractor, register_extractor
from .losses import (
    LossReport,
    discriminator_loss,
    generator_adversarial_loss,
    generator_loss,
    reconstruction_loss,
)
from .model import (
    AttributeLabelVector,
    LatentCode,
    ModelParams,
    compose,
    decode,
    discriminate,
    encode,
    exchange,
    flip_label,
    l2_normalize,
)
from .service import SessionModel, create_app, load
from .synth import SyntheticOracle, SyntheticSpec, generate_synthetic, oracle_classify, \
    render_image
from .train import TrainState, resume_state, train_loop, train_step

__version__ = "0.1.0"
