"""Model and training configuration."""

from dataclasses import dataclass, fields

from .errors import ConfigError


@dataclass
class ModelConfig:
    """Shape of the encoder/decoder/discriminator stack.

    Every network has `depth` strided conv layers (kernel 4, stride 2,
    padding 1), so spatial size halves per layer. The latent tensor is
    split channel-wise into n_attributes equal parts.
    """

    n_attributes: int
    image_size: int = 256
    depth: int = 5
    base_channels: int = 32
    leaky_slope: float = 0.2
    latent_channels: int = 512

    def __post_init__(self):
        if self.n_attributes < 1:
            raise ConfigError("n_attributes must be positive")
        if self.image_size % (1 << self.depth) != 0:
            raise ConfigError(
                f"image_size {self.image_size} not divisible by 2^depth = {1 << self.depth}"
            )
        if self.latent_channels % self.n_attributes != 0:
            raise ConfigError(
                f"latent_channels {self.latent_channels} not divisible by "
                f"n_attributes {self.n_attributes}"
            )
        # the half-scale discriminator needs at least one pixel after its stack
        if self.image_size // 2 < (1 << self.depth):
            raise ConfigError(
                f"image_size {self.image_size} too small for the half-scale "
                f"discriminator at depth {self.depth}"
            )

    @property
    def latent_hw(self):
        return self.image_size >> self.depth

    def encoder_channels(self):
        """Per-layer output channels; the final layer is pinned to latent_channels."""
        chans = [min(self.base_channels << k, self.latent_channels) for k in range(self.depth)]
        chans[-1] = self.latent_channels
        return chans

    def to_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_dict(cls, d):
        return cls(**{f.name: d[f.name] for f in fields(cls) if f.name in d})


@dataclass
class TrainConfig:
    """Optimization hyperparameters (Adam plus loss weights)."""

    learning_rate: float = 2e-4
    adam_beta1: float = 0.5
    adam_beta2: float = 0.999
    batch_size: int = 16
    total_steps: int = 10000
    recon_weight: float = 1.0
    adv_weight: float = 1.0
    log_clamp_eps: float = 1e-8
    checkpoint_interval: int = 500
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be > 0")
        if not (0 <= self.adam_beta1 < 1) or not (0 <= self.adam_beta2 < 1):
            raise ConfigError("adam betas must lie in [0, 1)")
        if self.batch_size < 1 or self.total_steps < 1:
            raise ConfigError("batch_size and total_steps must be positive")

    def to_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_dict(cls, d):
        return cls(**{f.name: d[f.name] for f in fields(cls) if f.name in d})
