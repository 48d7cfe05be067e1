"""Multi-view reconstruction network: encoder, decoder, fusion, refiner.

The interface shapes are fixed contracts: each 224x224x3 view encodes to a
4x4x256 feature map, which reshapes losslessly to a 2x2x2x512 volume seed
and decodes through four factor-2 upsampling stages to a 32^3 occupancy
volume per view. Per-voxel softmax scores fuse the per-view volumes into
one, and a U-Net style refiner applies a residual correction in logit
space, so a freshly initialized refiner is exactly the identity.

Public tensors are channels-last (views as (n, H, W, 3), volumes as plain
(..., 32, 32, 32)); layers run channels-first internally as usual.

Internal layer widths scale with ModelConfig.width so the same topology
runs at full scale or shrinks to something a CPU can train in seconds.
"""

import math
from dataclasses import dataclass

import numpy as np
import torch
from torch import nn

from .errors import InvalidConfig, ShapeMismatch

ENCODER_SHAPE = (4, 4, 256)
SEED_SHAPE = (2, 2, 2, 512)
BASE_ENC_CHANNELS = (64, 128, 256, 512, 512)
BASE_DEC_CHANNELS = (128, 64, 32, 8)
BASE_FUSE_CHANNELS = (16, 8, 4)
BASE_REFINE_CHANNELS = (32, 64, 128)


@dataclass(frozen=True)
class ModelConfig:
    n_views: int | None = None
    image_size: int = 224
    out_res: int = 32
    width: float = 1.0
    learning_rate: float = 0.001
    batch_size: int = 32
    epochs: int = 150
    seed: int = 0

    def __post_init__(self):
        up_factor = 2 ** len(BASE_DEC_CHANNELS)
        if SEED_SHAPE[0] * up_factor != self.out_res:
            raise InvalidConfig(
                f"out_res {self.out_res} unreachable from seed {SEED_SHAPE[:3]} "
                f"through {len(BASE_DEC_CHANNELS)} factor-2 stages"
            )
        if math.prod(ENCODER_SHAPE) != math.prod(SEED_SHAPE):
            raise InvalidConfig("encoder output and decoder seed sizes differ")
        if self.n_views is not None and self.n_views < 1:
            raise InvalidConfig(f"n_views must be >= 1, got {self.n_views}")
        if self.width <= 0:
            raise InvalidConfig(f"width must be positive, got {self.width}")
        if self.batch_size < 1:
            raise InvalidConfig(f"batch_size must be >= 1, got {self.batch_size}")
        if self.epochs < 0:
            raise InvalidConfig(f"epochs must be >= 0, got {self.epochs}")

    def scaled(self, base: int) -> int:
        return max(4, round(base * self.width))

    @classmethod
    def desk(cls, **overrides) -> "ModelConfig":
        """Small widths for CPU runs; interface shapes are unchanged."""
        overrides.setdefault("width", 0.125)
        return cls(**overrides)

    @classmethod
    def full_scale(cls, **overrides) -> "ModelConfig":
        return cls(**overrides)


def _as_tensor(x, device=None) -> torch.Tensor:
    if isinstance(x, np.ndarray):
        x = torch.from_numpy(np.ascontiguousarray(x))
    if not torch.is_tensor(x):
        raise ShapeMismatch(f"expected an array or tensor, got {type(x).__name__}")
    return x.to(device) if device is not None else x


class Encoder(nn.Module):
    """Shared per-view image encoder: conv stacks to a 4x4x256 feature map."""

    def __init__(self, config: ModelConfig):
        super().__init__()
        self.config = config
        blocks = []
        in_ch = 3
        for base in BASE_ENC_CHANNELS:
            out_ch = config.scaled(base)
            blocks.append(
                nn.Sequential(
                    nn.Conv2d(in_ch, out_ch, 3, padding=1, bias=False),
                    nn.BatchNorm2d(out_ch),
                    nn.ReLU(inplace=True),
                    nn.MaxPool2d(2),
                )
            )
            in_ch = out_ch
        self.blocks = nn.ModuleList(blocks)
        self.head = nn.Sequential(
            nn.Conv2d(in_ch, ENCODER_SHAPE[2], 1, bias=False),
            nn.BatchNorm2d(ENCODER_SHAPE[2]),
            nn.ReLU(inplace=True),
            nn.AdaptiveMaxPool2d(ENCODER_SHAPE[:2]),
        )

    def forward(self, images) -> torch.Tensor:
        images = _as_tensor(images)
        size = self.config.image_size
        if images.ndim != 4 or images.shape[1:] != (size, size, 3):
            raise ShapeMismatch(
                f"expected images (n, {size}, {size}, 3), got {tuple(images.shape)}"
            )
        x = images.permute(0, 3, 1, 2)
        for block in self.blocks:
            x = block(x)
        x = self.head(x)
        latents = x.permute(0, 2, 3, 1)
        if latents.shape[1:] != ENCODER_SHAPE:
            raise ShapeMismatch(
                f"encoder produced {tuple(latents.shape[1:])}, "
                f"contract is {ENCODER_SHAPE}"
            )
        return latents


class Decoder(nn.Module):
    """Per-view volume generator: seed reshape plus transposed-conv stages."""

    def __init__(self, config: ModelConfig):
        super().__init__()
        self.config = config
        stages = []
        in_ch = SEED_SHAPE[3]
        for base in BASE_DEC_CHANNELS:
            out_ch = config.scaled(base)
            stages.append(
                nn.Sequential(
                    nn.ConvTranspose3d(
                        in_ch, out_ch, 4, stride=2, padding=1, bias=False
                    ),
                    nn.BatchNorm3d(out_ch),
                    nn.ReLU(inplace=True),
                )
            )
            in_ch = out_ch
        self.stages = nn.ModuleList(stages)
        self.feature_channels = in_ch + 1
        self.head = nn.Conv3d(in_ch, 1, 3, padding=1)

    def seed(self, latents) -> torch.Tensor:
        """Reshape encoder features to the volume seed. Pure, no weights."""
        latents = _as_tensor(latents)
        if latents.ndim != 4 or latents.shape[1:] != ENCODER_SHAPE:
            raise ShapeMismatch(
                f"expected latents (n, {ENCODER_SHAPE}), got {tuple(latents.shape)}"
            )
        return latents.reshape(latents.shape[0], *SEED_SHAPE)

    def forward(self, latents) -> tuple[torch.Tensor, torch.Tensor]:
        """Latents to (volumes (n, 32, 32, 32) in (0, 1), features (n, c, 32^3))."""
        x = self.seed(latents).permute(0, 4, 1, 2, 3)
        for stage in self.stages:
            x = stage(x)
        raw = self.head(x)
        volumes = torch.sigmoid(raw)
        features = torch.cat([x, volumes], dim=1)
        volumes = volumes.squeeze(1)
        res = self.config.out_res
        if volumes.shape[1:] != (res, res, res):
            raise ShapeMismatch(
                f"decoder produced {tuple(volumes.shape[1:])}, expected {res}^3"
            )
        return volumes, features


class Fusion(nn.Module):
    """Score-weighted combination of per-view volumes into one.

    A small conv net scores each voxel of each view's volume from the
    decoder features; softmax across views turns scores into per-voxel
    convex weights.
    """

    def __init__(self, config: ModelConfig, feature_channels: int):
        super().__init__()
        layers = []
        in_ch = feature_channels
        for base in BASE_FUSE_CHANNELS:
            out_ch = config.scaled(base)
            layers += [
                nn.Conv3d(in_ch, out_ch, 3, padding=1),
                nn.LeakyReLU(0.2, inplace=True),
            ]
            in_ch = out_ch
        layers.append(nn.Conv3d(in_ch, 1, 3, padding=1))
        self.score_net = nn.Sequential(*layers)

    def forward(self, volumes, features) -> tuple[torch.Tensor, torch.Tensor]:
        """Fuse one sample's views: (n, r, r, r) -> ((r, r, r), weights)."""
        volumes = _as_tensor(volumes)
        if volumes.ndim != 4:
            raise ShapeMismatch(
                f"expected per-view volumes (n, r, r, r), got {tuple(volumes.shape)}"
            )
        scores = self.score_net(features).squeeze(1)
        weights = torch.softmax(scores, dim=0)
        fused = (weights * volumes).sum(dim=0)
        return fused, weights


class Refiner(nn.Module):
    """U-Net correction applied as a residual in logit space.

    The final conv starts at zero, so an untrained refiner maps its input
    to itself; training learns a correction on top of the fused volume.
    """

    def __init__(self, config: ModelConfig):
        super().__init__()
        c1, c2, c3 = (config.scaled(b) for b in BASE_REFINE_CHANNELS)
        self.down1 = self._conv_block(1, c1)
        self.down2 = self._conv_block(c1, c2)
        self.pool = nn.MaxPool3d(2)
        self.bottom = self._conv_block(c2, c3)
        self.up2 = nn.ConvTranspose3d(c3, c2, 4, stride=2, padding=1)
        self.merge2 = self._conv_block(c2 * 2, c2)
        self.up1 = nn.ConvTranspose3d(c2, c1, 4, stride=2, padding=1)
        self.merge1 = self._conv_block(c1 * 2, c1)
        self.head = nn.Conv3d(c1, 1, 3, padding=1)
        nn.init.zeros_(self.head.weight)
        nn.init.zeros_(self.head.bias)

    @staticmethod
    def _conv_block(in_ch: int, out_ch: int) -> nn.Sequential:
        return nn.Sequential(
            nn.Conv3d(in_ch, out_ch, 3, padding=1),
            nn.LeakyReLU(0.2, inplace=True),
        )

    def forward(self, fused) -> torch.Tensor:
        fused = _as_tensor(fused)
        squeeze = fused.ndim == 3
        x = fused.unsqueeze(0) if squeeze else fused
        if x.ndim != 4:
            raise ShapeMismatch(
                f"expected a volume (r, r, r) or batch (b, r, r, r), "
                f"got {tuple(fused.shape)}"
            )
        inp = x.unsqueeze(1)
        s1 = self.down1(inp)
        s2 = self.down2(self.pool(s1))
        mid = self.bottom(self.pool(s2))
        u2 = self.merge2(torch.cat([self.up2(mid), s2], dim=1))
        u1 = self.merge1(torch.cat([self.up1(u2), s1], dim=1))
        correction = self.head(u1).squeeze(1)

        eps = 1e-6
        logits = torch.logit(x.clamp(eps, 1 - eps))
        out = torch.sigmoid(logits + correction)
        return out.squeeze(0) if squeeze else out


class ReconNet(nn.Module):
    """Full pipeline: views in, one occupancy probability volume out."""

    def __init__(self, config: ModelConfig | None = None):
        super().__init__()
        self.config = config or ModelConfig()
        self.encoder = Encoder(self.config)
        self.decoder = Decoder(self.config)
        self.fusion = Fusion(self.config, self.decoder.feature_channels)
        self.refiner = Refiner(self.config)

    def encode(self, images) -> torch.Tensor:
        return self.encoder(images)

    def decode(self, latents) -> tuple[torch.Tensor, torch.Tensor]:
        return self.decoder(latents)

    def fuse(self, volumes, features) -> tuple[torch.Tensor, torch.Tensor]:
        return self.fusion(volumes, features)

    def refine(self, fused) -> torch.Tensor:
        return self.refiner(fused)

    def forward(self, images) -> torch.Tensor:
        """One sample: (n, H, W, 3) views -> (r, r, r) probabilities."""
        volumes, features = self.decode(self.encode(images))
        fused, _ = self.fuse(volumes, features)
        return self.refine(fused)

    def forward_batch(self, image_batch: torch.Tensor) -> torch.Tensor:
        """A batch of samples with equal view counts: (b, n, H, W, 3) -> (b, r, r, r).

        Encoder and decoder run on the flattened view axis; fusion is
        per sample because its softmax spans exactly one sample's views.
        """
        image_batch = _as_tensor(image_batch)
        if image_batch.ndim != 5:
            raise ShapeMismatch(
                f"expected (b, n, H, W, 3), got {tuple(image_batch.shape)}"
            )
        b, n = image_batch.shape[:2]
        flat = image_batch.reshape(b * n, *image_batch.shape[2:])
        volumes, features = self.decode(self.encode(flat))
        volumes = volumes.reshape(b, n, *volumes.shape[1:])
        features = features.reshape(b, n, *features.shape[1:])
        fused = torch.stack(
            [self.fuse(volumes[i], features[i])[0] for i in range(b)]
        )
        return self.refine(fused)

    def param_count(self) -> int:
        return sum(p.numel() for p in self.parameters())
