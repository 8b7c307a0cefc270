"""Model construction and the training protocol.

The classifier is DenseNet-121: every layer inside a dense block receives the
concatenated feature maps of all preceding layers. The stock torchvision
topology is used unchanged (grayscale tiles are replicated to three channels
at load), with an 8-way head; its global-average-pool + linear head is what
makes class activation mapping possible.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
import torch.nn.functional as F
from torchvision.models import densenet121

N_CLASSES = 8


@dataclass
class TrainProtocol:
    input_size: int = 80
    batch_size: int = 64
    epochs: int = 100
    lr: float = 0.1
    lr_step: int = 30  # multiply lr by lr_gamma every lr_step epochs
    lr_gamma: float = 0.1
    momentum: float = 0.9  # not stated by the protocol source; documented default
    weight_decay: float = 1e-4  # likewise a documented default
    seed: int = 0

    def validate(self) -> None:
        if min(self.input_size, self.batch_size, self.epochs, self.lr_step) < 1:
            raise ValueError("protocol sizes must be positive")
        if self.lr <= 0 or not (0 < self.lr_gamma <= 1):
            raise ValueError("bad learning-rate schedule")

    @property
    def milestones(self) -> list[int]:
        return [e for e in range(self.lr_step, self.epochs, self.lr_step)]


def build_model(num_classes: int = N_CLASSES) -> torch.nn.Module:
    return densenet121(weights=None, num_classes=num_classes)


def embed(model: torch.nn.Module, x: torch.Tensor) -> torch.Tensor:
    """Global-average-pooled final feature maps, (N, 1024).

    Mirrors the model's own forward up to the classifier, so these embeddings
    are exactly what the linear head scores.
    """
    features = model.features(x)
    out = F.relu(features, inplace=False)
    return F.adaptive_avg_pool2d(out, (1, 1)).flatten(1)
