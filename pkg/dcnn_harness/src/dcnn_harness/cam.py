"""Class activation maps from the global-average-pool + linear head."""

from __future__ import annotations

import numpy as np
import torch
import torch.nn.functional as F


def cam_map(
    model: torch.nn.Module,
    image: torch.Tensor,
    class_idx: int,
    normalize: bool = True,
) -> np.ndarray:
    """Spatial evidence for one class, upsampled to the input resolution.

    The final feature maps are weighted by the class's head weights and
    summed, bilinearly upsampled to the input's spatial shape, then min-max
    normalized into [0,1]; a (near-)constant map comes back as zeros rather
    than amplifying numerical noise. With normalize=False the raw weighted
    sum is returned.
    """
    if image.dim() != 3:
        raise ValueError(f"expected a (3, H, W) image tensor, got {tuple(image.shape)}")
    n_classes = model.classifier.out_features
    if not (0 <= class_idx < n_classes):
        raise IndexError(f"class index {class_idx} out of range [0, {n_classes})")
    model.eval()
    with torch.no_grad():
        features = F.relu(model.features(image.unsqueeze(0)))  # (1, C, h, w)
        weights = model.classifier.weight[class_idx]  # (C,)
        raw = torch.einsum("chw,c->hw", features[0], weights)
        upsampled = F.interpolate(
            raw.unsqueeze(0).unsqueeze(0),
            size=image.shape[-2:],
            mode="bilinear",
            align_corners=False,
        )[0, 0]
    out = upsampled.numpy().astype(np.float64)
    if not normalize:
        return out
    span = out.max() - out.min()
    if span < 1e-6:
        return np.zeros_like(out)
    return (out - out.min()) / span
