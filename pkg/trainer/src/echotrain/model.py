"""ResNet-18 count regressor with a non-negative two-output head."""

from __future__ import annotations

import torch
import torch.nn.functional as F
from torch import nn
from torchvision.models import resnet18


class CountRegressor(nn.Module):
    """ResNet-18 trunk, final FC with two outputs, ReLU after the head.

    The ReLU makes non-negativity architectural: counts cannot go below zero
    for any input. 2-channel echogram inputs are adapted to the backbone's
    3-channel stem by appending a zero third channel.
    """

    def __init__(self, pretrained: bool = False):
        super().__init__()
        weights = None
        if pretrained:
            from torchvision.models import ResNet18_Weights

            weights = ResNet18_Weights.IMAGENET1K_V1
        self.backbone = resnet18(weights=weights)
        self.backbone.fc = nn.Linear(self.backbone.fc.in_features, 2)
        # positive bias keeps the ReLU head's initial pre-activations above
        # zero, so positive-count outputs start with live gradients
        nn.init.constant_(self.backbone.fc.bias, 1.0)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        if x.shape[1] == 2:
            pad = torch.zeros_like(x[:, :1])
            x = torch.cat([x, pad], dim=1)
        return F.relu(self.backbone(x))
