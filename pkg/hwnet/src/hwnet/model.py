"""Toy word-image classifier: five conv blocks and three FC layers.

Full-scale filter widths (64, 128, 256, 512, 512 convs; 2048-wide FC)
divided by 8, batch normalization after every convolution, 2x2 max pooling
after the first three blocks, ReLU after every weight layer except the
classifier. Inputs are 48x128 grayscale.
"""

from __future__ import annotations

import torch
from torch import nn

WIDTH_DIVISOR = 8
CONV_WIDTHS = tuple(w // WIDTH_DIVISOR for w in (64, 128, 256, 512, 512))
CONV_KERNELS = (5, 5, 3, 3, 3)
FC_WIDTH = 2048 // WIDTH_DIVISOR


class HWNet(nn.Module):
    def __init__(self, num_classes: int):
        super().__init__()
        blocks = []
        in_channels = 1
        for k, (width, kernel) in enumerate(zip(CONV_WIDTHS, CONV_KERNELS)):
            blocks.append(
                nn.Conv2d(in_channels, width, kernel, stride=1, padding=kernel // 2)
            )
            blocks.append(nn.BatchNorm2d(width))
            blocks.append(nn.ReLU(inplace=True))
            if k < 3:
                blocks.append(nn.MaxPool2d(2))
            in_channels = width
        self.features = nn.Sequential(*blocks)
        flat = CONV_WIDTHS[-1] * (48 // 8) * (128 // 8)
        self.fc1 = nn.Linear(flat, FC_WIDTH)
        self.fc2 = nn.Linear(FC_WIDTH, FC_WIDTH)
        self.classifier = nn.Linear(FC_WIDTH, num_classes)
        self.relu = nn.ReLU(inplace=False)

    def hidden(self, x: torch.Tensor) -> torch.Tensor:
        """Pre-activation output of the last hidden FC layer."""
        z = self.features(x)
        z = torch.flatten(z, 1)
        z = self.relu(self.fc1(z))
        return self.fc2(z)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.classifier(self.relu(self.hidden(x)))


def normalize_images(images) -> torch.Tensor:
    """uint8 (N, 48, 128) -> float tensor (N, 1, 48, 128) in [-1, 1]."""
    tensor = torch.as_tensor(images, dtype=torch.float32).unsqueeze(1)
    return tensor / 127.5 - 1.0
