"""Shared fixtures: a synthetic image tree and a saved backbone state dict."""

import numpy as np
import pytest
import torch
from PIL import Image

from featx import build_backbone


def write_images(directory, count, rng, size=(48, 48)):
    directory.mkdir(parents=True, exist_ok=True)
    for i in range(count):
        pixels = rng.integers(0, 256, size=(*size, 3), dtype=np.uint8)
        Image.fromarray(pixels).save(directory / f"img_{i:02d}.png")


@pytest.fixture(scope="session")
def dataset(tmp_path_factory):
    """Two labeled classes of different sizes plus a flat unlabeled folder."""
    root = tmp_path_factory.mktemp("images")
    rng = np.random.default_rng(11)
    write_images(root / "train" / "class_a", 4, rng)
    write_images(root / "train" / "class_b", 3, rng)
    write_images(root / "flat", 3, rng)
    return root


@pytest.fixture(scope="session")
def weights_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("weights") / "resnet18.pt"
    torch.save(build_backbone("resnet18").state_dict(), path)
    return path
