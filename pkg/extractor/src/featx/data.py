"""Image-folder discovery and deterministic batch loading.

Two layouts are understood. A directory whose subdirectories contain
images is treated as labeled, one class per subdirectory, with class ids
assigned by sorted directory name. A directory holding images directly is
unlabeled. Ordering is always sorted (class name, then file name), so the
row order of the output never depends on filesystem enumeration.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
import torch
from PIL import Image

from .errors import DatasetError

IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg", ".bmp")

# channel statistics the torchvision backbones were trained with
IMAGENET_MEAN = (0.485, 0.456, 0.406)
IMAGENET_STD = (0.229, 0.224, 0.225)


def _images_in(directory: Path) -> list[Path]:
    return sorted(
        p for p in directory.iterdir()
        if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES
    )


def discover(root: str | Path) -> tuple[list[Path], np.ndarray | None, list[str]]:
    """(image paths, labels or None, class names) for a dataset directory."""
    root = Path(root)
    if not root.is_dir():
        raise DatasetError(f"dataset directory not found: {root}")

    class_dirs = [d for d in sorted(root.iterdir()) if d.is_dir() and _images_in(d)]
    if class_dirs:
        paths: list[Path] = []
        labels: list[int] = []
        for label, class_dir in enumerate(class_dirs):
            members = _images_in(class_dir)
            paths.extend(members)
            labels.extend([label] * len(members))
        return paths, np.asarray(labels, dtype=np.int32), [d.name for d in class_dirs]

    paths = _images_in(root)
    if not paths:
        raise DatasetError(f"no images under {root} (looked for {', '.join(IMAGE_SUFFIXES)})")
    return paths, None, []


def load_batch(paths: list[Path], image_size: int) -> torch.Tensor:
    """Decode, resize, and normalize a batch into an (N, 3, H, W) tensor."""
    mean = torch.tensor(IMAGENET_MEAN).view(3, 1, 1)
    std = torch.tensor(IMAGENET_STD).view(3, 1, 1)
    tensors = []
    for path in paths:
        try:
            with Image.open(path) as img:
                rgb = img.convert("RGB").resize((image_size, image_size), Image.BILINEAR)
        except OSError as exc:
            raise DatasetError(f"cannot read image {path}: {exc}") from exc
        array = np.asarray(rgb, dtype=np.float32) / 255.0
        tensor = torch.from_numpy(array).permute(2, 0, 1)
        tensors.append((tensor - mean) / std)
    return torch.stack(tensors)
