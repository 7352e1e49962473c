"""Attack-detection head: a thin classifier over early convolutional features.

Injected row bands are a low-level texture, so a single trainable
convolution (32 filters, leaky ReLU, dropout) over a frozen first-conv
feature map, followed by global max pooling and a binary readout, separates
corrupted from clean frames.  Backbone taps:

* ``random`` (default) — a frozen, seed-initialized 16-filter conv with
  stride 2; the offline stand-in for a pretrained first layer.
* ``torchvision:mobilenet_v3_large`` — ``features[0][0]`` (16ch, stride 2).
* ``torchvision:vgg16`` — ``features[0]`` plus the following max pool.
* ``torchvision:resnet50`` — ``conv1`` plus its max pool.

The torchvision taps need an explicit checkpoint path.  Training follows
the reference recipe: Adam, learning rate 1e-4, 10 epochs, train/val/test
split 60/20/20 over base frames (a frame and its corrupted twin always land
in the same split).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
from torch import nn

from rollsim_ml.interchange import (
    list_frame_files,
    load_patterns,
    overlay_pattern,
    read_frame,
    resize_frame,
)

__all__ = ["TrainConfig", "RsDetectionHead", "build_dataset", "train_rs_detector"]

MIN_BASE_FRAMES = 50


@dataclass(frozen=True)
class TrainConfig:
    clean_dir: Path
    patterns_path: Path
    out_dir: Path
    epochs: int = 10
    learning_rate: float = 1e-4
    batch_size: int = 32
    seed: int = 0
    shuffle_labels: bool = False
    backbone: str = "random"
    backbone_weights: Path | None = None
    train_width: int | None = None
    train_height: int | None = None


class RsDetectionHead(nn.Module):
    """Frozen stem -> conv(32) -> leaky ReLU -> dropout -> GMP -> logit."""

    def __init__(self, stem: nn.Module, stem_channels: int):
        super().__init__()
        self.stem = stem
        for p in self.stem.parameters():
            p.requires_grad_(False)
        self.conv = nn.Conv2d(stem_channels, 32, 3, stride=2, padding=1)
        self.drop = nn.Dropout(0.25)
        self.fc = nn.Linear(32, 1)

    def forward(self, x):
        x = nn.functional.leaky_relu(self.stem(x))
        x = nn.functional.leaky_relu(self.conv(x))
        x = self.drop(x)
        x = x.amax(dim=(2, 3))
        return self.fc(x).squeeze(1)


def _make_stem(config: TrainConfig) -> tuple[nn.Module, int, str]:
    if config.backbone == "random":
        stem = nn.Conv2d(3, 16, 3, stride=2, padding=1, bias=False)
        return stem, 16, "random frozen conv (3->16, stride 2)"
    if not config.backbone.startswith("torchvision:"):
        raise ValueError(f"unknown backbone {config.backbone!r}")
    if config.backbone_weights is None or not Path(config.backbone_weights).exists():
        raise RuntimeError(
            f"backbone {config.backbone} needs --backbone-weights pointing at a local "
            f"checkpoint; offline runs can use --backbone random"
        )
    import torchvision.models as tvm

    arch = config.backbone.split(":", 1)[1]
    state = torch.load(config.backbone_weights, map_location="cpu")
    if arch == "mobilenet_v3_large":
        net = tvm.mobilenet_v3_large()
        net.load_state_dict(state)
        return net.features[0][0], 16, "mobilenet_v3_large features[0][0]"
    if arch == "vgg16":
        net = tvm.vgg16()
        net.load_state_dict(state)
        stem = nn.Sequential(net.features[0], nn.MaxPool2d(2))
        return stem, 64, "vgg16 features[0] + max pool"
    if arch == "resnet50":
        net = tvm.resnet50()
        net.load_state_dict(state)
        stem = nn.Sequential(net.conv1, net.maxpool)
        return stem, 64, "resnet50 conv1 + max pool"
    raise ValueError(f"unsupported backbone arch {arch!r}")


def build_dataset(config: TrainConfig) -> tuple[np.ndarray, np.ndarray]:
    """(clean, corrupted) uint8 stacks from the frame dir and pattern file."""
    frame_files = list_frame_files(config.clean_dir)
    if len(frame_files) < MIN_BASE_FRAMES:
        raise ValueError(
            f"corpus too small: {len(frame_files)} base frames, need at least "
            f"{MIN_BASE_FRAMES} (2x that after corruption)"
        )
    _, patterns = load_patterns(config.patterns_path)
    if not patterns:
        raise ValueError(f"pattern file {config.patterns_path} has no frames")

    clean, corrupted = [], []
    for i, (_, path) in enumerate(frame_files):
        px = read_frame(path)
        bad = overlay_pattern(px, patterns[i % len(patterns)])
        if config.train_width and config.train_height:
            px = resize_frame(px, config.train_width, config.train_height)
            bad = resize_frame(bad, config.train_width, config.train_height)
        clean.append(px)
        corrupted.append(bad)
    return np.stack(clean), np.stack(corrupted)


def _to_tensor(frames: np.ndarray) -> torch.Tensor:
    return torch.from_numpy(frames).permute(0, 3, 1, 2).float() / 255.0


def train_rs_detector(config: TrainConfig) -> dict:
    """Train the head and report test accuracy / FN / FP at threshold 0.5."""
    torch.manual_seed(config.seed)
    torch.use_deterministic_algorithms(True)

    clean, corrupted = build_dataset(config)
    n = len(clean)
    rng = np.random.default_rng(config.seed)
    order = rng.permutation(n)
    n_train, n_val = int(0.6 * n), int(0.2 * n)
    split_ids = {
        "train": order[:n_train],
        "val": order[n_train : n_train + n_val],
        "test": order[n_train + n_val :],
    }

    def make_xy(ids):
        x = _to_tensor(np.concatenate([clean[ids], corrupted[ids]]))
        y = torch.cat([torch.zeros(len(ids)), torch.ones(len(ids))])
        return x, y

    x_train, y_train = make_xy(split_ids["train"])
    x_val, y_val = make_xy(split_ids["val"])
    x_test, y_test = make_xy(split_ids["test"])
    if config.shuffle_labels:
        perm = torch.from_numpy(rng.permutation(len(y_train)))
        y_train = y_train[perm]

    stem, stem_channels, tap = _make_stem(config)
    model = RsDetectionHead(stem, stem_channels)
    opt = torch.optim.Adam(
        [p for p in model.parameters() if p.requires_grad], lr=config.learning_rate
    )
    loss_fn = nn.BCEWithLogitsLoss()

    history = []
    for epoch in range(config.epochs):
        model.train()
        perm = torch.randperm(len(x_train), generator=torch.Generator().manual_seed(
            config.seed * 1000 + epoch))
        epoch_loss = 0.0
        for b in range(0, len(x_train), config.batch_size):
            ids = perm[b : b + config.batch_size]
            opt.zero_grad()
            loss = loss_fn(model(x_train[ids]), y_train[ids])
            loss.backward()
            opt.step()
            epoch_loss += float(loss) * len(ids)
        model.eval()
        with torch.no_grad():
            val_acc = float(
                ((torch.sigmoid(model(x_val)) >= 0.5).float() == y_val).float().mean()
            )
        history.append({"epoch": epoch, "train_loss": epoch_loss / len(x_train), "val_acc": val_acc})

    model.eval()
    with torch.no_grad():
        preds = (torch.sigmoid(model(x_test)) >= 0.5).float()
    accuracy = float((preds == y_test).float().mean())
    fn = int(((preds == 0) & (y_test == 1)).sum())
    fp = int(((preds == 1) & (y_test == 0)).sum())

    report = {
        "accuracy": accuracy,
        "false_negatives": fn,
        "false_positives": fp,
        "n_test": len(y_test),
        "threshold": 0.5,
        "epochs": config.epochs,
        "learning_rate": config.learning_rate,
        "batch_size": config.batch_size,
        "seed": config.seed,
        "label_shuffled": config.shuffle_labels,
        "backbone_tap": tap,
        "split": {k: len(v) for k, v in split_ids.items()},
        "history": history,
    }
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    torch.save(model.state_dict(), out / "rs_head.pt")
    with open(out / "report.json", "w") as fh:
        json.dump(report, fh, indent=1)
    return report
