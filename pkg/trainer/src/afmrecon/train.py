"""Training loop, evaluation, checkpointing, and prediction export."""

import argparse
import json
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import torch
import torch.nn.functional as F

from .data import Bundle, load_bundle
from .errors import InvalidConfig
from .model import ModelConfig, ReconNet
from .voxio import write_voxels

IOU_THRESHOLD = 0.4
CHECKPOINT_NAME = "model.pt"
REPORT_NAME = "train_report.json"


@dataclass
class EpochStats:
    epoch: int
    train_loss: float
    train_iou: float
    val_iou: float


@dataclass
class TrainReport:
    config: dict
    param_count: int
    epochs_run: int
    history: list[EpochStats] = field(default_factory=list)
    split_iou: dict[str, float] = field(default_factory=dict)
    split_iou_by_views: dict[str, dict[str, float]] = field(default_factory=dict)
    elapsed_seconds: float = 0.0
    stopped_early: bool = False

    def to_json(self) -> str:
        payload = asdict(self)
        return json.dumps(payload, indent=2, sort_keys=True)


def voxel_iou(pred: torch.Tensor, truth: torch.Tensor, threshold: float = IOU_THRESHOLD) -> float:
    """Intersection over union of thresholded prediction vs binary truth."""
    p = pred >= threshold
    t = truth >= 0.5
    union = (p | t).sum().item()
    if union == 0:
        return 1.0
    return ((p & t).sum().item()) / union


def _batched(indices: list[int], size: int):
    for start in range(0, len(indices), size):
        yield indices[start : start + size]


def _init_occupancy_prior(model: ReconNet, bundle: Bundle, train_idx: list[int]) -> None:
    """Start decoder outputs at the train set's mean occupancy.

    Class-prior bias initialization: with sparse targets a zero-bias head
    spends its first epochs learning the base rate before anything
    shape-specific, so seed the head bias with logit(occupancy) instead.
    """
    occupancy = float(np.mean([bundle.truths[i].mean() for i in train_idx]))
    occupancy = min(max(occupancy, 1e-3), 1 - 1e-3)
    prior = float(np.log(occupancy / (1.0 - occupancy)))
    with torch.no_grad():
        model.decoder.head.bias.fill_(prior)


def _sample_batch(
    bundle: Bundle,
    batch: list[int],
    view_orders: dict[int, np.ndarray] | None,
    device: torch.device,
    n_views: int | None = None,
) -> tuple[torch.Tensor, torch.Tensor]:
    images = []
    truths = []
    for idx in batch:
        views = bundle.images[idx]
        if view_orders is not None:
            views = views[view_orders[idx]]
        if n_views is not None:
            views = views[:n_views]
        images.append(torch.from_numpy(np.ascontiguousarray(views)))
        truths.append(torch.from_numpy(bundle.truths[idx]))
    return torch.stack(images).to(device), torch.stack(truths).to(device)


def evaluate(
    model: ReconNet,
    bundle: Bundle,
    indices: list[int],
    device: torch.device,
    batch_size: int,
    n_views: int | None = None,
) -> float:
    """Mean IoU of the model over the given sample indices."""
    if not indices:
        return float("nan")
    model.eval()
    total = 0.0
    with torch.no_grad():
        for batch in _batched(indices, batch_size):
            images, truths = _sample_batch(bundle, batch, None, device, n_views)
            preds = model.forward_batch(images)
            for i in range(len(batch)):
                total += voxel_iou(preds[i], truths[i])
    return total / len(indices)


def train(
    dataset_root,
    out_dir,
    config: ModelConfig | None = None,
    *,
    stop_at_train_iou: float | None = None,
    progress=None,
) -> TrainReport:
    """Fit the network on a generated dataset and write report plus checkpoint.

    The per-epoch ordering of samples and of each sample's views is drawn
    from a torch generator seeded by config.seed, so a repeated run with
    the same config on the same dataset follows the same schedule.
    """
    config = config or ModelConfig()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    say = progress or (lambda msg: None)

    bundle = load_bundle(dataset_root)
    train_idx = bundle.indices_for("train")
    val_idx = bundle.indices_for("val")
    if not train_idx:
        raise InvalidConfig("dataset has no train entries")
    available_views = min(img.shape[0] for img in bundle.images)
    if config.n_views is not None and config.n_views > available_views:
        raise InvalidConfig(
            f"config asks for {config.n_views} views but an entry has "
            f"only {available_views}"
        )
    use_views = config.n_views

    device = torch.device("cpu")
    torch.manual_seed(config.seed)
    model = ReconNet(config).to(device)
    _init_occupancy_prior(model, bundle, train_idx)
    optimizer = torch.optim.Adam(model.parameters(), lr=config.learning_rate)
    schedule_rng = torch.Generator().manual_seed(config.seed)

    report = TrainReport(
        config=asdict(config), param_count=model.param_count(), epochs_run=0
    )
    say(f"model has {report.param_count} parameters")
    start = time.monotonic()

    for epoch in range(config.epochs):
        order = torch.randperm(len(train_idx), generator=schedule_rng).tolist()
        shuffled = [train_idx[i] for i in order]
        view_orders = {
            idx: torch.randperm(
                bundle.images[idx].shape[0], generator=schedule_rng
            ).numpy()
            for idx in shuffled
        }

        model.train()
        loss_sum = 0.0
        for batch in _batched(shuffled, config.batch_size):
            images, truths = _sample_batch(
                bundle, batch, view_orders, device, use_views
            )
            optimizer.zero_grad()
            preds = model.forward_batch(images)
            loss = F.binary_cross_entropy(preds, truths)
            loss.backward()
            optimizer.step()
            loss_sum += loss.item() * len(batch)

        train_loss = loss_sum / len(train_idx)
        train_iou = evaluate(
            model, bundle, train_idx, device, config.batch_size, use_views
        )
        val_iou = evaluate(
            model, bundle, val_idx, device, config.batch_size, use_views
        )
        report.history.append(
            EpochStats(epoch=epoch, train_loss=train_loss, train_iou=train_iou, val_iou=val_iou)
        )
        report.epochs_run = epoch + 1
        say(
            f"epoch {epoch}: loss {train_loss:.4f} "
            f"train IoU {train_iou:.4f} val IoU {val_iou:.4f}"
        )
        if stop_at_train_iou is not None and train_iou >= stop_at_train_iou:
            report.stopped_early = True
            say(f"reached train IoU {train_iou:.4f}, stopping")
            break

    if report.epochs_run > 0:
        max_views = use_views or available_views
        for split, indices in (("train", train_idx), ("val", val_idx)):
            if not indices:
                continue
            report.split_iou[split] = evaluate(
                model, bundle, indices, device, config.batch_size, use_views
            )
            report.split_iou_by_views[split] = {
                str(k): evaluate(model, bundle, indices, device, config.batch_size, k)
                for k in range(1, max_views + 1)
            }
        torch.save(
            {"config": asdict(config), "state": model.state_dict()},
            out_dir / CHECKPOINT_NAME,
        )
    report.elapsed_seconds = time.monotonic() - start
    (out_dir / REPORT_NAME).write_text(report.to_json())
    return report


def load_checkpoint(path) -> ReconNet:
    payload = torch.load(path, map_location="cpu", weights_only=False)
    model = ReconNet(ModelConfig(**payload["config"]))
    model.load_state_dict(payload["state"])
    model.eval()
    return model


def export_predictions(
    model: ReconNet,
    bundle: Bundle,
    out_dir,
    threshold: float = IOU_THRESHOLD,
) -> list[Path]:
    """Write one binarized prediction volume per dataset entry.

    Files are named {protein_id}_rep{repetition}.afmv, the layout the
    dataset tooling's evaluation command expects.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    model.eval()
    written = []
    with torch.no_grad():
        for i, entry in enumerate(bundle.entries):
            images = torch.from_numpy(bundle.images[i])
            pred = model(images)
            values = (pred.numpy() >= threshold).astype(np.uint8)
            path = out_dir / f"{entry.protein_id}_rep{entry.repetition}.afmv"
            write_voxels(path, values)
            written.append(path)
    return written


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="afmrecon", description="Train the multi-view reconstruction network."
    )
    parser.add_argument("dataset", help="dataset root with manifest.jsonl")
    parser.add_argument("out", help="output directory for report and checkpoint")
    parser.add_argument("--epochs", type=int, default=150)
    parser.add_argument("--lr", type=float, default=0.001)
    parser.add_argument("--batch-size", type=int, default=32)
    parser.add_argument("--width", type=float, default=1.0)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument(
        "--n-views", type=int, default=None,
        help="views per sample (default: all views in each entry)",
    )
    parser.add_argument(
        "--stop-at-train-iou", type=float, default=None,
        help="halt once train IoU reaches this value",
    )
    args = parser.parse_args(argv)

    config = ModelConfig(
        n_views=args.n_views,
        epochs=args.epochs,
        learning_rate=args.lr,
        batch_size=args.batch_size,
        width=args.width,
        seed=args.seed,
    )
    report = train(
        args.dataset,
        args.out,
        config,
        stop_at_train_iou=args.stop_at_train_iou,
        progress=print,
    )
    print(f"done in {report.elapsed_seconds:.1f}s, split IoU {report.split_iou}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
