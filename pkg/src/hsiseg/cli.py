"""Operator command surface: bands, train, infer, eval, rank, bench, export-info.

Exit codes: 0 success, 1 domain error (bad shapes, infeasible architectures,
malformed binary content), 2 usage or I/O error.  Benchmark timings cover
in-memory inference only (flatten/patch, forward, argmax, stitch); file and
weight loading are excluded.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from . import bands, metrics, nn, ranking, weightio
from .cube import (
    HsiCube,
    NormStats,
    drop_channels,
    extract_patches,
    flatten_pixels,
    load_cube,
    load_labels,
    load_norm_stats,
    minmax_apply,
    minmax_fit,
    pad_to_multiple,
    save_cube,
    save_labels,
    save_norm_stats,
    select_channels,
    stitch_labels,
)
from .nn import ModelSpec, WeightBundle
from .training import TrainConfig, fit
from . import architectures

PATCH_SIZE = 48
PIXEL_CHUNK = 16384
PATCH_CHUNK = 8


# ---------------------------------------------------------------------------
# Shared pipeline helpers (also the library-level entry points for scripts).
# ---------------------------------------------------------------------------


def apply_channel_config(cube: HsiCube, drop: list[int] | None, select: list[int] | None) -> HsiCube:
    if drop:
        cube = drop_channels(cube, drop)
    if select:
        cube = select_channels(cube, select)
    return cube


def infer_cube(
    spec: ModelSpec, weights: WeightBundle, cube: HsiCube, patch_size: int = PATCH_SIZE
) -> tuple[np.ndarray, np.ndarray]:
    """Per-pixel (labels, probabilities) at the cube's original spatial dims."""
    if cube.channels != spec.in_channels:
        raise ValueError(
            f"cube has {cube.channels} channels but the model expects {spec.in_channels}"
        )
    if spec.is_2d:
        padded, pad = pad_to_multiple(cube, patch_size)
        patches = extract_patches(padded, patch_size)
        probs_tiles = np.concatenate([
            nn.forward(spec, weights, patches[i : i + PATCH_CHUNK])
            for i in range(0, len(patches), PATCH_CHUNK)
        ])
        label_tiles = probs_tiles.argmax(axis=-1).astype(np.uint8)
        labels = stitch_labels(label_tiles, pad)
        probs = np.stack(
            [stitch_labels(probs_tiles[..., k], pad) for k in range(spec.classes)], axis=-1
        )
        return labels, probs
    pixels = flatten_pixels(cube)
    probs_flat = np.concatenate([
        nn.forward(spec, weights, pixels[i : i + PIXEL_CHUNK])
        for i in range(0, len(pixels), PIXEL_CHUNK)
    ])
    labels = probs_flat.argmax(axis=-1).astype(np.uint8).reshape(cube.height, cube.width)
    probs = probs_flat.reshape(cube.height, cube.width, spec.classes)
    return labels, probs


def _load_dataset_dir(directory: Path) -> list[tuple[HsiCube, np.ndarray]]:
    """Paired <stem>.hsc / <stem>.lbl files, sorted by stem."""
    pairs = []
    for hsc in sorted(directory.glob("*.hsc")):
        lbl = hsc.with_suffix(".lbl")
        if not lbl.exists():
            raise FileNotFoundError(f"no label file for {hsc}")
        pairs.append((load_cube(hsc), load_labels(lbl)))
    if not pairs:
        raise FileNotFoundError(f"no .hsc cubes found in {directory}")
    return pairs


def _prepare_split(
    pairs: list[tuple[HsiCube, np.ndarray]],
    is_2d: bool,
    stats: NormStats,
    patch_size: int,
) -> tuple[np.ndarray, np.ndarray]:
    xs, ys = [], []
    for cube, labels in pairs:
        if labels.shape != (cube.height, cube.width):
            raise ValueError("label map does not match cube spatial dims")
        cube = minmax_apply(cube, stats)
        if is_2d:
            padded, pad = pad_to_multiple(cube, patch_size)
            ph, pw = pad.padded_height, pad.padded_width
            lab = np.pad(labels, ((0, ph - pad.height), (0, pw - pad.width)), mode="edge")
            xs.append(extract_patches(padded, patch_size))
            lab_cube = HsiCube(lab[:, :, None].astype(np.float32))
            ys.append(extract_patches(lab_cube, patch_size)[..., 0].astype(np.int64))
        else:
            xs.append(flatten_pixels(cube))
            ys.append(labels.reshape(-1).astype(np.int64))
    return np.concatenate(xs), np.concatenate(ys)


def parse_train_config(path: Path) -> dict:
    values: dict[str, str] = {}
    for line in path.read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, _, val = line.partition("=")
        values[key.strip()] = val.strip()
    required = {"arch", "channels", "classes", "epochs", "batch"}
    missing = required - set(values)
    if missing:
        raise ValueError(f"train config missing keys: {sorted(missing)}")
    return {
        "arch": values["arch"],
        "channels": int(values["channels"]),
        "classes": int(values["classes"]),
        "config": TrainConfig(
            epochs=int(values["epochs"]),
            batch_size=int(values["batch"]),
            lr=float(values.get("lr", 1e-3)),
            beta1=float(values.get("beta1", 0.9)),
            beta2=float(values.get("beta2", 0.999)),
            epsilon=float(values.get("epsilon", 1e-7)),
            seed=int(values.get("seed", 0)),
        ),
    }


# ---------------------------------------------------------------------------
# Subcommands.
# ---------------------------------------------------------------------------


def _int_list(text: str) -> list[int]:
    return [int(t) for t in text.split(",") if t.strip() != ""]


def cmd_bands(args) -> int:
    cube_dir = Path(args.cube_dir)
    cubes = [load_cube(p) for p in sorted(cube_dir.glob("*.hsc"))]
    if not cubes:
        raise FileNotFoundError(f"no .hsc cubes found in {cube_dir}")
    stats = bands.channel_std(cubes)
    model = bands.iforest_fit(
        stats.stds, trees=args.trees, subsample=args.subsample, seed=args.seed
    )
    flagged = set(bands.iforest_flag(model, stats.stds, args.contamination))
    wavelengths = next((c.wavelengths for c in cubes if c.wavelengths is not None), None)

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    lines = ["channel,wavelength,std,flagged"]
    for ch in range(stats.channels):
        wl = f"{wavelengths[ch]:.2f}" if wavelengths is not None else ""
        lines.append(f"{ch},{wl},{stats.stds[ch]:.6g},{int(ch in flagged)}")
    (out_dir / "channel_report.csv").write_text("\n".join(lines) + "\n")
    drop = sorted(flagged)
    keep = [c for c in range(stats.channels) if c not in flagged]
    (out_dir / "drop_list.txt").write_text(",".join(map(str, drop)) + "\n")
    (out_dir / "keep_list.txt").write_text(",".join(map(str, keep)) + "\n")
    print(f"flagged {len(drop)} of {stats.channels} channels: {','.join(map(str, drop))}")
    return 0


def cmd_train(args) -> int:
    cfg = parse_train_config(Path(args.config))
    spec = architectures.build(cfg["arch"], cfg["channels"], cfg["classes"])

    train_pairs = _load_dataset_dir(Path(args.train_dir))
    drop = _int_list(args.drop_channels) if args.drop_channels else None
    select = _int_list(args.select_channels) if args.select_channels else None
    train_pairs = [(apply_channel_config(c, drop, select), l) for c, l in train_pairs]
    stats = minmax_fit([c for c, _ in train_pairs])
    if stats.channels != cfg["channels"]:
        raise ValueError(
            f"training cubes have {stats.channels} channels after drops/selections, "
            f"config declares {cfg['channels']}"
        )
    x, y = _prepare_split(train_pairs, spec.is_2d, stats, args.patch)
    validation = None
    if args.val_dir:
        val_pairs = _load_dataset_dir(Path(args.val_dir))
        val_pairs = [(apply_channel_config(c, drop, select), l) for c, l in val_pairs]
        validation = _prepare_split(val_pairs, spec.is_2d, stats, args.patch)

    weights, history = fit(spec, x, y, cfg["config"], validation)
    weightio.save_weights(spec, weights, args.out, architecture=cfg["arch"])
    if args.norm_stats_out:
        save_norm_stats(stats, args.norm_stats_out)
    history_path = Path(args.history_out) if args.history_out else Path(args.out).with_suffix(".history.csv")
    rows = ["epoch,loss,train_acc,val_acc"]
    for e in range(len(history.losses)):
        rows.append(
            f"{e + 1},{history.losses[e]:.6f},{history.train_acc[e]:.6f},{history.val_acc[e]:.6f}"
        )
    history_path.write_text("\n".join(rows) + "\n")
    print(f"trained {cfg['arch']}: final train acc {history.train_acc[-1]:.4f}")
    return 0


def _load_model_and_cube(args) -> tuple[ModelSpec, WeightBundle, HsiCube]:
    header, weights = weightio.load_weights(args.weights)
    if header.architecture in weightio.BASELINE_KINDS:
        raise ValueError("infer/bench expect a CNN weight file, not a baseline model")
    spec = architectures.build(header.architecture, header.in_channels, header.classes)
    cube = load_cube(args.cube)
    drop = _int_list(args.drop_channels) if args.drop_channels else None
    select = _int_list(args.select_channels) if args.select_channels else None
    cube = apply_channel_config(cube, drop, select)
    if args.norm_stats:
        cube = minmax_apply(cube, load_norm_stats(args.norm_stats))
    return spec, weights, cube


def cmd_infer(args) -> int:
    spec, weights, cube = _load_model_and_cube(args)
    labels, probs = infer_cube(spec, weights, cube)
    save_labels(labels, args.out)
    if args.probs_out:
        save_cube(HsiCube(probs.astype(np.float32)), args.probs_out)
    print(f"wrote {labels.shape[0]}x{labels.shape[1]} label map to {args.out}")
    return 0


def cmd_eval(args) -> int:
    pred = load_labels(args.pred)
    truth = load_labels(args.truth)
    report = metrics.metrics_report(pred, truth)
    lines = ["metric,class,value"]
    lines += [f"{m},{c},{v:.6f}" for m, c, v in report.as_rows()]
    text = "\n".join(lines)
    print(text)
    if args.out:
        Path(args.out).write_text(text + "\n")
    return 0


def cmd_rank(args) -> int:
    labels_dir = Path(args.labels_dir)
    files = sorted(labels_dir.glob("*.lbl"))
    if not files:
        raise FileNotFoundError(f"no .lbl maps found in {labels_dir}")
    config = ranking.load_ranker_config(args.config)
    reports = [ranking.coverage(load_labels(p), p.stem) for p in files]
    by_id = {r.image_id: r for r in reports}

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    queue_lines = ["position,image_id,criterion,coverage"]
    for criterion in ranking.CRITERIA:
        queue = ranking.rank(reports, criterion)
        for pos, image_id in enumerate(queue.image_ids):
            cov = by_id[image_id].by_criterion(criterion)
            queue_lines.append(f"{pos},{image_id},{criterion},{cov:.6f}")
    (out_dir / "queues.csv").write_text("\n".join(queue_lines) + "\n")
    action_lines = ["image_id,segment,action"]
    for r in reports:
        for segment, action in ranking.decide_actions(r, config).items():
            action_lines.append(f"{r.image_id},{segment},{action}")
    (out_dir / "actions.csv").write_text("\n".join(action_lines) + "\n")
    print(f"ranked {len(reports)} images under {len(ranking.CRITERIA)} criteria")
    return 0


def cmd_bench(args) -> int:
    spec, weights, cube = _load_model_and_cube(args)
    times_ms = []
    for _ in range(args.repeats):
        t0 = time.perf_counter()
        infer_cube(spec, weights, cube)
        times_ms.append((time.perf_counter() - t0) * 1e3)
    mean = sum(times_ms) / len(times_ms)
    lines = ["repeat,ms"] + [f"{i},{t:.3f}" for i, t in enumerate(times_ms)]
    lines.append(f"mean,{mean:.3f}")
    text = "\n".join(lines)
    print(text)
    if args.out:
        Path(args.out).write_text(text + "\n")
    return 0


def cmd_export_info(args) -> int:
    header, bundle = weightio.load_weights(args.weights)
    print(f"architecture: {header.architecture}")
    print(f"input channels: {header.in_channels}")
    print(f"classes: {header.classes}")
    total = 0
    for name in bundle.names():
        shape = tuple(bundle[name].shape)
        count = int(np.prod(shape))
        total += count
        print(f"  {name}  shape={shape}  values={count}")
    print(f"total values: {total}")
    return 0


# ---------------------------------------------------------------------------
# Argument parsing.
# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hsiseg",
        description="Hyperspectral sea-land-cloud segmentation pipeline",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bands", help="channel statistics and anomaly flagging")
    p.add_argument("--cube-dir", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--contamination", type=float, default=0.08)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trees", type=int, default=bands.DEFAULT_TREES)
    p.add_argument("--subsample", type=int, default=bands.DEFAULT_SUBSAMPLE)
    p.set_defaults(func=cmd_bands)

    p = sub.add_parser("train", help="train a CNN per a key=value config file")
    p.add_argument("--config", required=True)
    p.add_argument("--train-dir", required=True)
    p.add_argument("--val-dir")
    p.add_argument("--out", required=True)
    p.add_argument("--history-out")
    p.add_argument("--norm-stats-out")
    p.add_argument("--drop-channels")
    p.add_argument("--select-channels")
    p.add_argument("--patch", type=int, default=PATCH_SIZE)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("infer", help="segment one cube with a trained model")
    p.add_argument("--weights", required=True)
    p.add_argument("--cube", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--norm-stats")
    p.add_argument("--drop-channels")
    p.add_argument("--select-channels")
    p.add_argument("--probs-out", help="also write class probabilities as an HSC1 cube")
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("eval", help="metrics table for predicted vs truth labels")
    p.add_argument("--pred", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("rank", help="coverage queues and data-management actions")
    p.add_argument("--labels-dir", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("bench", help="wall-clock inference time, file I/O excluded")
    p.add_argument("--weights", required=True)
    p.add_argument("--cube", required=True)
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--out")
    p.add_argument("--norm-stats")
    p.add_argument("--drop-channels")
    p.add_argument("--select-channels")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("export-info", help="dump a JWB1 weight file header and records")
    p.add_argument("--weights", required=True)
    p.set_defaults(func=cmd_export_info)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (FileNotFoundError, NotADirectoryError, IsADirectoryError, PermissionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
