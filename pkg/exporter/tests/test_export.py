"""Export fidelity: detection, engine-side validation, dual-engine agreement."""

from __future__ import annotations

import subprocess

import numpy as np
import pytest

from jwbexport.cli import main
from jwbexport.detect import Detection, UnrecognizedArchitecture, detect
from jwbexport.export import INVERSE_TRANSPOSES, canonical_records, export
from jwbexport.formats import read_jwb, write_hsc
from jwbexport.hdf5 import declared_input_length, read_checkpoint

from conftest import build_keras_model, randomize_weights

ARCH_SIZES = {
    "liuetal": 112,
    "1d-justo-liunet": 112,
    "huetal": 112,
    "1d-justo-hunet": 112,
    "lucascnn": 112,
    "1d-justo-lucascnn": 112,
    "2d-justo-unet-simple": 8,
}


def _checkpoint(tmp_path, arch, channels, classes=3, seed=0):
    model = build_keras_model(arch, channels, classes)
    randomize_weights(model, seed)
    path = tmp_path / f"{arch}.h5"
    model.save(path)
    return path


def _verify_cube(tmp_path, arch, channels, seed=1):
    rng = np.random.default_rng(seed)
    if arch == "2d-justo-unet-simple":
        shape = (480, 480, channels)  # 100 non-overlapping 48x48 patches
    else:
        shape = (10, 10, channels)    # 100 spectra
    path = tmp_path / f"{arch}-verify.hsc"
    write_hsc(path, rng.uniform(0.0, 1.0, size=shape).astype(np.float32))
    return path


@pytest.mark.parametrize("arch", sorted(ARCH_SIZES))
def test_detection_and_header(tmp_path, arch):
    channels = ARCH_SIZES[arch]
    checkpoint = _checkpoint(tmp_path, arch, channels)
    layers = read_checkpoint(str(checkpoint))
    detection = detect(layers, declared_input_length(str(checkpoint)))
    assert detection == Detection(arch, channels, 3)


def test_detection_without_model_config_uses_smallest_length(tmp_path):
    # floor pooling makes lengths 112 and 113 weight-identical for this net;
    # without a declared input shape the smaller reading wins deterministically
    checkpoint = _checkpoint(tmp_path, "1d-justo-hunet", 112)
    layers = read_checkpoint(str(checkpoint))
    assert detect(layers, None) == Detection("1d-justo-hunet", 112, 3)


@pytest.mark.parametrize("arch", sorted(ARCH_SIZES))
def test_roundtrip_tensor_identity_bit_exact(tmp_path, arch):
    channels = ARCH_SIZES[arch]
    checkpoint = _checkpoint(tmp_path, arch, channels)
    layers = read_checkpoint(str(checkpoint))
    detection = detect(layers)
    records, rows = canonical_records(layers, detection)
    by_name = dict(records)
    assert len(rows) == len(records)
    for layer in layers:
        for role, source in layer.weights.items():
            row = next(r for r in rows if r["source_weight"] == layer.weight_paths[role])
            exported = by_name[row["record"]]
            if row["transpose"]:
                restored = np.transpose(exported, INVERSE_TRANSPOSES[layer.kind])
            else:
                restored = exported
            np.testing.assert_array_equal(restored, source)


@pytest.mark.parametrize("arch", sorted(ARCH_SIZES))
def test_engine_accepts_exported_file(tmp_path, arch):
    channels = ARCH_SIZES[arch]
    checkpoint = _checkpoint(tmp_path, arch, channels)
    out = tmp_path / f"{arch}.jwb"
    export(checkpoint, out)
    proc = subprocess.run(
        ["hsiseg", "export-info", "--weights", str(out)],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert f"architecture: {arch}" in proc.stdout


@pytest.mark.parametrize("arch", sorted(ARCH_SIZES))
def test_dual_engine_agreement(tmp_path, arch):
    channels = ARCH_SIZES[arch]
    checkpoint = _checkpoint(tmp_path, arch, channels)
    out = tmp_path / f"{arch}.jwb"
    cube = _verify_cube(tmp_path, arch, channels)
    code = main(["--in", str(checkpoint), "--out", str(out), "--verify", str(cube)])
    assert code == 0


def test_liunet_payload_is_4563_floats(tmp_path):
    checkpoint = _checkpoint(tmp_path, "1d-justo-liunet", 112)
    out = tmp_path / "m.jwb"
    export(checkpoint, out)
    arch, channels, classes, records = read_jwb(out)
    assert (arch, channels, classes) == ("1d-justo-liunet", 112, 3)
    assert sum(t.size for _, t in records) == 4_563


def test_extra_dense_layer_refused_with_listing(tmp_path):
    import keras
    from keras import layers

    model = keras.Sequential([
        keras.Input((112, 1)),
        layers.Conv1D(6, 9, activation="tanh"),
        layers.MaxPooling1D(2),
        layers.Flatten(),
        layers.Dense(30, activation="relu"),
        layers.Dense(17, activation="relu"),  # not part of any known head
        layers.Dense(3, activation="softmax"),
    ])
    path = tmp_path / "odd.h5"
    model.save(path)
    with pytest.raises(UnrecognizedArchitecture, match="Detected layers"):
        detect(read_checkpoint(str(path)))


def test_manifest_written_and_traceable(tmp_path):
    checkpoint = _checkpoint(tmp_path, "1d-justo-hunet", 112)
    out = tmp_path / "m.jwb"
    assert main(["--in", str(checkpoint), "--out", str(out)]) == 0
    manifest = (tmp_path / "m.jwb.manifest.jsonl").read_text().splitlines()
    import json

    header = json.loads(manifest[0])
    assert header["architecture"] == "1d-justo-hunet"
    rows = [json.loads(ln) for ln in manifest[1:]]
    _, _, _, records = read_jwb(out)
    assert {r["record"] for r in rows} == {name for name, _ in records}
    sources = [r["source_weight"] for r in rows]
    assert len(sources) == len(set(sources))  # each record from exactly one tensor


def test_missing_checkpoint_exit_2(tmp_path):
    assert main(["--in", str(tmp_path / "none.h5"), "--out", str(tmp_path / "o.jwb")]) == 2
