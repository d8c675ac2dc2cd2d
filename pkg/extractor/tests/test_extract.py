import json

import numpy as np
import pytest
from PIL import Image

from extractor import extract
from extractor.extract import build_model, list_images

from semrsm.tensor_io import load_representations


@pytest.fixture(scope="module")
def image_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("imgs")
    rng = np.random.default_rng(0)
    for group, name in [("cats", "a.png"), ("cats", "b.png"),
                        ("dogs", "c.png"), ("dogs", "d.png")]:
        (root / group).mkdir(exist_ok=True)
        pixels = rng.integers(0, 255, size=(48, 48, 3), dtype=np.uint8)
        Image.fromarray(pixels).save(root / group / name)
    return root


@pytest.fixture(scope="module")
def extracted(image_dir, tmp_path_factory):
    out = tmp_path_factory.mktemp("out") / "feats"
    summary = extract("resnet18", image_dir, out, weights=None, probs=True,
                      batch_size=3)
    return out, summary


def test_outputs_load_through_interchange(extracted):
    out, summary = extracted
    batch = load_representations(out.with_suffix(".npy"))
    assert batch.n_samples == 4
    assert summary["n"] == 4
    assert len(summary["shape"]) in (2, 3, 4)
    assert batch.sample_ids == ["a.png", "b.png", "c.png", "d.png"]
    assert batch.group_ids == ["cats", "cats", "dogs", "dogs"]


def test_metadata_sidecar_contents(extracted):
    out, _ = extracted
    meta = json.loads(out.with_suffix(".json").read_text())
    assert set(meta) == {"sample_ids", "group_ids"}
    assert meta["group_ids"] == ["cats", "cats", "dogs", "dogs"]


def test_probability_rows_normalized(extracted):
    out, summary = extracted
    probs = np.load(out.parent / (out.name + ".probs.npy"))
    assert probs.shape == (4, 1000)
    assert summary["probs_shape"] == [4, 1000]
    np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-4)
    assert (probs >= 0).all()


def test_named_layer_capture(image_dir, tmp_path):
    out = tmp_path / "conv_feats"
    summary = extract("resnet18", image_dir, out, layer_name="layer4",
                      weights=None)
    assert len(summary["shape"]) == 4
    batch = load_representations(out.with_suffix(".npy"))
    # rank-4 maps load as (N, C, H*W)
    assert batch.n_samples == 4 and batch.n_spatial == 49


def test_unknown_layer_rejected(image_dir, tmp_path):
    with pytest.raises(ValueError, match="unknown layer"):
        extract("resnet18", image_dir, tmp_path / "x", layer_name="nope",
                weights=None)


def test_empty_dir_rejected(tmp_path):
    with pytest.raises(FileNotFoundError):
        list_images(tmp_path)


def test_fallback_preprocessing_without_weights():
    model, transform = build_model("resnet18", None)
    assert not model.training
    img = Image.new("RGB", (64, 80), color=(120, 10, 200))
    assert tuple(transform(img).shape) == (3, 224, 224)
