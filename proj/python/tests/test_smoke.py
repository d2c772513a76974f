import math
import re

import numpy as np
import pytest

import flarecast as fc


def test_metrics_basics():
    rng = np.random.default_rng(0)
    a = rng.integers(0, 256, (16, 16), dtype=np.uint8)
    assert fc.ssim(a, a) == 1.0
    assert fc.correlation(a, a) == pytest.approx(1.0)
    assert fc.entropy(np.full((8, 8), 7, np.uint8)) == 0.0
    assert math.isinf(fc.psnr(a, a))
    b = np.full((8, 8), 100, np.uint8)
    assert fc.psnr(b, b + 16) == pytest.approx(24.05, abs=0.005)
    values = fc.evaluate_pair(a, a)
    assert set(values) >= {"EN", "CC", "PSNR", "SSIM"}


def test_hausdorff_on_masks():
    m1 = np.zeros((10, 10), np.uint8)
    m2 = np.zeros((10, 10), np.uint8)
    m1[0, 0] = 1
    m2[4, 3] = 1
    assert fc.hausdorff(m1, m2) == 5.0


def test_brightness_and_padding():
    art = np.full((10, 10), 150, np.uint8)
    out = fc.adjust_brightness(art, 90.0)
    assert out["applied"]
    assert fc.rms_brightness(out["image"]) == pytest.approx(135.0, abs=1.0)
    same = fc.adjust_brightness(art, 140.0)
    assert not same["applied"]
    assert np.array_equal(same["image"], art)

    img = np.random.default_rng(1).integers(0, 256, (288, 384, 3), dtype=np.uint8)
    padded, canvas = fc.pad_to_canvas(img, 512, 1024)
    assert padded.shape == (1024, 512, 3)
    assert np.array_equal(fc.remove_padding(padded, canvas), img)


def test_weights_geometry_and_errors():
    w = fc.compute_class_weights([0.98, 0.02])
    assert w[0] == pytest.approx(1.4427, abs=1e-3)
    mask = np.zeros((120, 120), np.uint8)
    mask[0:100, 0:100] = 2
    g = fc.characterize(mask, 0, 100, 10.0)
    assert g["area_m2"] == pytest.approx(100.0)
    assert g["length_m"] == pytest.approx(10.0)
    assert fc.mape([100, 200], [90, 210]) == pytest.approx(7.5, abs=1e-9)
    assert fc.rmspe([100, 200], [90, 210]) == pytest.approx(8.548, abs=5e-4)
    assert fc.error_spread(4.591, 5.952) == pytest.approx(1.361)


def test_errors_carry_kind():
    with pytest.raises(fc.FlarecastError) as info:
        fc.mape([0.0], [1.0])
    assert info.value.kind == "division by zero"
    with pytest.raises(fc.FlarecastError):
        fc.Translator.load("/nonexistent/checkpoint.pt")


def test_synthetic_train_and_run(tmp_path):
    ds = fc.generate_synthetic_dataset(tmp_path / "synth", n=40, seed=3)
    config = ds["config"]
    text = config.read_text()
    text = re.sub(r"max_steps = \d+", "max_steps = 40", text)
    config.write_text(text)

    tr = fc.train_translation(config)
    assert tr["val_l1"][-1] < tr["val_l1"][0]
    seg = fc.train_segmentation(config)
    assert len(seg["class_weights"]) == 4

    translator = fc.Translator.load(tr["checkpoint"])
    visible = np.zeros((64, 64, 3), np.uint8)
    assert translator.translate(visible).shape == (64, 64, 3)
    segmenter = fc.Segmenter.load(seg["checkpoint"])
    assert segmenter.segment(visible).dtype == np.uint8

    summary = fc.run_pipeline(config, tmp_path / "run")
    assert summary["frames"] > 0
    assert (tmp_path / "run" / "report" / "length_errors.csv").exists()
