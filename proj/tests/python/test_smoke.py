import math

import numpy as np
import pytest

import vesselwave as vw


def test_morlet_kernel_matches_closed_form():
    k = vw.morlet_kernel(1.0, 0.0)
    hw = k.shape[0] // 2
    # rows are y, columns are x
    assert k[hw + 1, hw] == pytest.approx(np.exp(3j) * math.exp(-0.5), abs=1e-15)
    assert k[hw, hw + 3] == pytest.approx(math.exp(-9.0 / 16.0), abs=1e-15)


def test_wavelet_features_on_a_synthetic_image():
    s = vw.synthesize(seed=1, index=0, size=64)
    assert s["rgb"].shape == (64, 64, 3)
    green = 1.0 - s["rgb"][:, :, 1] / 255.0
    mask = s["fov"]
    img, grown = vw.extend_border(green, mask, 8)
    assert grown.sum() >= mask.sum()
    feats = vw.build_features(img, grown, scales=[2, 3])
    assert feats.shape == (3, 64, 64)
    inside = feats[:, grown]
    np.testing.assert_allclose(inside.mean(axis=1), 0.0, atol=1e-9)
    np.testing.assert_allclose(inside.std(axis=1), 1.0, atol=1e-9)

    mm = vw.max_modulus(img, 2.0)
    resp = np.abs(vw.cwt_response(img, 2.0, 40.0))
    assert np.all(mm >= resp - 1e-12)


def test_classifiers_and_roc():
    rng = np.random.default_rng(0)
    x = np.vstack([rng.normal(1.5, 1.0, (400, 2)), rng.normal(-1.0, 1.0, (600, 2))])
    y = np.r_[np.ones(400, bool), np.zeros(600, bool)]

    gmm = vw.fit_gmm(x, y, k=2, seed=3)
    assert gmm.priors == pytest.approx([0.4, 0.6])
    p = gmm.posterior(x)
    assert np.all((p >= 0) & (p <= 1))
    assert vw.roc(p, y)["az"] > 0.9

    lin = vw.fit_lmse(x, y)
    assert lin.w.shape == (2,)
    r = vw.roc(lin.score(x), y)
    assert r["fpf"][0] == 0 and r["tpf"][-1] == 1
    assert r["az"] > 0.9


def test_roc_hand_case_and_confusion():
    r = vw.roc(np.array([0.9, 0.8, 0.4, 0.7, 0.3, 0.1]), np.array([1, 1, 1, 0, 0, 0]))
    assert r["az"] == pytest.approx(8 / 9, abs=1e-15)
    truth = np.array([[1, 1, 0], [0, 1, 0], [0, 0, 0]], bool)
    seg = np.array([[1, 0, 0], [0, 1, 1], [0, 0, 0]], bool)
    c = vw.confusion(seg, truth, np.ones((3, 3), bool))
    assert (c["tp"], c["fp"], c["tn"], c["fn"]) == (2, 1, 5, 1)


def test_errors_surface_as_exceptions():
    with pytest.raises(vw.VesselwaveError, match="data"):
        vw.derive_mask(np.zeros((10, 10)), 0.5)
    with pytest.raises(vw.VesselwaveError):
        vw.load_channel("/nonexistent/image.png")
    with pytest.raises(ValueError):
        vw.invert(np.zeros(5))
