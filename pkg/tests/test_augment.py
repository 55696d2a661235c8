import numpy as np

from bimanual import augment as A
from bimanual import perception as P


def blob_obs(kp, sigma=1.5):
    raster = np.zeros((96, 96, 4), dtype=np.float32)
    raster[:, :, 0] = P.encode_heatmap(kp, sigma)
    return P.Observation(raster, np.zeros(8))


def test_identity_params_unchanged():
    obs = blob_obs((40, 50))
    rng = np.random.default_rng(0)
    out, label = A.augment((obs, (40, 50)), A.IDENTITY, rng)
    np.testing.assert_allclose(out.raster, obs.raster, atol=1e-6)
    assert tuple(label) == (40, 50)


def test_pure_translation_shifts_label():
    mat = np.eye(2)
    t = np.array([5.0, 0.0])
    q = A.apply_affine_to_cell((30, 30), mat, t, 96)
    assert (round(q[0]), round(q[1])) == (35, 30)
    obs = blob_obs((30, 30))
    warped = A.warp_raster(obs.raster, mat, t, fill=0.0, mode="constant")
    peak = np.unravel_index(np.argmax(warped[:, :, 0]), (96, 96))
    assert peak == (35, 30)


def test_rotation_matches_independent_matrix():
    th = np.deg2rad(15.0)
    rot = np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
    kp = np.array([10.0, 48.0])
    ctr = (96 - 1) / 2.0
    expected = rot @ (kp - ctr) + ctr
    q = A.apply_affine_to_cell(kp, rot, np.zeros(2), 96)
    np.testing.assert_allclose(q, expected, atol=1e-12)
    # And the warped raster's peak lands on the same cell.
    obs = blob_obs((10, 48))
    warped = A.warp_raster(obs.raster, rot, np.zeros(2), 0.0, "constant")
    peak = np.unravel_index(np.argmax(warped[:, :, 0]), (96, 96))
    assert max(abs(peak[0] - round(expected[0])),
               abs(peak[1] - round(expected[1]))) <= 1


def test_binary_labels_never_change():
    obs = blob_obs((20, 60))
    rng = np.random.default_rng(3)
    for _ in range(20):
        out = A.augment((obs, 1), A.AugmentConfig(), rng)
        assert out is not None and out[1] == 1


def test_photometric_keeps_labels_and_geometry():
    obs = blob_obs((33, 44))
    cfg = A.AugmentConfig(geometric=False)
    rng = np.random.default_rng(5)
    out, label = A.augment((obs, (33, 44)), cfg, rng)
    assert tuple(label) == (33, 44)
    peak = np.unravel_index(np.argmax(out.raster[:, :, 0]), (96, 96))
    assert peak == (33, 44)


def test_label_consistency_statistical():
    # Transformed label vs. peak of the transformed raster: within one cell
    # almost always (acceptance runs the full 1000-draw version).
    rng = np.random.default_rng(11)
    cfg = A.AugmentConfig(photometric=False)
    hits = trials = 0
    while trials < 200:
        kp = (int(rng.integers(20, 76)), int(rng.integers(20, 76)))
        out = A.augment((blob_obs(kp), kp), cfg, rng)
        if out is None:
            continue
        trials += 1
        warped, label = out
        peak = np.unravel_index(np.argmax(warped.raster[:, :, 0]), (96, 96))
        if max(abs(peak[0] - label[0]), abs(peak[1] - label[1])) <= 1:
            hits += 1
    assert hits / trials >= 0.99


def test_offgrid_keypoint_skipped_or_resampled():
    cfg = A.AugmentConfig(photometric=False, translate_frac=0.0,
                          rotate_deg=0.0, shear_deg=0.0, scale=(1.3, 1.3),
                          max_retries=3)
    rng = np.random.default_rng(7)
    # A corner keypoint scaled outward by 1.3x always leaves the grid.
    out = A.augment((blob_obs((1, 1)), (1, 1)), cfg, rng)
    assert out is None
