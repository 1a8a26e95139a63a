import math

import numpy as np
import pytest

import lrprop


def test_dtw_and_enumeration_counts():
    rng = np.random.default_rng(0)
    z = rng.normal(size=(5, 3))
    d = lrprop.distance_matrix(z, z)
    assert d.shape == (5, 5)
    assert lrprop.dtw_cost(d) == 0.0
    assert lrprop.dtw_path(d) == [(k, k) for k in range(5)]
    assert lrprop.count_paths(3, 3) == 13


def test_softdtw_matches_soft_min_on_single_cell():
    cost, grad = lrprop.softdtw_cost(np.array([[0.7]]), 0.5)
    assert cost == pytest.approx(0.7)
    assert grad[0, 0] == pytest.approx(1.0)
    assert lrprop.soft_min([2.0, 2.0], 0.5) == pytest.approx(2.0 - 0.5 * math.log(2.0))


def test_softdtw_gradient_against_finite_differences():
    rng = np.random.default_rng(1)
    d = rng.uniform(size=(3, 4))
    _, grad = lrprop.softdtw_cost(d, 0.2)
    h = 1e-6
    fd = np.zeros_like(d)
    for i in range(3):
        for j in range(4):
            e = np.zeros_like(d)
            e[i, j] = h
            fd[i, j] = (lrprop.softdtw_cost(d + e, 0.2)[0] - lrprop.softdtw_cost(d - e, 0.2)[0]) / (2 * h)
    assert np.linalg.norm(grad - fd) / np.linalg.norm(fd) < 1e-6


def test_priors_and_similarity():
    p = lrprop.same_video_prior([0, 1, 2], [0, 1, 2], 10.0)
    assert p[1] == pytest.approx([0.32773, 0.34454, 0.32773], abs=1e-5)
    eye = np.eye(3, dtype=np.int32)
    assert np.array_equal(lrprop.propagation_prior([0, 1, 2], eye, 10.0), p)
    q = lrprop.similarity_distribution(np.array([[1.0, 0.0], [0.0, 1.0]]), np.array([[1.0, 0.0]]), 0.1)
    assert q[0] == pytest.approx([0.9999546, 4.54e-5], rel=1e-3)
    assert lrprop.kl_row([1.0, 0.0], [0.5, 0.5]) == pytest.approx(math.log(2.0))
    with pytest.raises(ValueError):
        lrprop.same_video_prior([0, 1], [0, 1], 0.0)


def test_pair_loss_same_video_report():
    rng = np.random.default_rng(2)
    za = rng.normal(size=(6, 4))
    zb = rng.normal(size=(6, 4))
    report, ga, gb = lrprop.pair_loss([0, 2, 4, 6, 8, 10], [1, 3, 5, 7, 9, 11], za, zb,
                                      lrprop.HyperParams(), True)
    assert report["combined"] == report["loss_same"]
    assert report["loss_sdtw"] == 0.0
    assert ga.shape == za.shape and gb.shape == zb.shape


def test_encoder_and_dataset():
    params = lrprop.init_params(3, lrprop.EncoderDims(12, 16, 8))
    videos = lrprop.generate_dataset(lrprop.SynthConfig(), 7)
    assert len(videos) == 32
    assert sum(v["split"] == "train" for v in videos) == 24
    z = lrprop.encode(videos[0]["features"], params)
    assert np.allclose(np.linalg.norm(z, axis=1), 1.0)
    g = lrprop.encode_backward(videos[0]["features"], params, np.zeros_like(z))
    assert g.shape == (params.size(),) and not g.any()
    assert lrprop.kendall_tau(z, z) == 1.0
    labels = videos[0]["phase_labels"]
    assert lrprop.dtw_accuracy(z, labels, z, labels) == 1.0


def test_short_training_is_deterministic():
    data = lrprop.SynthConfig()
    data.train_videos, data.test_videos, data.min_frames, data.max_frames = 3, 2, 20, 25
    config = lrprop.TrainConfig()
    config.epochs = 2
    config.hp.clip_length = 8
    config.dims = lrprop.EncoderDims(12, 8, 4)
    p1, curve = lrprop.train(data, 5, config)
    p2, _ = lrprop.train(data, 5, config)
    assert len(curve) == 6
    assert np.array_equal(p1.flatten(), p2.flatten())


def test_checks_and_cli():
    assert all(r["passed"] for r in lrprop.run_checks(7))
    code, _, err = lrprop.run_cli(["generate", "--set", "phases=1"])
    assert code == 1 and "phases" in err
