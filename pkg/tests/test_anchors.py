import numpy as np
import pytest

from anchortm.anchors import AnchorSet, cluster_loners, find_anchors, neighborhood, robust_loners
from anchortm.errors import DomainError, StructuralError
from anchortm.l1geom import beta_robust_simplicial
from anchortm.synth import make_separable_topic_matrix

TRIANGLE = np.array([[1.0, 0.0], [0.0, 1.0], [0.5, 0.5]])
EPS = 1e-6


def test_neighborhood_examples():
    V = np.array([[1.0, 0, 0], [0, 1.0, 0], [0, 0, 1.0]])
    for j in range(3):
        assert neighborhood(V, j, 0, 0).tolist() == [j]
    assert neighborhood(TRIANGLE, 0, 0, 0).tolist() == [0]
    assert neighborhood(TRIANGLE, 0, 1, 10).tolist() == [0, 1, 2]


def test_neighborhood_midpoint_half_weight():
    # the midpoint needs weight 1/2 on e1
    assert 2 in neighborhood(TRIANGLE, 0, 0.5, 0).tolist()
    assert 2 not in neighborhood(TRIANGLE, 0, 0.4, 0).tolist()


def test_robust_loners_examples():
    assert robust_loners(TRIANGLE, EPS, 2.0).tolist() == [0, 1]
    dup = np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    assert robust_loners(dup, EPS, 2.0).tolist() == [0, 1, 2]


def test_cluster_examples():
    dup = np.array([[0.0, 1.0], [1.0, 0.0], [1.0, 0.0]])
    s = cluster_loners(dup, [0, 1, 2], EPS, 2.0)
    assert s.word_indices.tolist() == [0, 1]
    assert s.components == [[0], [1, 2]]
    V = np.eye(4)
    assert cluster_loners(V, [0, 1, 2, 3], EPS, 2.0).word_indices.tolist() == [0, 1, 2, 3]


def test_find_anchors_known_and_bootstrap():
    known = find_anchors(TRIANGLE, EPS, 2, gamma=2.0)
    boot = find_anchors(TRIANGLE, EPS, 2)
    assert known.word_indices.tolist() == boot.word_indices.tolist() == [0, 1]
    assert boot.gamma_source == "bootstrapped" and known.gamma_source == "given"
    assert boot.gamma == pytest.approx(2.0 - 2 * EPS)


def test_precondition_strict_and_relaxed():
    with pytest.raises(DomainError):
        find_anchors(TRIANGLE, 0.05, 2, gamma=2.0)
    with pytest.raises(DomainError):
        robust_loners(TRIANGLE, 0.05, 2.0)
    s = find_anchors(TRIANGLE, 0.05, 2, gamma=2.0, strict=False)
    assert not s.precondition_met and s.gamma == pytest.approx(5.0)


def test_component_mismatch_is_structural():
    with pytest.raises(StructuralError) as err:
        find_anchors(np.eye(3), EPS, 2, gamma=2.0)
    assert err.value.exit_code == 3


def _noisy_instance(seed, eps):
    rng = np.random.default_rng(seed)
    tm = make_separable_topic_matrix(15, 3, 0.3, seed=seed)
    W = rng.dirichlet(np.ones(3), size=3 * 20).T[:, :40]
    M = tm.A @ W
    M = M / M.sum(axis=1, keepdims=True)
    gamma = beta_robust_simplicial(M[:3], by="rows")
    noise = rng.normal(size=M.shape)
    noise -= noise.mean(axis=1, keepdims=True)
    noise *= (eps * gamma) / np.abs(noise).sum(axis=1, keepdims=True)
    return tm, np.clip(M + noise, 0, None), gamma, eps * gamma


@pytest.mark.parametrize("seed", range(5))
def test_noisy_instances_recover_anchors(seed):
    tm, Mn, gamma, eps = _noisy_instance(seed, 1 / 300)
    s = find_anchors(Mn, eps, 3, gamma=gamma)
    assert sorted(s.word_indices.tolist()) == [0, 1, 2]
    assert set(range(3)) <= set(s.loners.tolist())


def test_record_round_trip_and_remap():
    s = find_anchors(TRIANGLE, EPS, 2, gamma=2.0).remap(np.array([5, 7, 9]))
    assert s.word_indices.tolist() == [5, 7]
    back = AnchorSet.from_record(s.to_record())
    assert back.word_indices.tolist() == [5, 7] and back.gamma == s.gamma
