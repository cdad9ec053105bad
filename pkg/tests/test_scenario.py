import dataclasses as dc

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from uavmec.errors import EmptyScenario, InvalidRange, TooFewPoints
from uavmec.scenario import (
    Clustering,
    Position3,
    generate_scenario,
    kmeans_associate,
    kmeans_objective,
    lloyd,
    preset,
    validate_scenario,
)


def test_default_scenario_shape(default_scenario):
    s = default_scenario
    assert s.num_devices == 30
    assert s.num_uavs == 5
    assert s.tbs_position == Position3(0.0, 0.0, 0.0)
    assert all(m.position.z == 150.0 for m in s.uavs)
    assert np.all((s.md_xyz[:, :2] >= 0) & (s.md_xyz[:, :2] <= 300))
    assert np.all(s.md_xyz[:, 2] == 0)
    assert np.all((s.input_bits >= 200e6) & (s.input_bits <= 700e6))
    assert np.all((s.local_cpu >= 0.5e9) & (s.local_cpu <= 3e9))
    assert np.all((s.uav_cpu >= 1.2e9) & (s.uav_cpu <= 2e9))
    assert validate_scenario(s) == []


def test_generation_is_deterministic():
    a = generate_scenario(preset("rescaled"))
    b = generate_scenario(preset("rescaled"))
    assert a == b


def test_different_seed_changes_placement():
    a = generate_scenario(preset("rescaled"))
    b = generate_scenario(dc.replace(preset("rescaled"), seed=8))
    assert not np.array_equal(a.md_xyz, b.md_xyz)


def test_empty_scenario_raises():
    with pytest.raises(EmptyScenario):
        generate_scenario(dc.replace(preset("rescaled"), num_devices=0))


def test_inverted_range_raises():
    p = preset("rescaled")
    with pytest.raises(InvalidRange):
        generate_scenario(dc.replace(p, device=dc.replace(p.device, cpu_hz_min=3e9, cpu_hz_max=1e9)))


def test_unknown_preset():
    with pytest.raises(InvalidRange):
        preset("nope")


def test_table2_preset_uses_mhz_cpus():
    s = generate_scenario(preset("table2"))
    assert np.all(s.local_cpu <= 3e6)


def test_uavs_sit_on_cluster_centroids(default_scenario):
    s = default_scenario
    for m in range(s.num_uavs):
        centroid = s.md_xyz[s.members[m], :2].mean(axis=0)
        assert np.allclose(s.uav_xyz[m, :2], centroid, atol=1e-9, rtol=0)


def test_two_separated_points_form_singletons():
    clustering, centroids = kmeans_associate([Position3(0, 0), Position3(300, 300)], 2, seed=3)
    assert sorted(clustering.assignment.values()) == [(0,), (1,)]
    assert sorted(map(tuple, centroids.tolist())) == [(0.0, 0.0), (300.0, 300.0)]


def test_single_cluster_centroid_is_mean():
    pts = [Position3(1, 2), Position3(3, 8), Position3(5, 5)]
    clustering, centroids = kmeans_associate(pts, 1)
    assert clustering.assignment == {0: (0, 1, 2)}
    assert np.allclose(centroids[0], [3.0, 5.0])


def test_too_few_points():
    with pytest.raises(TooFewPoints):
        kmeans_associate([Position3(0, 0)], 2)


def test_lloyd_objective_nonincreasing_and_partition_valid():
    # Oracle: re-evaluate the k-means objective at every recorded iteration.
    rng = np.random.default_rng(7)
    pts = rng.uniform(0, 300, size=(30, 2))
    labels, centroids, history = lloyd(pts, 5, np.random.default_rng(1))
    values = [kmeans_objective(pts, lab, cen) for lab, cen in history]
    assert all(b <= a + 1e-9 for a, b in zip(values, values[1:]))
    assert sorted(np.concatenate([np.flatnonzero(labels == j) for j in range(5)])) == list(range(30))
    assert np.all(np.bincount(labels, minlength=5) > 0)


@settings(max_examples=30, deadline=None)
@given(
    pts=st.lists(
        st.tuples(st.floats(0, 300), st.floats(0, 300)), min_size=3, max_size=25
    ),
    k=st.integers(1, 3),
    seed=st.integers(0, 2**16),
)
def test_lloyd_properties(pts, k, seed):
    pts = np.array(pts)
    labels, centroids, history = lloyd(pts, k, np.random.default_rng(seed))
    values = [kmeans_objective(pts, lab, cen) for lab, cen in history]
    assert all(b <= a * (1 + 1e-9) + 1e-9 for a, b in zip(values, values[1:]))
    assert labels.shape == (len(pts),)
    assert set(labels.tolist()) <= set(range(k))


def test_validate_detects_missing_device(default_scenario):
    s = default_scenario
    assignment = dict(s.clustering.assignment)
    first = assignment[0]
    assignment[0] = first[1:]
    broken = dc.replace(s, clustering=Clustering(assignment))
    problems = validate_scenario(broken)
    assert len(problems) == 1
    assert "collectively exhaustive" in problems[0]


def test_validate_detects_overlap(default_scenario):
    s = default_scenario
    assignment = dict(s.clustering.assignment)
    assignment[1] = assignment[1] + (assignment[0][0],)
    problems = validate_scenario(dc.replace(s, clustering=Clustering(assignment)))
    assert any("mutually exclusive" in p for p in problems)


def test_validate_detects_efficiency_out_of_range(default_scenario):
    s = default_scenario
    uavs = (dc.replace(s.uavs[0], power_efficiency=1.2),) + s.uavs[1:]
    problems = validate_scenario(dc.replace(s, uavs=uavs))
    assert len(problems) == 1
    assert "power_efficiency" in problems[0]
