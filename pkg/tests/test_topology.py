import pytest

from playsense.topology import SkeletonTopology, available_presets, build_topology


def test_default_rig_counts():
    topo = build_topology("default17")
    assert topo.n_joints == 17
    assert topo.n_edges == 16


def test_root_has_no_incoming_edges():
    topo = build_topology()
    assert topo.incoming_edges(topo.root) == []


def test_topo_order_starts_at_root():
    topo = build_topology()
    assert topo.topo_order[0] == "mid_hip"


def test_shoulders_identifiable_by_name():
    topo = build_topology()
    assert "l_shoulder" in topo.joint_index
    assert "r_shoulder" in topo.joint_index


def test_edges_point_outward():
    topo = build_topology()
    dist = topo.hop_distances()
    for m, j in topo.edges:
        assert dist[m] == dist[j] - 1


def test_every_non_root_joint_has_one_parent():
    topo = build_topology()
    for name in topo.joints:
        incoming = topo.incoming_edges(name)
        assert len(incoming) == (0 if name == topo.root else 1)


def test_unknown_preset_names_alternatives():
    with pytest.raises(ValueError, match="default17"):
        build_topology("nope")
    assert "default17" in available_presets()


def test_rejects_edge_into_already_parented_joint():
    with pytest.raises(ValueError, match="incoming"):
        SkeletonTopology(
            joints=("a", "b", "c"),
            root="a",
            edges=(("a", "b"), ("c", "b")),
            topo_order=("a", "b", "c"),
        )


def test_rejects_detached_cycle():
    with pytest.raises(ValueError, match="connected"):
        SkeletonTopology(
            joints=("a", "b", "c", "d"),
            root="a",
            edges=(("a", "b"), ("c", "d"), ("d", "c")),
            topo_order=("a", "b", "c", "d"),
        )


def test_rejects_cycle_edge_count():
    with pytest.raises(ValueError):
        SkeletonTopology(
            joints=("a", "b"),
            root="a",
            edges=(("a", "b"), ("b", "a")),
            topo_order=("a", "b"),
        )


def test_rejects_child_before_parent_order():
    with pytest.raises(ValueError, match="before its parent"):
        SkeletonTopology(
            joints=("a", "b", "c"),
            root="a",
            edges=(("a", "b"), ("b", "c")),
            topo_order=("a", "c", "b"),
        )
