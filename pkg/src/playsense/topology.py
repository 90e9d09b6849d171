"""Rooted directed skeleton graphs.

A skeleton is a tree rooted at the mid-hip joint with every edge pointing
outward, from the joint nearer the root to the joint one hop further away.
Vertex features live on joints, edge features on bones.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class SkeletonTopology:
    """Joint tree with directed outward edges and a parent-first ordering."""

    joints: tuple[str, ...]
    root: str
    edges: tuple[tuple[str, str], ...]
    topo_order: tuple[str, ...]

    joint_index: dict[str, int] = field(init=False, repr=False)
    edge_sources: np.ndarray = field(init=False, repr=False)
    edge_targets: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.joint_index = {name: k for k, name in enumerate(self.joints)}
        self.edge_sources = np.array([self.joint_index[m] for m, _ in self.edges], dtype=np.int64)
        self.edge_targets = np.array([self.joint_index[j] for _, j in self.edges], dtype=np.int64)
        self._validate()

    @property
    def n_joints(self) -> int:
        return len(self.joints)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def incoming_edges(self, joint: str) -> list[int]:
        j = self.joint_index[joint]
        return [e for e, tgt in enumerate(self.edge_targets) if tgt == j]

    def outgoing_edges(self, joint: str) -> list[int]:
        j = self.joint_index[joint]
        return [e for e, src in enumerate(self.edge_sources) if src == j]

    def hop_distances(self) -> dict[str, int]:
        """Hop count from the root to every joint."""
        dist = {self.root: 0}
        frontier = [self.root]
        children: dict[str, list[str]] = {name: [] for name in self.joints}
        for m, j in self.edges:
            children[m].append(j)
        while frontier:
            nxt = []
            for name in frontier:
                for child in children[name]:
                    if child not in dist:
                        dist[child] = dist[name] + 1
                        nxt.append(child)
            frontier = nxt
        return dist

    def _validate(self):
        n = len(self.joints)
        if len(set(self.joints)) != n:
            raise ValueError("duplicate joint names")
        if self.root not in self.joint_index:
            raise ValueError(f"root {self.root!r} is not a joint")
        if len(self.edges) != n - 1:
            raise ValueError(f"tree needs {n - 1} edges for {n} joints, got {len(self.edges)}")

        incoming: dict[str, int] = {name: 0 for name in self.joints}
        for m, j in self.edges:
            if m not in self.joint_index or j not in self.joint_index:
                raise ValueError(f"edge ({m!r}, {j!r}) references unknown joint")
            incoming[j] += 1
        if incoming[self.root] != 0:
            raise ValueError("root must have no incoming edges")
        for name, count in incoming.items():
            if name != self.root and count != 1:
                raise ValueError(f"joint {name!r} has {count} incoming edges, expected 1")

        dist = self.hop_distances()
        if len(dist) != n:
            raise ValueError("graph is not connected")
        for m, j in self.edges:
            if dist[m] != dist[j] - 1:
                raise ValueError(f"edge ({m!r}, {j!r}) does not point outward from the root")

        if sorted(self.topo_order) != sorted(self.joints):
            raise ValueError("topo_order must list every joint exactly once")
        seen: set[str] = set()
        parent = {j: m for m, j in self.edges}
        for name in self.topo_order:
            if name in parent and parent[name] not in seen:
                raise ValueError(f"topo_order places {name!r} before its parent")
            seen.add(name)


# 17-joint desk rig: mid-hip root, a neck/head chain, both arms down to the
# wrist and both legs down to a foot tip.
_DEFAULT17_JOINTS = (
    "mid_hip",
    "neck",
    "head",
    "l_shoulder",
    "r_shoulder",
    "l_elbow",
    "r_elbow",
    "l_wrist",
    "r_wrist",
    "l_hip",
    "r_hip",
    "l_knee",
    "r_knee",
    "l_ankle",
    "r_ankle",
    "l_foot",
    "r_foot",
)

_DEFAULT17_EDGES = (
    ("mid_hip", "neck"),
    ("neck", "head"),
    ("neck", "l_shoulder"),
    ("neck", "r_shoulder"),
    ("l_shoulder", "l_elbow"),
    ("l_elbow", "l_wrist"),
    ("r_shoulder", "r_elbow"),
    ("r_elbow", "r_wrist"),
    ("mid_hip", "l_hip"),
    ("l_hip", "l_knee"),
    ("l_knee", "l_ankle"),
    ("l_ankle", "l_foot"),
    ("mid_hip", "r_hip"),
    ("r_hip", "r_knee"),
    ("r_knee", "r_ankle"),
    ("r_ankle", "r_foot"),
)

_PRESETS = {
    "default17": lambda: SkeletonTopology(
        joints=_DEFAULT17_JOINTS,
        root="mid_hip",
        edges=_DEFAULT17_EDGES,
        topo_order=_DEFAULT17_JOINTS,
    )
}


def available_presets() -> tuple[str, ...]:
    return tuple(sorted(_PRESETS))


def build_topology(preset_name: str = "default17") -> SkeletonTopology:
    """Construct one of the named skeleton rigs."""
    try:
        factory = _PRESETS[preset_name]
    except KeyError:
        raise ValueError(
            f"unknown skeleton preset {preset_name!r}; available: {', '.join(available_presets())}"
        ) from None
    return factory()
