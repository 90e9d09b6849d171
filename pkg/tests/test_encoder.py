import numpy as np
import pytest
import torch

from playsense.encoder import (
    CausalConv,
    DgnBlock,
    EncoderConfig,
    PoseEncoder,
    aggregate_incoming,
    aggregate_outgoing,
    causal_conv,
    encode_pose_window,
    init_graph_state,
    incidence_matrices,
)
from playsense.model import seed_parameters
from playsense.topology import SkeletonTopology, build_topology


def two_joint_topology():
    return SkeletonTopology(joints=("root", "tip"), root="root",
                            edges=(("root", "tip"),), topo_order=("root", "tip"))


class TestGraphInit:
    def test_bone_is_source_minus_target(self, topology):
        frame = torch.zeros(topology.n_joints, 3, dtype=torch.float64)
        parent = topology.joint_index["mid_hip"]
        child = topology.joint_index["neck"]
        frame[parent] = torch.tensor([0.0, 0.0, 0.0])
        frame[child] = torch.tensor([1.0, 0.0, 0.0])
        state = init_graph_state(frame, topology)
        edge = topology.edges.index(("mid_hip", "neck"))
        np.testing.assert_allclose(state.edge_feats[edge], (-1.0, 0.0, 0.0))

    def test_all_zero_joints_zero_bones(self, topology):
        state = init_graph_state(torch.zeros(topology.n_joints, 3), topology)
        assert torch.count_nonzero(state.edge_feats) == 0

    def test_default_rig_has_16_edge_rows(self, topology):
        state = init_graph_state(torch.zeros(topology.n_joints, 3), topology)
        assert state.edge_feats.shape == (16, 3)

    def test_vertices_carry_coordinates(self, topology):
        frame = torch.randn(topology.n_joints, 3)
        state = init_graph_state(frame, topology)
        assert torch.equal(state.vertex_feats, frame)

    def test_non_finite_rejected(self, topology):
        frame = torch.zeros(topology.n_joints, 3)
        frame[0, 0] = float("nan")
        with pytest.raises(ValueError, match="finite"):
            init_graph_state(frame, topology)


class TestAggregation:
    def test_leaf_outgoing_is_zero(self, topology):
        state = init_graph_state(torch.randn(17, 3, dtype=torch.float64), topology)
        out = aggregate_outgoing(state, topology, "head")
        np.testing.assert_allclose(out, np.zeros(3))

    def test_root_incoming_is_zero(self, topology):
        state = init_graph_state(torch.randn(17, 3, dtype=torch.float64), topology)
        np.testing.assert_allclose(aggregate_incoming(state, topology, "mid_hip"),
                                   np.zeros(3))

    def test_two_outgoing_edges_sum_elementwise(self, topology):
        state = init_graph_state(torch.zeros(17, 3, dtype=torch.float64), topology)
        # neck feeds head, l_shoulder, r_shoulder
        for name, value in (("head", (1.0, 2.0, 0.0)), ("l_shoulder", (3.0, 4.0, 0.0)),
                            ("r_shoulder", (0.0, 0.0, 0.0))):
            edge = topology.edges.index(("neck", name))
            state.edge_feats[edge] = torch.tensor(value)
        np.testing.assert_allclose(aggregate_outgoing(state, topology, "neck"),
                                   (4.0, 6.0, 0.0))

    def test_matches_incidence_matrices(self, topology):
        state = init_graph_state(torch.randn(17, 3, dtype=torch.float64), topology)
        inc_in, inc_out = incidence_matrices(topology)
        agg_in = state.edge_feats.numpy().T @ inc_in.T
        for j, name in enumerate(topology.joints):
            np.testing.assert_allclose(aggregate_incoming(state, topology, name),
                                       agg_in[:, j], atol=1e-12)


class TestDgnBlock:
    def test_hand_computed_two_joint_update(self):
        """Closed-form oracle on a single-edge graph with unit feature widths."""
        topo = two_joint_topology()
        block = DgnBlock(d_vertex_in=1, d_edge_in=1, d_out=1).double().eval()
        with torch.no_grad():
            block.vertex_fc.weight.copy_(torch.tensor([[1.0, 2.0, 3.0]]))
            block.vertex_fc.bias.copy_(torch.tensor([0.5]))
            block.edge_fc.weight.copy_(torch.tensor([[1.0, -1.0, 2.0]]))
            block.edge_fc.bias.copy_(torch.tensor([-0.25]))
        inc_in, inc_out = incidence_matrices(topo)
        inc_in = torch.as_tensor(inc_in)
        inc_out = torch.as_tensor(inc_out)
        src = torch.as_tensor(topo.edge_sources)
        tgt = torch.as_tensor(topo.edge_targets)

        h = torch.tensor([[2.0], [3.0]], dtype=torch.float64)  # root, tip
        e = torch.tensor([[0.5]], dtype=torch.float64)

        # eval-mode normalization with unit statistics divides by sqrt(1 + eps)
        bn = 1.0 / np.sqrt(1.0 + 1e-5)
        # root: [h=2, in=0, out=0.5] -> 1*2 + 2*0 + 3*0.5 + 0.5 = 4.0
        # tip:  [h=3, in=0.5, out=0] -> 1*3 + 2*0.5 + 3*0 + 0.5 = 4.5
        want_v = np.array([[4.0], [4.5]]) * bn
        # edge: [e=0.5, src'=4.0bn, tgt'=4.5bn] -> 0.5 - 4.0bn + 9.0bn - 0.25
        want_e = np.array([[0.25 + 5.0 * bn]]) * bn

        v_new, e_new = block(h, e, inc_in, inc_out, src, tgt)
        np.testing.assert_allclose(v_new.detach(), want_v, rtol=1e-10)
        np.testing.assert_allclose(e_new.detach(), want_e, rtol=1e-10)

    def test_zero_inputs_zero_biases_give_zero(self, topology):
        block = DgnBlock(3, 3, 4).double().eval()
        with torch.no_grad():
            block.vertex_fc.bias.zero_()
            block.edge_fc.bias.zero_()
        inc_in, inc_out = (torch.as_tensor(m) for m in incidence_matrices(topology))
        v, e = block(torch.zeros(17, 3, dtype=torch.float64),
                     torch.zeros(16, 3, dtype=torch.float64),
                     inc_in, inc_out,
                     torch.as_tensor(topology.edge_sources),
                     torch.as_tensor(topology.edge_targets))
        assert torch.count_nonzero(v) == 0
        assert torch.count_nonzero(e) == 0

    def test_joint_permutation_equivariance(self, topology):
        torch.manual_seed(0)
        block = DgnBlock(3, 3, 5).double().eval()
        inc_in, inc_out = (torch.as_tensor(m) for m in incidence_matrices(topology))
        src = torch.as_tensor(topology.edge_sources)
        tgt = torch.as_tensor(topology.edge_targets)
        h = torch.randn(17, 3, dtype=torch.float64)
        e = torch.randn(16, 3, dtype=torch.float64)
        v1, e1 = block(h, e, inc_in, inc_out, src, tgt)

        perm = torch.randperm(17)
        inverse = torch.empty_like(perm)
        inverse[perm] = torch.arange(17)
        # relabel joints: joint k moves to row inverse[k]
        h_p = h[perm]
        src_p = inverse[src]
        tgt_p = inverse[tgt]
        inc_in_p = inc_in[perm]
        inc_out_p = inc_out[perm]
        v2, e2 = block(h_p, e, inc_in_p, inc_out_p, src_p, tgt_p)
        np.testing.assert_allclose(v2.detach(), v1[perm].detach(), atol=1e-9)
        np.testing.assert_allclose(e2.detach(), e1.detach(), atol=1e-9)


class TestCausalConv:
    def oracle(self, seq, weights, bias, stride):
        """Literal loop over the definition with zero out-of-range frames."""
        length, _ = seq.shape
        k_size, d_out, _ = weights.shape
        out_len = -(-length // stride)
        out = np.zeros((out_len, d_out))
        for t_out in range(out_len):
            acc = bias.copy()
            for k in range(k_size):
                t_in = stride * t_out - k
                if 0 <= t_in < length:
                    acc = acc + weights[k] @ seq[t_in]
            out[t_out] = np.maximum(acc, 0.0)
        return out

    def test_identity_kernel_passthrough(self):
        seq = torch.rand(9, 4, dtype=torch.float64)  # nonnegative input
        weights = torch.eye(4, dtype=torch.float64)[None]
        out = causal_conv(seq, weights, torch.zeros(4, dtype=torch.float64), stride=1)
        np.testing.assert_allclose(out, seq, atol=1e-12)

    def test_stride_two_output_length(self):
        seq = torch.randn(30, 3, dtype=torch.float64)
        weights = torch.randn(3, 3, 3, dtype=torch.float64)
        out = causal_conv(seq, weights, torch.zeros(3, dtype=torch.float64), stride=2)
        assert out.shape == (15, 3)

    def test_matches_loop_oracle(self):
        rng = np.random.default_rng(4)
        for stride in (1, 2, 3):
            for k_size in (1, 2, 4):
                seq = rng.normal(0, 1, (17, 3))
                weights = rng.normal(0, 1, (k_size, 5, 3))
                bias = rng.normal(0, 1, 5)
                got = causal_conv(torch.as_tensor(seq), torch.as_tensor(weights),
                                  torch.as_tensor(bias), stride=stride)
                np.testing.assert_allclose(got, self.oracle(seq, weights, bias, stride),
                                           atol=1e-12)

    def test_future_frames_do_not_leak(self):
        rng = np.random.default_rng(5)
        seq = rng.normal(0, 1, (12, 2))
        weights = rng.normal(0, 1, (3, 2, 2))
        bias = rng.normal(0, 1, 2)
        base = causal_conv(torch.as_tensor(seq), torch.as_tensor(weights),
                           torch.as_tensor(bias), stride=2)
        bumped = seq.copy()
        bumped[7:] += 10.0
        out = causal_conv(torch.as_tensor(bumped), torch.as_tensor(weights),
                          torch.as_tensor(bias), stride=2)
        # outputs 0..3 consume frames <= 6 only
        np.testing.assert_allclose(out[:4], base[:4], atol=1e-12)

    def test_module_lag_weights_round_trip(self):
        conv = CausalConv(3, 5, kernel_size=4, stride=2).double()
        seq = torch.randn(11, 3, dtype=torch.float64)
        module_out = conv(seq.T[None])[0].T
        functional = causal_conv(seq, conv.lag_weights(), conv.conv.bias, stride=2)
        np.testing.assert_allclose(module_out.detach(), functional.detach(), atol=1e-12)


class TestPoseEncoder:
    def make(self, topology, dtype=torch.float64):
        enc = PoseEncoder(topology, EncoderConfig(block_widths=(4, 4),
                                                  kernel_sizes=(3, 3), strides=(2, 3),
                                                  embed_dim=8))
        seed_parameters(enc, 0)
        return enc.to(dtype).eval()

    def test_sixty_frames_give_ten_embeddings(self, topology):
        enc = self.make(topology)
        out = enc(torch.randn(2, 60, 17, 3, dtype=torch.float64))
        assert out.shape == (2, 10, 8)

    def test_stride_product_must_be_six(self):
        with pytest.raises(ValueError, match="stride product"):
            EncoderConfig(block_widths=(4, 4), kernel_sizes=(3, 3), strides=(2, 2))

    def test_players_encoded_independently(self, topology):
        enc = self.make(topology)
        x = torch.randn(2, 30, 17, 3, dtype=torch.float64)
        out = enc(x)
        swapped = enc(x.flip(0))
        np.testing.assert_allclose(swapped.detach(), out.flip(0).detach(), atol=1e-12)

    def test_duplicate_input_duplicate_embedding(self, topology):
        enc = self.make(topology)
        x = torch.randn(1, 30, 17, 3, dtype=torch.float64)
        pair = torch.cat([x, x])
        out = enc(pair)
        np.testing.assert_allclose(out[0].detach(), out[1].detach(), atol=1e-14)

    def test_causality_over_full_pipeline(self, topology):
        enc = self.make(topology)
        x = torch.randn(1, 60, 17, 3, dtype=torch.float64)
        base = enc(x).detach()
        for t_cut in (3, 6, 9):
            bumped = x.clone()
            bumped[:, 6 * t_cut :] += 5.0
            out = enc(bumped).detach()
            np.testing.assert_allclose(out[:, :t_cut], base[:, :t_cut], atol=1e-12)

    def test_zero_input_zero_bias_fixed_point(self, topology):
        enc = self.make(topology)
        with torch.no_grad():
            for name, param in enc.named_parameters():
                if "bias" in name:
                    param.zero_()
        out = enc(torch.zeros(1, 30, 17, 3, dtype=torch.float64))
        np.testing.assert_allclose(out.detach(), 0.0, atol=1e-12)

    def test_pooled_embedding_invariant_to_joint_relabeling(self, topology):
        """Mean pooling makes the embedding independent of joint order."""
        perm = np.random.default_rng(1).permutation(17)
        joints = tuple(topology.joints[k] for k in perm)
        relabeled = SkeletonTopology(
            joints=joints,
            root=topology.root,
            edges=topology.edges,
            topo_order=topology.topo_order,
        )
        enc_a = self.make(topology)
        enc_b = PoseEncoder(relabeled, enc_a.config).double().eval()
        enc_b.load_state_dict(
            {k: v for k, v in enc_a.state_dict().items()
             if not k.startswith(("inc_", "src_", "tgt_"))},
            strict=False,
        )
        x = torch.randn(1, 30, 17, 3, dtype=torch.float64)
        x_perm = x[:, :, torch.as_tensor(perm), :]
        np.testing.assert_allclose(enc_b(x_perm).detach(), enc_a(x).detach(), atol=1e-9)

    def test_functional_wrapper_shape(self, topology):
        enc = self.make(topology)
        out = encode_pose_window(np.random.default_rng(0).normal(size=(60, 17, 3)),
                                 topology, enc.config, encoder=enc)
        assert out.shape == (10, 8)
