import numpy as np
import pytest

from fdcheck import max_rel_error, numeric_grads
from gnnfix import (
    ORIENT,
    LENGTH,
    TINY,
    branched_graph,
    chain_graph,
    permute_batch,
    permute_obs,
    random_batch,
    randomize,
    single_node_graph,
    space_for,
)
from sgmorph.graph_rl import (
    GnnSac,
    GraphBatch,
    GraphNetwork,
    NoMatchingGraphError,
    PredictorNet,
    design_features,
    distillation_metrics,
    gnn_train_iterations,
    graph_layout,
    graph_sac_actor_loss,
    graph_sac_critic_loss,
    node_features,
    pretrain_specialist,
    relabel_states,
    sample_multi_batch,
)
from sgmorph.morphology import Design, build_catalog, sample_random_design
from sgmorph.numerics import autodiff as ad
from sgmorph.rl import MlpSac, ReplayBufferSet, SacConfig, sac_actor_loss, sac_critic_loss


def _gnn(rng, per_node=1, scale=0.6):
    gnn = GnnSac(per_node, rng, TINY)
    randomize(gnn.networks().values(), rng, scale)
    return gnn


# --- message passing ------------------------------------------------------------------


def test_isolated_node_receives_no_messages():
    rng = np.random.default_rng(0)
    net = GraphNetwork(3, 2, TINY, rng)
    randomize([net], rng)
    g = single_node_graph()
    x = rng.standard_normal((4, 3))
    layout = graph_layout(g, 4)
    h = np.zeros((4, TINY.hidden_size))
    for _ in range(TINY.rounds):
        h = net.process.forward_np(np.hstack([x, np.zeros((4, TINY.message_size)), h]))
    assert np.array_equal(net.latents(x, layout).data, h)


def test_message_passing_deterministic():
    rng = np.random.default_rng(1)
    net = GraphNetwork(3, 2, TINY, rng)
    g = chain_graph(3)
    x = rng.standard_normal((6, 3))
    assert np.array_equal(net(x, graph_layout(g, 2)).data, net(x, graph_layout(g, 2)).data)


def test_wrong_input_width_rejected():
    rng = np.random.default_rng(2)
    net = GraphNetwork(3, 2, TINY, rng)
    with pytest.raises(ad.ShapeError):
        net(np.zeros((3, 4)), graph_layout(chain_graph(3), 1))


def test_node_feature_layout():
    g = chain_graph(2)
    d = Design(space_for(g, (LENGTH, ORIENT)), [0.2, 1.0, 0.6, -1.0])
    obs = np.array([[10, 11, 12, 13, 14, 0.1, 0.2, 0.3, 0.4]])
    x = node_features(obs, design_features(d))
    assert x.tolist() == [
        [0.1, 0.2, 10, 11, 12, 13, 14, -1.0, 1.0],
        [0.3, 0.4, 10, 11, 12, 13, 14, 1.0, -1.0],
    ]


@pytest.mark.parametrize("graph", [chain_graph(3), branched_graph()], ids=["chain3", "branched5"])
def test_actor_outputs_permute_with_relabeling(graph):
    rng = np.random.default_rng(3)
    gnn = _gnn(rng)
    d = sample_random_design(space_for(graph), rng)
    perm = rng.permutation(graph.n_nodes)
    obs = rng.standard_normal((5, 5 + 2 * graph.n_nodes))
    base = gnn.policy_for(graph, d)(obs)
    moved = gnn.policy_for(graph.permuted(perm), d.permuted(perm))(permute_obs(obs, perm))
    assert np.max(np.abs(moved.mean.data - base.mean.data[:, perm])) <= 1e-9
    assert np.max(np.abs(moved.log_std.data - base.log_std.data[:, perm])) <= 1e-9


# --- losses ---------------------------------------------------------------------------


def _mlp_view(gnn, graph, design):
    policy = gnn.policy_for(graph, design)
    critics = tuple(gnn.node_q_for(n, graph, design) for n in (gnn.q1, gnn.q2))
    targets = tuple(gnn.node_q_for(n, graph, design) for n in (gnn.q1_target, gnn.q2_target))
    return policy, critics, targets


@pytest.mark.parametrize("seed", range(5))
def test_single_node_losses_reduce_to_mlp_losses(seed):
    rng = np.random.default_rng(seed)
    gnn = _gnn(rng)
    g = single_node_graph()
    d = sample_random_design(space_for(g), rng)
    batch = random_batch(g, 9, rng)
    noise = rng.standard_normal((9, 1))
    policy, critics, targets = _mlp_view(gnn, g, d)
    mb = [GraphBatch(g, d, batch)]
    lq = graph_sac_critic_loss(mb, gnn, 0.01, 0.975, [noise]).item()
    assert abs(lq - sac_critic_loss(batch, policy, critics, targets, 0.01, 0.975, noise).item()) <= 1e-12
    lpi = graph_sac_actor_loss(mb, gnn, 0.01, [noise]).item()
    assert abs(lpi - sac_actor_loss(batch, policy, critics, 0.01, noise).item()) <= 1e-12


def test_critic_loss_zero_when_q_matches_target():
    rng = np.random.default_rng(4)
    gnn = _gnn(rng)
    g = chain_graph(3)
    batch = random_batch(g, 6, rng, done=1)
    batch.r[:] = 0.75
    for net in (gnn.q1, gnn.q2):
        w, b = net.output.weights[-1], net.output.biases[-1]
        w.data[:] = 0.0
        b.data[:] = 0.75
    d = sample_random_design(space_for(g), rng)
    noise = rng.standard_normal((6, 3))
    assert graph_sac_critic_loss([GraphBatch(g, d, batch)], gnn, 0.01, 0.975, [noise]).item() == 0.0


@pytest.mark.parametrize("graph", [chain_graph(3), branched_graph()], ids=["chain3", "branched5"])
def test_losses_invariant_under_relabeling(graph):
    rng = np.random.default_rng(5)
    gnn = _gnn(rng)
    d = sample_random_design(space_for(graph), rng)
    batch = random_batch(graph, 7, rng)
    noise = rng.standard_normal((7, graph.n_nodes))
    perm = rng.permutation(graph.n_nodes)
    a = [GraphBatch(graph, d, batch)]
    b = [GraphBatch(graph.permuted(perm), d.permuted(perm), permute_batch(batch, perm))]
    pn = noise[:, perm]
    assert graph_sac_critic_loss(a, gnn, 0.01, 0.975, [noise]).item() == pytest.approx(
        graph_sac_critic_loss(b, gnn, 0.01, 0.975, [pn]).item(), abs=1e-9
    )
    assert graph_sac_actor_loss(a, gnn, 0.01, [noise]).item() == pytest.approx(
        graph_sac_actor_loss(b, gnn, 0.01, [pn]).item(), abs=1e-9
    )


def test_multi_graph_loss_is_mean_of_per_graph_losses():
    rng = np.random.default_rng(6)
    gnn = _gnn(rng)
    graphs = [chain_graph(2), branched_graph(), chain_graph(3)]
    mb, noises = [], []
    for k, g in enumerate(graphs):
        mb.append(GraphBatch(g, sample_random_design(space_for(g), rng), random_batch(g, 4 + k, rng)))
        noises.append(rng.standard_normal((4 + k, g.n_nodes)))
    joint_q = graph_sac_critic_loss(mb, gnn, 0.01, 0.975, noises).item()
    joint_pi = graph_sac_actor_loss(mb, gnn, 0.01, noises).item()
    each_q = [graph_sac_critic_loss([m], gnn, 0.01, 0.975, [z]).item() for m, z in zip(mb, noises)]
    each_pi = [graph_sac_actor_loss([m], gnn, 0.01, [z]).item() for m, z in zip(mb, noises)]
    assert abs(joint_q - np.mean(each_q)) <= 1e-12
    assert abs(joint_pi - np.mean(each_pi)) <= 1e-12


def test_constant_critic_actor_gradient_only_from_entropy():
    rng = np.random.default_rng(7)
    gnn = _gnn(rng)
    for net in (gnn.q1, gnn.q2):
        net.output.weights[-1].data[:] = 0.0
    g = chain_graph(3)
    mb = [GraphBatch(g, sample_random_design(space_for(g), rng), random_batch(g, 5, rng))]
    noise = [rng.standard_normal((5, 3))]
    with ad.Tape() as tape:
        loss = graph_sac_actor_loss(mb, gnn, 0.0, noise)
    assert all(np.all(gr == 0.0) for gr in tape.gradient(loss, gnn.actor.params()))
    with ad.Tape() as tape:
        loss = graph_sac_actor_loss(mb, gnn, 0.5, noise)
    assert any(np.any(gr != 0.0) for gr in tape.gradient(loss, gnn.actor.params()))


def test_graph_critic_gradient_matches_finite_differences():
    rng = np.random.default_rng(8)
    gnn = _gnn(rng, scale=0.4)
    g = chain_graph(3)
    mb = [GraphBatch(g, sample_random_design(space_for(g), rng), random_batch(g, 3, rng))]
    noise = [rng.standard_normal((3, 3))]
    params = gnn.q1.params()
    with ad.Tape() as tape:
        loss = graph_sac_critic_loss(mb, gnn, 0.01, 0.975, noise)
    analytic = tape.gradient(loss, params)
    numeric = numeric_grads(lambda: graph_sac_critic_loss(mb, gnn, 0.01, 0.975, noise).item(), params)
    assert max_rel_error(analytic, numeric) < 1e-4


# --- training plumbing ------------------------------------------------------------------


def _filled_buffers(rng, designs_per_graph=2, steps=20):
    pool = build_catalog("halfcheetah")
    bs = ReplayBufferSet(capacity=1000)
    for g in list(pool)[:3]:
        for _ in range(designs_per_graph):
            d = sample_random_design(pool.design_space(g), rng)
            buf = bs.create(g, d, 5 + 2 * g.n_nodes, g.n_nodes)
            b = random_batch(g, steps, rng)
            for k in range(steps):
                buf.add(b.s[k], b.a[k], b.r[k, 0], b.s2[k], b.done[k, 0], start=k % 10 == 0)
    return pool, bs


def test_multi_batch_composition():
    rng = np.random.default_rng(9)
    _, bs = _filled_buffers(rng)
    key = bs.keys()[2]
    mb = sample_multi_batch(bs, key, rng, 8, 5)
    assert len(mb) == 5 and len(mb[0].batch) == 8
    assert (mb[0].graph.morphology_id, tuple(mb[0].design.values)) == key
    only = ReplayBufferSet()
    only_key = None
    for k in bs.keys()[:1]:
        src = bs[k]
        only.create(src.graph, src.design, src.obs_dim, src.act_dim).add(src.s[0], src.a[0], 0.0, src.s2[0], False)
        only_key = k
    assert len(sample_multi_batch(only, only_key, rng, 8, 5)) == 1


def test_gnn_training_runs_and_is_deterministic():
    def train(seed):
        rng = np.random.default_rng(seed)
        _, bs = _filled_buffers(rng)
        gnn = GnnSac(1, rng, TINY)
        gnn_train_iterations(bs, gnn, 3, rng, current_key=bs.keys()[0])
        return gnn.actor.arrays() + gnn.q1.arrays()

    assert all(np.array_equal(a, b) for a, b in zip(train(0), train(0)))


def test_snapshot_roundtrip(tmp_path):
    rng = np.random.default_rng(10)
    gnn = _gnn(rng)
    path = tmp_path / "gnn.npz"
    gnn.save(path)
    back = GnnSac.from_snapshot(path)
    for name, net in gnn.networks().items():
        assert all(np.array_equal(a, b) for a, b in zip(net.arrays(), back.networks()[name].arrays()))
    with pytest.raises(ValueError):
        GnnSac(2, rng, TINY).load(path)


# --- transfer -----------------------------------------------------------------------


def test_relabel_sizes_and_identity():
    rng = np.random.default_rng(11)
    pool, bs = _filled_buffers(rng, steps=30)
    g = pool[0]
    target = sample_random_design(pool.design_space(g), rng)
    ds = relabel_states(bs, g, target, 500, rng)
    assert len(ds) == 500 and ds.design == target
    source = {row.tobytes() for b in bs.matching_graph(g.morphology_id) for row in b.transitions().s}
    assert all(row.tobytes() in source for row in ds.states)
    with pytest.raises(NoMatchingGraphError):
        relabel_states(bs, pool[6], sample_random_design(pool.design_space(pool[6]), rng), 10, rng)


def test_relabel_large_request_uses_replacement():
    rng = np.random.default_rng(12)
    pool = build_catalog("halfcheetah")
    g = pool[0]
    bs = ReplayBufferSet()
    buf = bs.create(g, sample_random_design(pool.design_space(g), rng), 9, 2)
    for _ in range(60_000):
        buf.add(np.zeros(9), np.zeros(2), 0.0, np.zeros(9), False)
    ds = relabel_states(bs, g, sample_random_design(pool.design_space(g), rng), 200_000, rng)
    assert len(ds) == 200_000


def test_pretrain_leaves_generalist_untouched_and_sets_temperature():
    rng = np.random.default_rng(13)
    pool, bs = _filled_buffers(rng)
    g = pool[2]
    gnn = _gnn(rng, scale=0.3)
    before = {k: net.arrays() for k, net in gnn.networks().items()}
    ds = relabel_states(bs, g, sample_random_design(pool.design_space(g), rng), 100, rng)
    sac = MlpSac(5 + 2 * g.n_nodes, g.n_nodes, rng, SacConfig(hidden=(8,)))
    pretrain_specialist(ds, gnn, sac, 5, rng, batch_size=16)
    for k, net in gnn.networks().items():
        assert all(a.tobytes() == b.tobytes() for a, b in zip(before[k], net.arrays()))
    assert sac.alpha == pytest.approx(0.01 / g.n_nodes)
    for online, target in ((sac.q1, sac.q1_target), (sac.q2, sac.q2_target)):
        assert all(np.array_equal(a.data, b.data) for a, b in zip(online.params(), target.params()))


def test_temperature_for_five_nodes():
    rng = np.random.default_rng(14)
    pool, bs = _filled_buffers(rng)
    g = branched_graph()
    space = space_for(g)
    buf = bs.create(g, sample_random_design(space, rng), 15, 5)
    b = random_batch(g, 10, rng)
    for k in range(10):
        buf.add(b.s[k], b.a[k], 0.0, b.s2[k], False)
    ds = relabel_states(bs, g, sample_random_design(space, rng), 20, rng)
    sac = MlpSac(15, 5, rng, SacConfig(hidden=(8,)))
    pretrain_specialist(ds, GnnSac(1, rng, TINY), sac, 1, rng, batch_size=4)
    assert sac.alpha == pytest.approx(0.002)


def test_value_distillation_improves_on_average():
    rng = np.random.default_rng(15)
    pool, bs = _filled_buffers(rng)
    g = pool[0]
    gnn = _gnn(rng, scale=0.5)
    ds = relabel_states(bs, g, sample_random_design(pool.design_space(g), rng), 10, rng)
    sac = MlpSac(9, 2, rng, SacConfig(hidden=(32, 32)))
    hist = np.array(pretrain_specialist(ds, gnn, sac, 100, rng, batch_size=10))[:, 1]
    assert hist[50:].mean() < hist[:50].mean()
    assert distillation_metrics(ds, gnn, sac)[1] < hist[0]


# --- predictor -----------------------------------------------------------------------


def test_predictor_untrained_flag():
    pred = PredictorNet(1, np.random.default_rng(16), TINY)
    g = chain_graph(2)
    assert pred.evaluate(g, sample_random_design(space_for(g), np.random.default_rng(0))) == (0.0, False)


def test_predictor_overfits_single_item():
    rng = np.random.default_rng(17)
    pred = PredictorNet(1, rng, TINY)
    g = chain_graph(3)
    d = sample_random_design(space_for(g), rng)
    pred.train([(g, d, 42.0)], 1000, rng)
    value, ok = pred.evaluate(g, d)
    assert ok and (value - 42.0) ** 2 < 1e-3


def test_predictor_relabel_invariant_and_deterministic():
    rng = np.random.default_rng(18)
    pred = PredictorNet(1, rng, TINY)
    g = branched_graph()
    items = [(g, sample_random_design(space_for(g), rng), float(k)) for k in range(4)]
    pred.train(items, 50, rng)
    d = items[0][1]
    perm = [4, 2, 0, 3, 1]
    a, _ = pred.evaluate(g, d)
    b, _ = pred.evaluate(g.permuted(perm), d.permuted(perm))
    assert a == pytest.approx(b, abs=1e-9)
    assert pred.evaluate(g, d) == pred.evaluate(g, d)
