import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from specnet.graph import dirichlet_energy, spectrum_dense
from specnet.homogenize import (
    AssemblyError,
    BlockModel,
    assemble_network,
    corridor_chain,
    corridor_length,
    corridor_min_energy,
    default_block,
    diamond_block,
    effective_conductance,
    macro_laplacian,
)
from specnet.prescribe import SpectralTarget, pad_targets, prescribe_complete_graph
from specnet.topology import walecki_decomposition


@pytest.fixture(scope="module")
def k5_solution():
    return prescribe_complete_graph(5, 1.0, [1.0, 3.0, 6.0, 7.0], seed=0)


@pytest.fixture(scope="module")
def k5_target():
    return SpectralTarget(targets=(1.0, 3.0), N=5)


@pytest.fixture(scope="module")
def net(k5_target, k5_solution):
    ca = walecki_decomposition(5, orientation_seed=0)
    return assemble_network(k5_target, k5_solution, default_block(D=2), ca, m=4, seed=0)


def two_node_block(c1, c2):
    return BlockModel(
        measures=(0.5, 0.5),
        internal_edges=((0, 1, c1),),
        ports={0: (0, 1)},
        port_conductance={0: c2},
    )


class TestEffectiveConductance:
    def test_single_node_equals_port_conductance(self):
        for c in (1.0, 2.5):
            b = default_block(D=2, port_conductance=c)
            for color in range(2):
                cell = effective_conductance(b, color)
                assert cell.C == pytest.approx(c, rel=1e-14)

    def test_two_node_series_law(self):
        c1, c2 = 3.0, 1.5
        cell = effective_conductance(two_node_block(c1, c2), 0)
        assert cell.C == pytest.approx(1.0 / (1.0 / c1 + 1.0 / c2), rel=1e-12)

    def test_diamond_closed_forms(self):
        b = diamond_block()
        # color 0: sealing color 1 merges nodes 1 and 2, two series resistors
        # of conductance 3 each, then the 1.5 port: C = 1/(1/3 + 1/3 + 1/1.5)
        cell0 = effective_conductance(b, 0)
        assert cell0.C == pytest.approx(0.75, rel=1e-12)
        # color 1: sealing color 0 merges nodes 0 and 3 -> 1 -3- 03 -3- 2,
        # then the unit port: C = 1/(2/3 + 1)
        cell1 = effective_conductance(b, 1)
        assert cell1.C == pytest.approx(0.6, rel=1e-12)

    def test_gauge_and_jump(self):
        b = diamond_block()
        for color in range(2):
            cell = effective_conductance(b, color)
            in_node = b.ports[color][0]
            assert cell.chi[in_node] == 0.0

    def test_positivity_random_blocks(self):
        rng = np.random.default_rng(1)
        for _ in range(10):
            n = int(rng.integers(2, 6))
            edges = tuple(
                (i, i + 1, float(rng.uniform(0.2, 3.0))) for i in range(n - 1)
            )
            ports = {0: (0, n - 1), 1: (int(rng.integers(n)), int(rng.integers(n)))}
            b = BlockModel(
                measures=tuple(rng.uniform(0.1, 1.0, size=n)),
                internal_edges=edges,
                ports=ports,
                port_conductance={0: 1.0, 1: 2.0},
            )
            for color in range(2):
                assert effective_conductance(b, color).C > 0


class TestCorridorMinEnergy:
    @pytest.mark.parametrize("K", [1, 2, 3, 8, 20])
    def test_single_node_series_law(self, K):
        b = default_block(D=2)
        energy, _ = corridor_min_energy(b, 0, K, 0.0, 1.0)
        assert energy == pytest.approx(1.0 / (K + 1), rel=1e-12)

    def test_equal_clamps_zero_energy(self):
        b = diamond_block()
        energy, _ = corridor_min_energy(b, 1, 5, 0.7, 0.7)
        assert energy == pytest.approx(0.0, abs=1e-14)

    def test_scaling_in_gap(self):
        b = diamond_block()
        e1, _ = corridor_min_energy(b, 0, 6, 0.0, 1.0)
        e2, _ = corridor_min_energy(b, 0, 6, 1.0, 3.0)
        assert e2 == pytest.approx(4.0 * e1, rel=1e-12)

    @pytest.mark.parametrize("color", [0, 1])
    def test_upper_law_fit(self, color):
        b = diamond_block()
        C = effective_conductance(b, color).C
        ks = np.array([4, 8, 16, 32, 64])
        gaps = []
        for K in ks:
            energy, _ = corridor_min_energy(b, color, int(K), 0.0, 1.0)
            gaps.append(abs(K * energy - C))
        gaps = np.array(gaps)
        assert np.all(gaps > 0)
        slope = np.polyfit(np.log(ks), np.log(gaps), 1)[0]
        assert -1.5 <= slope <= -0.5
        # residual bounded by const / K
        assert np.all(gaps <= (gaps[0] * ks[0] * 1.5) / ks)


class TestCorridorLowerBound:
    @pytest.mark.parametrize(
        "block_builder,color,K",
        [
            (lambda: default_block(D=2), 0, 5),
            (diamond_block, 0, 4),
            (diamond_block, 1, 8),
        ],
    )
    def test_flux_average_bound(self, block_builder, color, K):
        b = block_builder()
        C = effective_conductance(b, color).C
        g, entry, exit_, _ = corridor_chain(b, color, K)
        rng = np.random.default_rng(7)
        for _ in range(100):
            u = rng.standard_normal(g.vertex_count)
            gap = u[exit_] - u[entry]
            assert dirichlet_energy(g, u) >= (C / K) * gap**2 * (1 - 1e-12)


class TestCorridorLength:
    def test_simple(self):
        assert corridor_length(10, 1.0, 2.0) == 5

    def test_worked_example_weight(self):
        w12 = math.pi * (8 + math.sqrt(10)) / 3
        assert corridor_length(100, 1.0, w12) == 8

    def test_too_small_m(self):
        with pytest.raises(AssemblyError):
            corridor_length(1, 1.0, 2.0)


class TestAssembleNetwork:
    def test_node_count_bookkeeping(self, net):
        total_corridor = sum(net.corridor_lengths.values())
        assert net.graph.vertex_count == 5 * 64 + total_corridor
        assert np.sum(net.cluster_of >= 0) == 5 * 64
        assert np.sum(net.corridor_of >= 0) == total_corridor

    def test_partition(self, net):
        in_cluster = net.cluster_of >= 0
        in_corridor = net.corridor_of >= 0
        assert np.all(in_cluster ^ in_corridor)
        for v in range(5):
            assert net.cluster_nodes(v).size == 64
        for key, K_e in net.corridor_lengths.items():
            assert net.corridor_nodes(key).size == K_e

    def test_total_measure(self, net):
        expected = 5 * 64 * 1.0 + sum(net.corridor_lengths.values()) * 1.0
        assert net.graph.total_measure == pytest.approx(expected, rel=1e-12)

    def test_degree_structure(self, net):
        g = net.graph
        deg = np.zeros(g.vertex_count)
        u, v, w = g.edge_arrays
        np.add.at(deg, u, 1)
        np.add.at(deg, v, 1)
        # single-node block, D=2: cluster nodes keep degree 4 (port edges are
        # replaced by corridor attachments), corridor nodes sit in chains
        assert np.all(deg[net.cluster_of >= 0] == 4)
        assert np.all(deg[net.corridor_of >= 0] == 2)

    def test_per_color_degree_structure(self, net):
        # every cluster node sees exactly one incoming and one outgoing face
        # per color: two color-c edges each, with port edges replaced by
        # corridor attachments of the same color
        g = net.graph
        per_color = {0: np.zeros(g.vertex_count), 1: np.zeros(g.vertex_count)}
        for u, v, _, color in g.edges():
            if color is not None:
                per_color[color][u] += 1
                per_color[color][v] += 1
        cluster_mask = net.cluster_of >= 0
        for color in (0, 1):
            assert np.all(per_color[color][cluster_mask] == 2)

    def test_iterative_matches_dense_at_m8(self, k5_target, k5_solution):
        # the m=8 network exceeds the default dense threshold; raise it to
        # cross-check the iterative path against the dense oracle
        ca = walecki_decomposition(5, orientation_seed=0)
        net = assemble_network(k5_target, k5_solution, default_block(D=2), ca, m=8, seed=0)
        from specnet.graph import spectrum_smallest_k

        it = spectrum_smallest_k(net.graph, k=6, tol=1e-9, seed=0)
        dense = spectrum_dense(net.graph, with_vectors=False, dense_threshold=4000)
        assert np.max(np.abs(it.eigenvalues - dense.eigenvalues[:6])) <= 1e-9

    def test_corridor_lengths_match_definition(self, net, k5_solution):
        for key, K_e in net.corridor_lengths.items():
            color = net.color_assignment.edge_color[key]
            C = net.cells[color].C
            assert K_e == math.floor(4 * C / k5_solution.weights[key])

    @pytest.mark.parametrize("seed", range(10))
    def test_connected_across_seeds(self, seed, k5_target, k5_solution):
        ca = walecki_decomposition(5, orientation_seed=seed)
        net = assemble_network(
            k5_target, k5_solution, default_block(D=2), ca, m=4, seed=seed
        )
        assert net.graph.is_connected()

    def test_deterministic(self, k5_target, k5_solution):
        ca = walecki_decomposition(5, orientation_seed=1)
        a = assemble_network(k5_target, k5_solution, default_block(D=2), ca, m=4, seed=42)
        b = assemble_network(k5_target, k5_solution, default_block(D=2), ca, m=4, seed=42)
        ua, va, wa = a.graph.edge_arrays
        ub, vb, wb = b.graph.edge_arrays
        assert np.array_equal(ua, ub) and np.array_equal(va, vb)
        assert np.array_equal(wa, wb)

    def test_m_too_small(self, k5_target, k5_solution):
        ca = walecki_decomposition(5, orientation_seed=0)
        with pytest.raises(AssemblyError):
            assemble_network(k5_target, k5_solution, default_block(D=2), ca, m=1, seed=0)


class TestAssembleVariants:
    def test_seven_vertices_three_colors(self):
        # D = 3 path: three permutation classes per cluster, corridors in
        # three colors
        t = SpectralTarget(targets=(1.0, 2.0), N=7)
        mu = pad_targets(t, 1.0)
        ws = prescribe_complete_graph(7, 1.0, mu, seed=0)
        ca = walecki_decomposition(7, orientation_seed=0)
        net = assemble_network(t, ws, default_block(D=3), ca, m=4, seed=0)
        assert net.D == 3
        total_corridor = sum(net.corridor_lengths.values())
        assert net.graph.vertex_count == 7 * 64 + total_corridor
        assert len(net.corridor_lengths) == 21
        assert net.graph.is_connected()
        deg = np.zeros(net.graph.vertex_count)
        u, v, _ = net.graph.edge_arrays
        np.add.at(deg, u, 1)
        np.add.at(deg, v, 1)
        assert np.all(deg[net.cluster_of >= 0] == 6)

    def test_diamond_block_assembly(self, k5_target):
        # multi-node blocks: cluster copies keep all four nodes, corridor
        # copies are sealed down to three
        ws = prescribe_complete_graph(5, 1.0, [1.0, 3.0, 6.0, 7.0], seed=0, max_weight=2.0)
        ca = walecki_decomposition(5, orientation_seed=0)
        block = diamond_block()
        net = assemble_network(k5_target, ws, block, ca, m=4, seed=0)
        total_corridor = sum(net.corridor_lengths.values())
        assert np.sum(net.cluster_of >= 0) == 5 * 64 * 4
        assert np.sum(net.corridor_of >= 0) == total_corridor * 3
        expected_measure = 5 * 64 * block.V_F + total_corridor * block.V_F
        assert net.graph.total_measure == pytest.approx(expected_measure, rel=1e-12)
        assert net.graph.is_connected()
        for key, K_e in net.corridor_lengths.items():
            color = net.color_assignment.edge_color[key]
            assert K_e == math.floor(4 * net.cells[color].C / ws.weights[key])
        vals = spectrum_dense(net.graph, with_vectors=False, dense_threshold=3000).eigenvalues
        assert abs(vals[0]) < 1e-10
        assert vals[1] > 0


class TestMacroLaplacian:
    def test_definitional_formulas(self, k5_solution):
        ca = walecki_decomposition(5, orientation_seed=0)
        b = default_block(D=2)
        cells = {i: effective_conductance(b, i) for i in range(2)}
        m = 8
        g = macro_laplacian(k5_solution, ca, cells, m, V_F=1.0)
        assert_allclose(g.measures, np.full(5, m**3))
        for key, color in ca.edge_color.items():
            K_e = corridor_length(m, cells[color].C, k5_solution.weights[key])
            w = g.weight(*key)
            assert w * K_e == pytest.approx(cells[color].C, rel=1e-14)

    def test_kernel_zero(self, k5_solution):
        ca = walecki_decomposition(5, orientation_seed=0)
        b = default_block(D=2)
        cells = {i: effective_conductance(b, i) for i in range(2)}
        g = macro_laplacian(k5_solution, ca, cells, 16, V_F=1.0)
        vals = spectrum_dense(g).eigenvalues
        assert abs(vals[0]) < 1e-15

    def test_scaling_toward_reference(self, k5_solution, k5_target):
        ca = walecki_decomposition(5, orientation_seed=0)
        b = default_block(D=2)
        cells = {i: effective_conductance(b, i) for i in range(2)}
        mu = pad_targets(k5_target, 1.0)
        errs = []
        for m in (8, 16, 32, 64):
            g = macro_laplacian(k5_solution, ca, cells, m, V_F=1.0)
            lam = spectrum_dense(g).eigenvalues[1:]
            rel = np.abs(m**4 * lam / mu - 1.0)
            errs.append(np.max(rel))
            assert np.max(rel) <= 10.0 / m
        # error shrinks roughly like 1/m
        assert errs[-1] < errs[0]
