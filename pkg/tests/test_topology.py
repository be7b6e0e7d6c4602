import pytest
from numpy.testing import assert_allclose

from specnet.graph import MeasuredGraph, spectrum_dense
from specnet.prescribe import solve_p3_closed_form
from specnet.surface import pinch_model, rescaled_spectrum
from specnet.topology import (
    SurfaceModel,
    complete_surface_model,
    euler_genus_of_dual,
    genus_complete_construction,
    p3_surface_model,
    walecki_decomposition,
)


def all_pairs(N):
    return {(u, v) for u in range(N) for v in range(u + 1, N)}


class TestWalecki:
    def test_n5_shape(self):
        ca = walecki_decomposition(5)
        assert len(ca.cycles) == 2
        assert sum(len(c) for c in ca.cycles) == 10
        assert set(ca.edge_color) == all_pairs(5)

    def test_n7_brute_force_cover(self):
        ca = walecki_decomposition(7, orientation_seed=3)
        seen = []
        for cyc in ca.cycles:
            assert sorted(cyc) == list(range(7))  # Hamiltonian
            for i in range(len(cyc)):
                u, v = cyc[i], cyc[(i + 1) % len(cyc)]
                seen.append((min(u, v), max(u, v)))
        assert len(seen) == len(set(seen)) == 21
        assert set(seen) == all_pairs(7)

    def test_even_n_rejected(self):
        with pytest.raises(ValueError):
            walecki_decomposition(4)
        with pytest.raises(ValueError):
            walecki_decomposition(3)

    @pytest.mark.parametrize("N", [5, 7, 9, 11])
    def test_color_degree_structure(self, N):
        ca = walecki_decomposition(N, orientation_seed=1)
        for color in range(ca.D):
            outs = {}
            ins = {}
            for tail, head in ca.directed_edges(color):
                assert tail not in outs
                assert head not in ins
                outs[tail] = head
                ins[head] = tail
            assert set(outs) == set(range(N))
            assert set(ins) == set(range(N))

    @pytest.mark.parametrize("N", [5, 7, 9, 11])
    def test_edge_disjoint_cover(self, N):
        ca = walecki_decomposition(N, orientation_seed=7)
        assert set(ca.edge_color) == all_pairs(N)
        counts = {}
        for cyc in ca.cycles:
            for i in range(len(cyc)):
                u, v = cyc[i], cyc[(i + 1) % len(cyc)]
                key = (min(u, v), max(u, v))
                counts[key] = counts.get(key, 0) + 1
        assert all(c == 1 for c in counts.values())

    def test_orientation_seed_recorded(self):
        a = walecki_decomposition(7, orientation_seed=0)
        b = walecki_decomposition(7, orientation_seed=0)
        assert a.cycles == b.cycles
        assert a.orientations == b.orientations


class TestGenus:
    def test_small_values(self):
        assert genus_complete_construction(4) == 3
        assert genus_complete_construction(5) == 6
        assert genus_complete_construction(6) == 10

    def test_rejects_small_n(self):
        with pytest.raises(ValueError):
            genus_complete_construction(3)

    def test_p3_worked_example(self):
        w12, w23 = solve_p3_closed_form(1.0, 3.0)
        model = p3_surface_model(w12, w23)
        assert euler_genus_of_dual(model) == 3

    @pytest.mark.parametrize("N", range(4, 11))
    def test_complete_model_matches_formula(self, N):
        weights = {p: 1.0 for p in all_pairs(N)}
        model = complete_surface_model(N, weights)
        assert euler_genus_of_dual(model) == genus_complete_construction(N)

    def test_isolated_vertex(self):
        g = MeasuredGraph([1.0], [])
        model = SurfaceModel(dual_graph=g, vertex_genera=(2,))
        assert euler_genus_of_dual(model) == 2

    def test_mixed_genera_path(self):
        # pieces (g=0, deg=1), (g=1, deg=1): chi = 1 - 1 = 0 -> genus 1
        g = MeasuredGraph([1.0, 1.0], [(0, 1, 1.0)])
        model = SurfaceModel(dual_graph=g, vertex_genera=(0, 1))
        assert euler_genus_of_dual(model) == 1


class TestPinchModel:
    def setup_method(self):
        w12, w23 = solve_p3_closed_form(1.0, 3.0)
        self.model = p3_surface_model(w12, w23)

    def test_delta_one_identity(self):
        g = pinch_model(self.model, 1.0)
        for (u, v), w in self.model.edge_base_weights.items():
            assert g.weight(u, v) == pytest.approx(w, rel=0, abs=0)

    def test_small_delta_spectrum(self):
        delta = 1e-3
        vals = spectrum_dense(pinch_model(self.model, delta)).eigenvalues
        assert_allclose(vals, [0.0, delta * 1.0, delta * 3.0], atol=1e-12)

    def test_halving_delta_halves_spectrum(self):
        v1 = spectrum_dense(pinch_model(self.model, 0.2)).eigenvalues
        v2 = spectrum_dense(pinch_model(self.model, 0.1)).eigenvalues
        assert_allclose(v2, v1 / 2, rtol=1e-12, atol=1e-15)

    def test_ratio_invariance_across_delta(self):
        ratios = []
        for delta in (1e-1, 1e-2, 1e-3):
            vals = spectrum_dense(pinch_model(self.model, delta)).eigenvalues
            ratios.append(vals[2] / vals[1])
        assert_allclose(ratios, ratios[0], rtol=1e-12)

    def test_rejects_bad_delta(self):
        with pytest.raises(ValueError):
            pinch_model(self.model, 0.0)


class TestRescaledSpectrum:
    def setup_method(self):
        w12, w23 = solve_p3_closed_form(1.0, 3.0)
        self.model = p3_surface_model(w12, w23)

    @pytest.mark.parametrize("delta", [1e-1, 1e-2, 1e-3])
    def test_recovers_targets(self, delta):
        eig = spectrum_dense(pinch_model(self.model, delta))
        out = rescaled_spectrum(eig, delta)
        assert_allclose(out.eigenvalues, [0.0, 1.0, 3.0], atol=1e-10)

    def test_kappa(self):
        eig = spectrum_dense(pinch_model(self.model, 1e-2))
        out = rescaled_spectrum(eig, 1e-2)
        assert out.kappa == pytest.approx(-100.0)

    def test_composition_is_delta_free(self):
        outs = []
        for delta in (0.5, 0.05):
            eig = spectrum_dense(pinch_model(self.model, delta))
            outs.append(rescaled_spectrum(eig, delta).eigenvalues)
        assert_allclose(outs[0], outs[1], atol=1e-12)
