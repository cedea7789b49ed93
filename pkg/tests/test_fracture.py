import math

import numpy as np
import pytest

import cleavelab as cl
from cleavelab.fracture import (
    beta_A,
    directional_cost,
    normalized_cost,
    sphere_samples,
)
from cleavelab.potentials import BondBetaTable

import oracles


def _setup(preset, angles, alphas, betas):
    b = cl.build_basis(preset, *angles)
    m = cl.model_from_preset(b, alphas, betas)
    table = cl.bond_betas(m)
    normals = cl.crystallographic_normals(m.directions)
    return b, m, table, normals


class TestBetaA:
    @pytest.mark.parametrize("phi,beta", [(0.0, 1.0), (0.2, 1.0), (math.pi / 6, 0.5),
                                          (0.9, 2.0)])
    def test_triangular_closed_form(self, phi, beta):
        _, _, table, normals = _setup("triangular", (phi,), 1.0, beta)
        val, mins, _, _ = beta_A(table, normals, n_validate=20_000)
        assert val == pytest.approx(oracles.beta_triangular(beta, phi), rel=1e-9)

    def test_triangular_minimizer_multiplicity(self):
        _, _, table, normals = _setup("triangular", (0.0,), 1.0, 1.0)
        _, mins, _, degen = beta_A(table, normals, n_validate=50_000)
        assert len(mins) == 2       # two lattice planes tie at the symmetric angle
        assert degen               # and a whole arc of off-lattice directions joins
        _, _, table2, normals2 = _setup("triangular", (0.2,), 1.0, 1.0)
        _, mins2, _, degen2 = beta_A(table2, normals2, n_validate=50_000)
        assert len(mins2) == 1 and not degen2

    @pytest.mark.parametrize("phi,b1,b2", [(0.0, 1.0, 1.0), (0.3, 1.0, 1.0),
                                           (0.7, 1.0, 0.3), (1.1, 2.0, 1.0),
                                           (0.45, 0.5, 2.0)])
    def test_square_closed_form(self, phi, b1, b2):
        _, _, table, normals = _setup("square", (phi,), [1.0, 1.0], [b1, b2])
        val, _, _, _ = beta_A(table, normals, n_validate=20_000)
        assert val == pytest.approx(oracles.beta_square(b1, b2, phi), rel=1e-9)

    def test_square_phi0_minimizer_is_axis(self, square_model):
        table = cl.bond_betas(square_model)
        normals = cl.crystallographic_normals(square_model.directions)
        val, mins, costs, _ = beta_A(table, normals)
        assert val == pytest.approx(3.0, rel=1e-12)
        assert len(mins) == 1
        np.testing.assert_allclose(np.abs(mins[0]), [1.0, 0.0], atol=1e-12)
        # the diagonal candidates cost 4
        finite = np.sort(costs[np.isfinite(costs)])
        np.testing.assert_allclose(finite, [3.0, 4.0, 4.0], atol=1e-12)

    @pytest.mark.parametrize("phi,psi,b1,b2", [(0.0, 0.0, 1.0, 1.0),
                                               (0.0, 0.4, 1.0, 0.5),
                                               (0.4, 0.0, 2.0, 1.0),
                                               (0.3, 0.9, 0.7, 1.6)])
    def test_cubic_four_family_minimum(self, phi, psi, b1, b2):
        _, _, table, normals = _setup("cubic", (phi, psi), [1.0, 1.0], [b1, b2])
        val, _, _, _ = beta_A(table, normals, n_validate=20_000)
        assert val == pytest.approx(oracles.beta_cubic(b1, b2, phi, psi), rel=1e-9)

    def test_cubic_identity_value(self, cubic_model):
        table = cl.bond_betas(cubic_model)
        normals = cl.crystallographic_normals(cubic_model.directions)
        val, mins, _, _ = beta_A(table, normals)
        assert val == pytest.approx(5.0, rel=1e-12)
        np.testing.assert_allclose(np.abs(mins[0]), [1, 0, 0], atol=1e-12)

    def test_minimizers_beat_dense_sphere_sampling(self, tri_constants):
        _, fc = tri_constants
        table = cl.bond_betas(cl.model_from_preset(cl.build_basis("triangular", 0.0),
                                                   1.0, 1.0))
        S = sphere_samples(2, 100_000)
        ok = np.abs(S[:, 0]) > 1e-9
        ratios = directional_cost(table, S[ok]) / np.abs(S[ok, 0])
        assert ratios.min() >= fc.beta - 1e-7 * fc.beta

    def test_scaling_invariance_of_argmin(self, square_model):
        table = cl.bond_betas(square_model)
        normals = cl.crystallographic_normals(square_model.directions)
        v1, m1, _, _ = beta_A(table, normals)
        scaled = BondBetaTable(table.ints.copy(), table.vectors.copy(),
                               (7.3 * table.beta).copy())
        v2, m2, _, _ = beta_A(scaled, normals)
        assert v2 == pytest.approx(7.3 * v1, rel=1e-12)
        np.testing.assert_allclose(m1, m2)

    def test_no_admissible_normal_raises(self):
        # single carried class along e1: its only normal is perpendicular to e1
        table = BondBetaTable(np.array([[1, 0]]), np.array([[1.0, 0.0]]),
                              np.array([1.0]))
        from cleavelab.lattice import NormalSet
        normals = NormalSet(units=np.array([[0.0, 1.0]]),
                            spans=(np.array([[1.0, 0.0]]),))
        with pytest.raises(ValueError):
            beta_A(table, normals)


class TestSurplus:
    def test_zero_at_minimizers(self, tri_constants):
        _, fc = tri_constants
        m = cl.model_from_preset(cl.build_basis("triangular", 0.0), 1.0, 1.0)
        table = cl.bond_betas(m)
        for xi in fc.minimizers:
            assert abs(cl.surplus(table, fc.beta, xi)) <= 1e-9 * fc.beta

    def test_degenerate_axis_direction_on_symmetric_triangular(self):
        m = cl.model_from_preset(cl.build_basis("triangular", 0.0), 1.0, 1.0)
        table = cl.bond_betas(m)
        assert cl.surplus(table, 2.0, np.array([1.0, 0.0])) == pytest.approx(0.0, abs=1e-12)

    def test_perpendicular_direction_pays_full_cost(self):
        m = cl.model_from_preset(cl.build_basis("triangular", 0.0), 1.0, 1.0)
        table = cl.bond_betas(m)
        lam = cl.surplus(table, 2.0, np.array([0.0, 1.0]))
        assert lam == pytest.approx(directional_cost(table, np.array([0.0, 1.0])))
        with pytest.raises(ZeroDivisionError):
            normalized_cost(table, np.array([0.0, 1.0]))

    def test_nonnegative_on_dense_sample(self, square_model, cubic_model):
        for model in (square_model, cubic_model):
            table = cl.bond_betas(model)
            normals = cl.crystallographic_normals(model.directions)
            val, _, _, _ = beta_A(table, normals, n_validate=0)
            S = sphere_samples(model.dimension, 100_000)
            g = directional_cost(table, S)
            lam = g - np.abs(S[:, 0]) * val
            assert lam.min() >= -1e-9 * val

    def test_zero_vector_rejected(self, tri_model):
        table = cl.bond_betas(tri_model)
        with pytest.raises(ValueError):
            cl.surplus(table, 2.0, np.zeros(2))

    def test_homogeneous_of_degree_zero(self, tri_model):
        table = cl.bond_betas(tri_model)
        sig = np.array([0.7, 0.2])
        a = cl.surplus(table, 2.0, sig)
        b = cl.surplus(table, 2.0, 5.0 * sig)
        assert a == pytest.approx(b, rel=1e-12)


class TestSphereExtrema:
    def test_square_single_shell_exact_values(self, square_basis):
        m = cl.model_from_preset(square_basis, [1.0, 1.0], [1.0, 1e-12])
        # keep only the axis classes by zeroing the diagonal shell by hand
        table = cl.bond_betas(m)
        beta = table.beta.copy()
        beta[np.abs(table.ints).sum(axis=1) == 2] = 0.0
        table = BondBetaTable(table.ints.copy(), table.vectors.copy(), beta)
        M1, M2 = cl.sphere_extrema(table)
        assert M1 == pytest.approx(1.0, abs=1e-6)
        assert M2 == pytest.approx(math.sqrt(2.0), abs=1e-6)

    def test_single_direction_class(self):
        table = BondBetaTable(np.array([[1, 0]]), np.array([[1.0, 0.0]]),
                              np.array([1.0]))
        M1, M2 = cl.sphere_extrema(table)
        assert M1 == pytest.approx(0.0, abs=1e-6)
        assert M2 == pytest.approx(1.0, abs=1e-6)

    @pytest.mark.parametrize("preset,angles", [("triangular", (0.0,)),
                                               ("triangular", (0.7,)),
                                               ("cubic", (0.0, 0.0)),
                                               ("cubic", (0.5, 0.3))])
    def test_rotation_invariance(self, preset, angles):
        base_angles = tuple(0.0 for _ in angles)
        _, _, t0, _ = _setup(preset, base_angles, [1.0, 1.0][: 1 + (preset == "cubic")],
                             [1.0, 1.0][: 1 + (preset == "cubic")])
        _, _, t1, _ = _setup(preset, angles, [1.0, 1.0][: 1 + (preset == "cubic")],
                             [1.0, 1.0][: 1 + (preset == "cubic")])
        e0 = cl.sphere_extrema(t0)
        e1 = cl.sphere_extrema(t1)
        assert e0[0] == pytest.approx(e1[0], abs=1e-4)
        assert e0[1] == pytest.approx(e1[1], abs=1e-4)

    def test_extrema_bound_the_samples(self, cubic_model):
        table = cl.bond_betas(cubic_model)
        M1, M2 = cl.sphere_extrema(table)
        S = sphere_samples(3, 50_000)
        g = directional_cost(table, S)
        assert M1 <= g.min() + 1e-9 and M2 >= g.max() - 1e-9


class TestMinLength:
    def test_formula_and_guards(self):
        assert cl.min_length(1.0, 2.0, [1.0, 3.0]) == pytest.approx(4 * 3.0 * 2.0)
        with pytest.raises(ValueError):
            cl.min_length(0.0, 1.0, [1.0])
        with pytest.raises(ValueError):
            cl.min_length(1.0, 2.0, [0.0])
        with pytest.raises(ValueError):
            cl.min_length(1.0, 2.0, [1.0], safety=0.5)

    def test_triangular_value(self, tri_constants):
        _, fc = tri_constants
        assert fc.length == pytest.approx(4.0 * fc.M2 / fc.M1, rel=1e-12)
        assert fc.M2 / fc.M1 == pytest.approx(2.0 / math.sqrt(3.0), abs=1e-6)


def test_fracture_constants_report(tri_constants):
    _, fc = tri_constants
    doc = fc.to_json_dict()
    assert doc["beta_A"] == pytest.approx(2.0)
    assert doc["degenerate_continuum"] is True
    assert len(doc["optimal_normals"]) == 2
    assert doc["M1"] == pytest.approx(math.sqrt(3.0), abs=1e-6)
    assert doc["M2"] == pytest.approx(2.0, abs=1e-6)
