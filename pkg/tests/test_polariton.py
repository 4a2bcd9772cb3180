"""Cavity-dressed level models: construction identities and rate curves."""

import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rescav.errors import ConfigError, DegenerateNormalizationError, InputError
from rescav.polariton import (LevelSet, RateCurve, build_ensemble_h,
                              build_single_h, collective_coupling,
                              completeness_defect, enumerate_basis, gamma_cav,
                              gamma_polariton, levels_from_resonances,
                              ratio_curve, read_levels_json, single_rate_curve)
from rescav.resonances import DipoleTable, Resonance

POSITIONS = np.array([-410.004009, -410.000126, -409.997093, -409.993916])
WIDTHS = np.array([1.06e-6, 7.46e-5, 7.26e-4, 2.19138e-3])
MOMENTS = [(0, 1, 0.921), (0, 2, 0.056), (0, 3, 4.174),
           (1, 2, 0.459), (1, 3, 1.019), (2, 3, 2.043)]
GAMMA_TOP = float(WIDTHS[3])


def full_dipoles():
    d = np.zeros((4, 4), dtype=complex)
    for i, j, v in MOMENTS:
        d[i, j] = d[j, i] = v
    return d


@pytest.fixture(scope="module")
def levels():
    return LevelSet(POSITIONS, WIDTHS, full_dipoles(),
                    float(POSITIONS[3] - POSITIONS[0]))


class TestLevelSet:
    def test_complex_energies(self, levels):
        e = levels.complex_energies()
        np.testing.assert_array_equal(e.real, POSITIONS)
        np.testing.assert_array_equal(e.imag, -0.5 * WIDTHS)

    def test_require_dipole(self, levels):
        assert levels.require_dipole(0, 3) == 4.174 + 0j
        holey = np.full((4, 4), np.nan, dtype=complex)
        np.fill_diagonal(holey, 0.0)
        lev = LevelSet(POSITIONS, WIDTHS, holey, 0.01)
        with pytest.raises(ConfigError):
            lev.require_dipole(0, 3)

    def test_validation(self):
        with pytest.raises(InputError):
            LevelSet(POSITIONS[:3], WIDTHS[:3], full_dipoles(), 0.01)
        with pytest.raises(InputError):
            LevelSet(POSITIONS, -WIDTHS, full_dipoles(), 0.01)
        with pytest.raises(InputError):
            LevelSet(POSITIONS[::-1], WIDTHS, full_dipoles(), 0.01)
        with pytest.raises(InputError):
            LevelSet(POSITIONS, WIDTHS, full_dipoles(), 0.0)

    def test_arrays_are_read_only(self, levels):
        with pytest.raises(ValueError):
            levels.positions[0] = 0.0


class TestLevelsFromResonances:
    @staticmethod
    def ladder():
        return [Resonance(energy=p - 0.5j * w, theta_star=0.5, nodes=n,
                          interior_fraction=0.99, vector=np.ones(3, complex),
                          is_ground_like=n == 0, is_barrier_top=n == 3)
                for n, (p, w) in enumerate(zip(POSITIONS, WIDTHS))]

    def test_assembles_and_zeroes_the_diagonal(self):
        table = DipoleTable(full_dipoles() + np.eye(4))
        lev = levels_from_resonances(self.ladder(), table)
        np.testing.assert_allclose(lev.positions, POSITIONS, rtol=0, atol=0)
        np.testing.assert_allclose(lev.widths, WIDTHS, rtol=1e-15)
        assert np.all(np.diag(lev.dipoles) == 0.0)
        assert lev.hbar_omega == pytest.approx(POSITIONS[3] - POSITIONS[0], rel=1e-15)

    def test_pair_and_override(self):
        table = DipoleTable(full_dipoles())
        lev = levels_from_resonances(self.ladder(), table, pair=(2, 0))
        assert lev.hbar_omega == pytest.approx(POSITIONS[2] - POSITIONS[0], rel=1e-15)
        lev = levels_from_resonances(self.ladder(), table, hbar_omega=0.02)
        assert lev.hbar_omega == 0.02

    def test_wrong_counts_rejected(self):
        with pytest.raises(InputError):
            levels_from_resonances(self.ladder()[:3], DipoleTable(full_dipoles()))
        with pytest.raises(InputError):
            levels_from_resonances(self.ladder(), DipoleTable(np.zeros((3, 3))))


class TestReadLevelsJson:
    def write(self, tmp_path, payload):
        path = tmp_path / "levels.json"
        path.write_text(json.dumps(payload), encoding="utf-8")
        return path

    def payload(self):
        return {"e_r": list(POSITIONS), "gamma": list(WIDTHS),
                "dipoles": [[i, j, v, 0.0] for i, j, v in MOMENTS]}

    def test_round_trip_with_default_gap(self, tmp_path):
        lev = read_levels_json(self.write(tmp_path, self.payload()))
        np.testing.assert_array_equal(lev.positions, POSITIONS)
        np.testing.assert_array_equal(lev.widths, WIDTHS)
        assert lev.dipoles[1, 3] == 1.019 + 0j
        assert lev.dipoles[3, 1] == 1.019 + 0j
        assert lev.hbar_omega == pytest.approx(POSITIONS[3] - POSITIONS[0], rel=1e-15)

    def test_explicit_photon_energy(self, tmp_path):
        payload = self.payload()
        payload["hbar_omega"] = 0.0123
        assert read_levels_json(self.write(tmp_path, payload)).hbar_omega == 0.0123

    def test_unlisted_pair_stays_unspecified(self, tmp_path):
        payload = self.payload()
        payload["dipoles"] = payload["dipoles"][:-1]  # drop (2, 3)
        lev = read_levels_json(self.write(tmp_path, payload))
        with pytest.raises(ConfigError):
            lev.require_dipole(2, 3)

    def test_malformed_tables(self, tmp_path):
        with pytest.raises(InputError):
            read_levels_json(tmp_path / "missing.json")
        bad = tmp_path / "bad.json"
        bad.write_text("{not json", encoding="utf-8")
        with pytest.raises(InputError):
            read_levels_json(bad)
        payload = self.payload()
        del payload["gamma"]
        with pytest.raises(InputError):
            read_levels_json(self.write(tmp_path, payload))
        payload = self.payload()
        payload["dipoles"][0] = [0, 1, 0.9]
        with pytest.raises(InputError):
            read_levels_json(self.write(tmp_path, payload))
        payload = self.payload()
        payload["dipoles"][0] = [0, 0, 0.9, 0.0]
        with pytest.raises(InputError):
            read_levels_json(self.write(tmp_path, payload))
        payload = self.payload()
        payload["e_r"] = payload["e_r"][:3]
        with pytest.raises(InputError):
            read_levels_json(self.write(tmp_path, payload))


class TestSingleMolecule:
    def test_matrix_structure(self, levels):
        eps = 3e-4
        h = build_single_h(levels, eps)
        e = levels.complex_energies()
        cross = eps * full_dipoles()
        want = np.zeros((8, 8), dtype=complex)
        want[:4, :4] = np.diag(e)
        want[4:, 4:] = np.diag(e - levels.hbar_omega)
        want[:4, 4:] = cross
        want[4:, :4] = cross
        np.testing.assert_array_equal(h, want)
        assert np.array_equal(h, h.T)

    def test_negative_coupling_rejected(self, levels):
        with pytest.raises(InputError):
            build_single_h(levels, -1e-4)

    def test_missing_moment_refuses(self):
        holey = full_dipoles()
        holey[1, 2] = holey[2, 1] = np.nan
        lev = LevelSet(POSITIONS, WIDTHS, holey, 0.01)
        with pytest.raises(ConfigError):
            build_single_h(lev, 1e-4)
        # the check is eager: even zero coupling demands a complete table
        with pytest.raises(ConfigError):
            build_single_h(lev, 0.0)

    def test_uncoupled_width_is_the_bare_top_width(self, levels):
        g = gamma_polariton(build_single_h(levels, 0.0))
        assert abs(g - GAMMA_TOP) <= 1e-12 * GAMMA_TOP

    def test_channel_semantics_on_a_diagonal_matrix(self):
        h = np.diag([1.0 - 0.5j, 2.0 - 1.0j])
        assert gamma_polariton(h, channel=0) == pytest.approx(1.0, rel=1e-14)
        assert gamma_polariton(h, channel=1) == pytest.approx(2.0, rel=1e-14)

    def test_fixed_width_variant(self):
        h = np.diag([1.0 - 0.5j, 2.0 - 1.0j])
        g = gamma_polariton(h, gammas=np.array([5.0, 7.0]), channel=0)
        assert g == pytest.approx(5.0, rel=1e-14)

    def test_input_validation(self, levels):
        h = build_single_h(levels, 0.0)
        with pytest.raises(InputError):
            gamma_polariton(h[:4, :])
        with pytest.raises(InputError):
            gamma_polariton(h, channel=8)
        with pytest.raises(InputError):
            gamma_polariton(h, gammas=np.ones(3))

    def test_rate_curve_normalizes_at_zero(self, levels):
        curve = single_rate_curve(levels, np.array([0.0, 5e-4, 1e-3]))
        assert isinstance(curve, RateCurve)
        assert curve.n_mol is None
        assert curve.ratios[0] == 1.0
        assert curve.rates[0] == pytest.approx(GAMMA_TOP, rel=1e-12)
        assert np.all(curve.rates > 0.0)
        # this coupling range already suppresses the width substantially
        assert curve.ratios.min() < 0.5

    def test_rate_curve_grid_rules(self, levels):
        with pytest.raises(InputError):
            single_rate_curve(levels, np.array([1e-4, 2e-4]))
        with pytest.raises(InputError):
            single_rate_curve(levels, np.array([[0.0, 1e-4]]))

    def test_zero_width_table_has_no_ratio(self):
        lev = LevelSet(POSITIONS, np.zeros(4), full_dipoles(), 0.01)
        with pytest.raises(DegenerateNormalizationError):
            single_rate_curve(lev, np.array([0.0, 1e-4]))


def kron_reference(levels, n_mol, eps, pair=(3, 0)):
    """Independent ensemble construction: a Kronecker sum of 2x2 blocks.

    Bit b of the basis mask has stride 2**b, so molecule b's block sits
    between an identity of size 2**(n-1-b) and one of size 2**b.
    """
    upper, lower = pair
    e = levels.complex_energies()
    d = levels.dipoles[upper, lower]
    block = np.array([[e[upper] - levels.hbar_omega, eps * d],
                      [eps * d, e[lower]]])
    h = np.zeros((2 ** n_mol, 2 ** n_mol), dtype=complex)
    for b in range(n_mol):
        h += np.kron(np.eye(2 ** (n_mol - 1 - b)),
                     np.kron(block, np.eye(2 ** b)))
    return h


class TestEnsemble:
    def test_basis_enumeration(self):
        assert enumerate_basis(1) == [0, 1]
        assert len(enumerate_basis(3)) == 8
        assert len(enumerate_basis(10)) == 1024
        with pytest.raises(InputError):
            enumerate_basis(0)
        with pytest.raises(InputError):
            enumerate_basis(11)
        assert len(enumerate_basis(11, n_cap=12)) == 2048
        with pytest.raises(InputError):
            enumerate_basis(2.5)

    def test_two_molecule_matrix_explicitly(self, levels):
        eps = 2e-5
        e = levels.complex_energies()
        e_up = e[3] - levels.hbar_omega
        e_lo = e[0]
        c = eps * 4.174
        want = np.array([
            [2 * e_up, c, c, 0],
            [c, e_lo + e_up, 0, c],
            [c, 0, e_lo + e_up, c],
            [0, c, c, 2 * e_lo],
        ])
        got = build_ensemble_h(levels, 2, eps)
        np.testing.assert_allclose(got, want, rtol=1e-15, atol=0)

    @pytest.mark.parametrize("n_mol", [1, 2, 3])
    def test_matches_kronecker_sum(self, levels, n_mol):
        got = build_ensemble_h(levels, n_mol, 3e-5)
        want = kron_reference(levels, n_mol, 3e-5)
        np.testing.assert_allclose(got, want, rtol=1e-14, atol=0)

    @pytest.mark.parametrize("n_mol", [1, 2, 3, 4])
    def test_uncoupled_rate_counts_the_molecules(self, levels, n_mol):
        g = gamma_cav(build_ensemble_h(levels, n_mol, 0.0))
        assert abs(g - n_mol * GAMMA_TOP) <= 1e-12 * n_mol * GAMMA_TOP

    def test_width_is_redistributed_not_created(self, levels):
        # the dressed widths always sum to the bare ones (trace identity)
        for eps in (0.0, 1e-5, 5e-4):
            h = build_ensemble_h(levels, 3, eps)
            total = np.sum(-2.0 * np.linalg.eigvals(h).imag)
            bare = -2.0 * np.trace(h).imag
            assert total == pytest.approx(bare, rel=1e-12)

    def test_pair_selection_and_errors(self, levels):
        h = build_ensemble_h(levels, 1, 1e-5, pair=(2, 0))
        assert h[0, 0] == pytest.approx(
            levels.complex_energies()[2] - levels.hbar_omega, rel=1e-15)
        assert h[0, 1] == pytest.approx(1e-5 * 0.056, rel=1e-12)
        with pytest.raises(InputError):
            build_ensemble_h(levels, 1, 1e-5, pair=(1, 1))
        with pytest.raises(InputError):
            build_ensemble_h(levels, 1, -1e-5)
        with pytest.raises(InputError):
            gamma_cav(np.ones((2, 3)))
        with pytest.raises(InputError):
            gamma_cav(np.eye(2), reference=4)

    def test_missing_pair_moment_refuses(self):
        holey = full_dipoles()
        holey[1, 2] = holey[2, 1] = np.nan
        lev = LevelSet(POSITIONS, WIDTHS, holey, 0.01)
        with pytest.raises(ConfigError):
            build_ensemble_h(lev, 2, 1e-5, pair=(2, 1))

    def test_ratio_curve_bookkeeping(self, levels):
        grid = np.array([0.0, 1e-5, 2e-5])
        curve = ratio_curve(levels, 2, grid)
        assert curve.n_mol == 2
        assert curve.ratios[0] == 1.0
        np.testing.assert_allclose(curve.ratios, curve.rates / curve.rates[0],
                                   rtol=1e-15)
        with pytest.raises(InputError):
            ratio_curve(levels, 2, np.array([1e-5, 2e-5]))

    def test_completeness_defect(self, levels):
        assert completeness_defect(build_ensemble_h(levels, 2, 0.0)) == 0.0
        assert completeness_defect(build_single_h(levels, 1e-3)) < 0.01


class TestCollectiveCoupling:
    def test_scaling(self):
        assert collective_coupling(2e-5, 4) == pytest.approx(4e-5, rel=1e-15)
        assert collective_coupling(0.0, 7) == 0.0

    def test_validation(self):
        with pytest.raises(InputError):
            collective_coupling(-1e-5, 2)
        with pytest.raises(InputError):
            collective_coupling(1e-5, 0)


class TestRateCurveContainer:
    def test_shape_mismatch_rejected(self):
        with pytest.raises(InputError):
            RateCurve(np.zeros(3), np.zeros(3), np.zeros(2))

    def test_arrays_read_only(self):
        curve = RateCurve(np.zeros(2), np.ones(2), np.ones(2))
        with pytest.raises(ValueError):
            curve.rates[0] = 2.0


@settings(max_examples=20, deadline=None)
@given(eps=st.floats(0.0, 1e-3), n_mol=st.integers(1, 4))
def test_rates_stay_non_negative(eps, n_mol):
    # with real couplings the numerical range keeps Im(E) <= 0, so the
    # projected rates can never go negative
    levels = LevelSet(POSITIONS, WIDTHS, full_dipoles(),
                      float(POSITIONS[3] - POSITIONS[0]))
    assert gamma_cav(build_ensemble_h(levels, n_mol, eps)) >= 0.0
    assert gamma_polariton(build_single_h(levels, eps)) >= 0.0
