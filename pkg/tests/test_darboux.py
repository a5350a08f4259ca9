"""Rectifying mode transforms and the W bookkeeping coordinate."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from covlab.darboux import (
    KGModeState,
    KGModeTangent,
    SchrModeState,
    WOracle,
    WOracleClosednessError,
    kg_from_darboux,
    kg_mode_state,
    kg_slice_state,
    kg_to_darboux,
    kg_w_derived,
    kg_w_printed,
    random_hermitian_modes,
    schr_from_darboux,
    schr_mode_state,
    schr_slice_state,
    schr_to_darboux,
    schr_w_derived,
    schr_w_printed,
    theta_pullback_residual,
    w_oracle,
)
from covlab.kg import KGConfig, kg_evolve_spectral
from covlab.lattice import Lattice, ModeVector, sup_norm
from covlab.schrodinger import schr_evolve_spectral

LAT = Lattice(dim=1, n=64, length=2 * np.pi)
CFG = KGConfig(mass=1.0, lattice=LAT)


def seeded(seed):
    return np.random.Generator(np.random.Philox(key=seed))


def kg_point(seed, time=0.0, band=None):
    rng = seeded(seed)
    return KGModeState(
        ModeVector(LAT, random_hermitian_modes(LAT, rng, band=band)),
        ModeVector(LAT, random_hermitian_modes(LAT, rng, band=band)),
        time=time,
    )


def schr_point(seed, time=0.0, band=None):
    rng = seeded(seed)
    return SchrModeState(
        ModeVector(LAT, random_hermitian_modes(LAT, rng, band=band)),
        ModeVector(LAT, random_hermitian_modes(LAT, rng, band=band)),
        time=time,
    )


class TestChart:
    @given(s=st.floats(min_value=-10.0, max_value=10.0))
    @settings(max_examples=30, deadline=None)
    def test_kg_round_trip(self, s):
        m = kg_point(5, time=s)
        back = kg_from_darboux(kg_to_darboux(m, CFG), CFG)
        err = max(
            np.max(np.abs(back.phiHat.coefficients - m.phiHat.coefficients)),
            np.max(np.abs(back.pHat.coefficients - m.pHat.coefficients)),
        )
        scale = max(
            np.max(np.abs(m.phiHat.coefficients)),
            np.max(np.abs(m.pHat.coefficients)),
        )
        assert err <= 1e-13 * max(scale, 1.0)

    @given(s=st.floats(min_value=-10.0, max_value=10.0))
    @settings(max_examples=30, deadline=None)
    def test_schr_round_trip(self, s):
        m = schr_point(6, time=s)
        back = schr_from_darboux(schr_to_darboux(m))
        err = max(
            np.max(np.abs(back.phiRHat.coefficients - m.phiRHat.coefficients)),
            np.max(np.abs(back.phiIHat.coefficients - m.phiIHat.coefficients)),
        )
        assert err <= 1e-13

    def test_kg_invariance_along_flow(self):
        from covlab.harness import ExperimentConfig, random_state

        hc = ExperimentConfig(theory="kg", experiment="darboux-check")
        st0 = random_state(hc)
        d0 = kg_to_darboux(kg_mode_state(st0), CFG)
        worst = 0.0
        scale = max(
            np.max(np.abs(d0.PhiHat.coefficients)),
            np.max(np.abs(d0.PHat.coefficients)),
        )
        for s in np.linspace(0.0, 10.0, 9):
            ds = kg_to_darboux(kg_mode_state(kg_evolve_spectral(st0, s, CFG)), CFG)
            worst = max(
                worst,
                np.max(np.abs(ds.PhiHat.coefficients - d0.PhiHat.coefficients)),
                np.max(np.abs(ds.PHat.coefficients - d0.PHat.coefficients)),
            )
        assert worst <= 1e-12 * scale

    def test_schr_invariance_along_flow(self):
        from covlab.harness import ExperimentConfig, random_state

        hc = ExperimentConfig(theory="schrodinger", experiment="darboux-check")
        st0 = random_state(hc)
        d0 = schr_to_darboux(schr_mode_state(st0))
        worst = 0.0
        for s in np.linspace(0.0, 10.0, 9):
            ds = schr_to_darboux(schr_mode_state(schr_evolve_spectral(st0, s)))
            worst = max(
                worst,
                np.max(np.abs(ds.PhiRHat.coefficients - d0.PhiRHat.coefficients)),
                np.max(np.abs(ds.PhiIHat.coefficients - d0.PhiIHat.coefficients)),
            )
        assert worst <= 1e-12

    def test_kg_quarter_period_single_mode(self):
        # at s = pi/(2 omega) the chart sends (phi, p) to (-p/omega, omega phi)
        k = 3
        om = float(np.sqrt(k * k + CFG.mass**2))
        coeff_phi = np.zeros(LAT.shape, dtype=complex)
        coeff_p = np.zeros(LAT.shape, dtype=complex)
        coeff_phi[k] = coeff_phi[-k] = 0.4
        coeff_p[k] = coeff_p[-k] = -0.7
        m = KGModeState(
            ModeVector(LAT, coeff_phi), ModeVector(LAT, coeff_p),
            time=np.pi / (2 * om),
        )
        d = kg_to_darboux(m, CFG)
        assert abs(d.PhiHat.coefficients[k] - (-(-0.7) / om)) < 1e-13
        assert abs(d.PHat.coefficients[k] - om * 0.4) < 1e-13

    def test_kg_massless_zero_mode_shear(self):
        cfg0 = KGConfig(mass=0.0, lattice=LAT)
        coeff_phi = np.zeros(LAT.shape, dtype=complex)
        coeff_p = np.zeros(LAT.shape, dtype=complex)
        coeff_phi[0] = 0.3
        coeff_p[0] = 0.9
        m = KGModeState(
            ModeVector(LAT, coeff_phi), ModeVector(LAT, coeff_p), time=2.0
        )
        d = kg_to_darboux(m, cfg0)
        assert abs(d.PhiHat.coefficients[0] - (0.3 - 2.0 * 0.9)) < 1e-13
        assert abs(d.PHat.coefficients[0] - 0.9) < 1e-13

    def test_schr_quarter_turn_single_mode(self):
        # theta = k^2 s / 2 = pi/2 at k = 1, s = pi: PhiR -> -b, PhiI -> a
        a, b = 0.8, -0.2
        cr = np.zeros(LAT.shape, dtype=complex)
        ci = np.zeros(LAT.shape, dtype=complex)
        cr[1] = cr[-1] = a
        ci[1] = ci[-1] = b
        m = SchrModeState(ModeVector(LAT, cr), ModeVector(LAT, ci), time=np.pi)
        d = schr_to_darboux(m)
        assert abs(d.PhiRHat.coefficients[1] - (-b)) < 1e-13
        assert abs(d.PhiIHat.coefficients[1] - a) < 1e-13

    def test_mode_state_round_trips_slice_state(self):
        from covlab.harness import ExperimentConfig, random_state

        hc = ExperimentConfig(theory="kg", experiment="darboux-check")
        st0 = random_state(hc)
        back = kg_slice_state(kg_mode_state(st0))
        assert sup_norm(back.phi.values - st0.phi.values) < 1e-13
        assert sup_norm(back.p.values - st0.p.values) < 1e-13

    def test_random_modes_hermitian_and_banded(self):
        from covlab.lattice import hermitian_defect

        arr = random_hermitian_modes(LAT, seeded(3), band=4)
        assert hermitian_defect(arr) < 1e-14
        idx = np.abs(np.fft.fftfreq(LAT.n, d=1.0 / LAT.n))
        assert np.all(arr[idx > 4] == 0.0)


class TestW:
    def test_w_zero_at_time_zero(self):
        m = kg_point(8, time=0.0)
        assert kg_w_derived(m, CFG) == 0.0
        sm = schr_point(9, time=0.0)
        assert schr_w_derived(sm) == 0.0

    def test_kg_w_matches_oracle_line_integral(self):
        oracle = w_oracle("kg", CFG)
        for seed in (1, 2, 3):
            m = kg_point(seed, time=1.7)
            assert abs(oracle.value(m) - kg_w_derived(m, CFG)) <= 1e-9

    def test_schr_w_matches_oracle_line_integral(self):
        oracle = w_oracle("schrodinger", LAT)
        for seed in (1, 2, 3):
            m = schr_point(seed, time=2.3)
            assert abs(oracle.value(m) - schr_w_derived(m)) <= 1e-9

    def test_oracle_loop_integral_vanishes(self):
        oracle = w_oracle("kg", CFG)
        pts = [kg_point(seed, time=t) for seed, t in ((1, 0.4), (2, 1.1), (3, 2.9))]
        assert abs(oracle.loop_integral(*pts)) <= 1e-9

    def test_oracle_rejects_printed_ledger(self):
        with pytest.raises(WOracleClosednessError):
            WOracle("kg", CFG, sign_ledger="paper-printed")
        with pytest.raises(WOracleClosednessError):
            WOracle("schrodinger", LAT, sign_ledger="paper-printed")

    def test_theta_pullback_oracle_identity(self):
        m = kg_point(4, time=1.3)
        rep = theta_pullback_residual("kg", m, cfg=CFG, tangent_count=50)
        assert rep.oracle_residual <= 1e-9
        sm = schr_point(5, time=0.8)
        rep_s = theta_pullback_residual("schrodinger", sm, tangent_count=50)
        assert rep_s.oracle_residual <= 1e-9

    def test_kg_printed_w_departs_at_generic_points(self):
        # the doubled cross term shows up in the differential: keep the
        # measured departure pinned so a silent "fix" cannot creep in
        m = kg_point(4, time=1.3)
        rep = theta_pullback_residual("kg", m, cfg=CFG, tangent_count=50)
        assert rep.printed_residual > 1e-3

    def test_kg_printed_w_agrees_without_cross_term(self):
        coeff = np.zeros(LAT.shape, dtype=complex)
        coeff[1] = coeff[-1] = 0.37
        m = KGModeState(
            ModeVector(LAT, coeff),
            ModeVector(LAT, np.zeros(LAT.shape, dtype=complex)),
            time=2.2,
        )
        assert abs(kg_w_printed(m, CFG) - kg_w_derived(m, CFG)) <= 1e-12

    def test_schr_printed_w_departs(self):
        sm = schr_point(5, time=0.8)
        d = schr_to_darboux(sm)
        assert abs(schr_w_printed(d) - schr_w_derived(sm)) > 1e-3

    def test_chart_w_consistency(self):
        # kg_to_darboux stores exactly the derived W
        m = kg_point(10, time=3.1)
        assert kg_to_darboux(m, CFG).W == pytest.approx(
            kg_w_derived(m, CFG), abs=1e-15
        )

    @given(seed=st.integers(min_value=0, max_value=2**31 - 1))
    @settings(max_examples=10, deadline=None)
    def test_oracle_differential_antisymmetry_free(self, seed):
        # the difference form is linear in the tangent
        m = kg_point(7, time=0.9)
        oracle = w_oracle("kg", CFG, check_points=0)
        rng = seeded(seed)
        t1 = KGModeTangent(
            random_hermitian_modes(LAT, rng),
            random_hermitian_modes(LAT, rng),
            float(rng.standard_normal()),
        )
        t2 = KGModeTangent(2.0 * t1.dphi, 2.0 * t1.dp, 2.0 * t1.ds)
        assert oracle.differential(m, t2) == pytest.approx(
            2.0 * oracle.differential(m, t1), rel=1e-12
        )


class TestValidation:
    def test_mismatched_lattices_rejected(self):
        other = Lattice(dim=1, n=32, length=2 * np.pi)
        with pytest.raises(ValueError):
            KGModeState(
                ModeVector(LAT, np.zeros(LAT.shape, dtype=complex)),
                ModeVector(other, np.zeros(other.shape, dtype=complex)),
            )

    def test_unknown_theory_rejected(self):
        with pytest.raises(ValueError):
            w_oracle("dirac", CFG)
