"""Interaction symbols, phases, resonant sets, classes, cutoffs."""

import numpy as np
import pytest

from capwave.resonance import (
    CHANNEL_COEFFS,
    cutoff_partition,
    cutoff_scan,
    grad_eta_phase,
    ibp_symbols,
    m1,
    m2,
    m1_swapped,
    mtilde1,
    mtilde2,
    named_symbol,
    phase,
    quadratic_consistency,
    resonant_sets,
    vanishing_order_fit,
)


class TestElementarySymbols:
    def test_hand_value_m2(self):
        # eta . (xi - eta) + |eta| |xi - eta| at xi = e1, eta = e2
        got = m2(np.array([1.0, 0.0]), np.array([0.0, 1.0]))
        assert abs(got - (np.sqrt(2.0) - 1.0)) < 1e-15

    def test_parallel_pair_annihilates_m1(self):
        xi = np.array([1.5, 0.8])
        for c in (0.3, 0.9):
            eta = xi - c * xi      # xi - eta = c xi, c > 0
            assert abs(m1(xi, eta)) < 1e-14

    def test_exchange_relation(self, rng):
        # mtilde1(eta, xi) = -mtilde2(-xi, -eta) pointwise
        for _ in range(200):
            a, b = rng.normal(size=2), rng.normal(size=2)
            assert abs(mtilde1(b, a) + mtilde2(-a, -b)) < 1e-13

    def test_zero_convention(self):
        assert m1(np.array([1.0, 0.0]), np.array([0.0, 0.0])) == 0.0

    @pytest.mark.parametrize("name", ["m1", "m2", "m1_swapped", "m_pp", "m_mm",
                                      "m_pm", "nf_pp"])
    def test_declared_homogeneity(self, name, rng):
        assert named_symbol(name).homogeneity_defect(rng) < 1e-10

    def test_ibp_vector_homogeneity(self, rng):
        sym = named_symbol("ibp_pm")
        from capwave.resonance import BilinearSymbol

        wrap = BilinearSymbol(ibp_symbols("pm")["eta_ibp_norm"], sym.declared_class, "n")
        assert wrap.homogeneity_defect(rng) < 1e-10


class TestPhases:
    def test_mixed_phase_vanishes_at_zero_output(self, rng):
        ph = phase("pm")
        for _ in range(20):
            eta = rng.normal(size=2)
            assert abs(ph(np.zeros(2), eta)) < 1e-14

    def test_aligned_value_on_critical_ray(self):
        eta = np.array([1.0, 0.0])
        got = phase("mm")(2.0 * eta, eta)
        assert abs(got - (2.0**1.5 - 2.0)) < 1e-10

    def test_rotation_invariance(self, rng):
        for signs in ("pp", "pm", "mm"):
            ph = phase(signs)
            th = rng.uniform(0, 2 * np.pi)
            R = np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
            a, b = rng.normal(size=2), rng.normal(size=2)
            assert abs(ph(R @ a, R @ b) - ph(a, b)) < 1e-12

    def test_gradient_against_finite_differences(self, rng):
        gr = grad_eta_phase("pm")
        ph = phase("pm")
        checked = 0
        while checked < 100:
            a, b = rng.normal(size=2) * 2, rng.normal(size=2) * 2
            if min(np.hypot(*b), np.hypot(*(a - b))) < 0.3:
                continue
            checked += 1
            d = 1e-6
            g = gr(a, b)
            fd = np.array([
                (ph(a, b + [d, 0]) - ph(a, b - [d, 0])) / (2 * d),
                (ph(a, b + [0, d]) - ph(a, b - [0, d])) / (2 * d),
            ])
            assert np.max(np.abs(g - fd)) / np.max(np.abs(g)) < 1e-6

    def test_gradient_expansion_at_small_output(self):
        # d_eta phi_pm = 3/(2 |eta|^(1/2)) (xi - (xi.etahat) etahat / 2) + O(|xi|^2)
        gr = grad_eta_phase("pm")
        eta = np.array([1.0, 0.0])
        scales = [1e-2, 1e-3, 1e-4]
        errs = []
        for s in scales:
            worst = 0.0
            for th in np.linspace(0, 2 * np.pi, 16, endpoint=False):
                xi = s * np.array([np.cos(th), np.sin(th)])
                lead = 1.5 * (xi - 0.5 * np.dot(xi, eta) * eta)
                worst = max(worst, np.max(np.abs(gr(xi, eta) - lead)))
            errs.append(worst)
        slope = np.polyfit(np.log(scales), np.log(errs), 1)[0]
        assert abs(slope - 2.0) < 0.1


class TestResonantSets:
    def test_plus_plus_time_set_trivial(self):
        res = resonant_sets("pp")
        # no zero of the phase away from the origin on the normalized scan
        assert res["time"]["min"] > 0.5

    def test_mixed_channel_concentrates_at_zero_output(self):
        res = resonant_sets("pm")
        assert res["joint"]["min"] < 1e-4
        assert np.hypot(*res["joint"]["argmin_xi"]) < 1e-3

    def test_minus_minus_critical_ray(self):
        res = resonant_sets("mm")
        xi = res["space"]["argmin_xi"]
        eta = res["space"]["eta"]
        assert res["space"]["min"] < 1e-8
        assert np.hypot(*(xi - 2.0 * eta)) < 1e-6
        # joint set only at the origin of the cone
        assert res["joint"]["min"] > 0.5

    def test_plus_plus_phase_lower_bound_on_scan(self, rng):
        ph = phase("pp")
        eta = np.array([1.0, 0.0])
        for _ in range(300):
            xi = rng.uniform(-3, 3, 2)
            scales = min(np.hypot(*xi), 1.0, np.hypot(*(xi - eta)))
            if scales < 1e-6:
                continue
            assert ph(xi, eta) >= 0.5 * scales**1.5


class TestVanishingOrders:
    CASES = [
        ("m1", "xi_small", 1.5), ("m1", "eta_small", 1.5), ("m1", "diff_small", 1.0),
        ("m2", "xi_small", 2.0), ("m2", "eta_small", 1.0), ("m2", "diff_small", 1.0),
        ("m1_swapped", "xi_small", 1.5), ("m1_swapped", "eta_small", 1.0),
        ("m1_swapped", "diff_small", 1.5),
        ("m_pp", "xi_small", 1.5), ("m_pp", "eta_small", 1.0), ("m_pp", "diff_small", 1.0),
        ("m_mm", "xi_small", 1.5), ("m_mm", "eta_small", 1.0), ("m_mm", "diff_small", 1.0),
        ("m_pm", "xi_small", 1.5), ("m_pm", "eta_small", 1.0), ("m_pm", "diff_small", 1.0),
        ("nf_pp", "xi_small", 1.5), ("nf_pp", "eta_small", 1.0), ("nf_pp", "diff_small", 1.0),
    ]

    @pytest.mark.parametrize("name,regime,declared", CASES)
    def test_class_exponent(self, name, regime, declared):
        fit = vanishing_order_fit(named_symbol(name), regime)
        assert fit["slope"] >= declared - 0.1
        assert fit["r_squared"] > 0.99

    def test_ibp_symbol_exponents(self):
        fn = ibp_symbols("pm")["eta_ibp_norm"]
        for regime, declared in [("xi_small", 0.5), ("eta_small", 1.0), ("diff_small", 1.0)]:
            fit = vanishing_order_fit(fn, regime)
            assert fit["slope"] >= declared - 0.1

    def test_degenerate_regime_reports_infinite_order(self):
        zero = lambda xi, eta: np.zeros(np.asarray(xi).shape[:-1])
        fit = vanishing_order_fit(zero, "xi_small")
        assert fit["slope"] == np.inf

    def test_requires_three_decades(self):
        with pytest.raises(ValueError):
            vanishing_order_fit(named_symbol("m2"), "xi_small", decades=2)


class TestCutoffPartition:
    def test_on_ray(self):
        eta = np.array([1.0, 0.0])
        chi_t, chi_s = cutoff_partition(2.0 * eta, eta)
        assert chi_t == 1.0 and chi_s == 0.0

    def test_outside_tube(self):
        eta = np.array([1.0, 0.0])
        xi = np.array([2.0, 0.04])        # |xi - 2 eta| = |xi| / 50: argument ~4
        chi_t, chi_s = cutoff_partition(xi, eta)
        assert chi_t == 0.0 and chi_s == 1.0

    def test_partition_of_unity(self, rng):
        for _ in range(100):
            xi, eta = rng.normal(size=2), rng.normal(size=2)
            chi_t, chi_s = cutoff_partition(xi, eta)
            assert abs(chi_t + chi_s - 1.0) < 1e-15

    def test_lower_bounds_on_supports(self):
        scan = cutoff_scan()
        bound = (200.0 / 101.0) ** 1.5 - 1.0 - (101.0 / 99.0) ** 1.5
        assert scan["min_phi_over_eta32_on_T"] >= bound - 1e-3
        assert scan["min_grad_ratio_on_S"] > 1e-3


class TestIbpSymbols:
    def test_normal_form_homogeneity_ratio(self, rng):
        nf = ibp_symbols("pp")["normal_form"]
        for _ in range(30):
            xi, eta = rng.normal(size=2), rng.normal(size=2)
            if min(np.hypot(*xi), np.hypot(*eta), np.hypot(*(xi - eta))) < 0.3:
                continue
            ratio = nf(2 * xi, 2 * eta) / nf(xi, eta)
            assert abs(ratio - 2.0**0.5) < 1e-10

    def test_divergence_against_finite_differences(self, rng):
        div = ibp_symbols("pm")["eta_ibp_div"]
        vec = ibp_symbols("pm")["eta_ibp"]
        checked = 0
        while checked < 50:
            a, b = rng.normal(size=2) * 2, rng.normal(size=2) * 2
            if min(np.hypot(*a), np.hypot(*b), np.hypot(*(a - b))) < 0.4:
                continue
            checked += 1
            d = 1e-6
            fd = ((vec(a, b + [d, 0])[0] - vec(a, b - [d, 0])[0]) / (2 * d)
                  + (vec(a, b + [0, d])[1] - vec(a, b - [0, d])[1]) / (2 * d))
            an = div(a, b)
            assert abs(an - fd) / max(abs(an), 1e-10) < 1e-5


class TestChannelDecomposition:
    def test_coefficients_are_frozen(self):
        # the combination fixed by substituting u, conj(u) into the quadratic
        # system; changing it must fail quadratic_consistency
        assert CHANNEL_COEFFS["pp"] == (-0.25j, -0.125j, 0.0)
        assert CHANNEL_COEFFS["mm"] == (0.25j, -0.125j, 0.0)
        assert CHANNEL_COEFFS["pm"] == (0.25j, 0.25j, -0.25j)

    def test_consistency_random_states(self, grid32, rng):
        out = quadratic_consistency(4, grid32, rng, amplitude=1e-2)
        assert out["worst_residual"] <= 1e-8

    def test_consistency_scales_quadratically(self, grid32, rng):
        # the identity is exact: the residual stays below the quadratic
        # envelope at every amplitude
        for amp in (1e-1, 1e-2, 1e-3):
            out = quadratic_consistency(2, grid32, rng, amplitude=amp)
            assert out["worst_residual"] <= 1e-8

    def test_channel_isolation_psi_only(self, grid32, rng):
        # with h = 0, u = i psi: the elevation-channel symbols cancel and the
        # quadratic right side reduces to the potential channel
        from capwave.pseudo_product import PseudoProductPlan, t_m
        from capwave.spectral import (SpectralField, forward_transform,
                                      random_localized_field, norm_l2,
                                      inverse_transform)
        from capwave.resonance import named_symbol

        psi = random_localized_field(grid32, rng, k_scale=3).real_part()
        psi = SpectralField(grid32, psi.coeffs * grid32.dealias_mask, True) * 1e-2
        u = SpectralField(grid32, 1j * psi.coeffs, False)
        ub = u.conj()
        total = (t_m(u, u, PseudoProductPlan(grid32, named_symbol("m_pp"))).coeffs
                 + t_m(ub, ub, PseudoProductPlan(grid32, named_symbol("m_mm"))).coeffs
                 + t_m(u, ub, PseudoProductPlan(grid32, named_symbol("m_pm"))).coeffs)
        K1, K2 = grid32.wavenumbers
        p1 = inverse_transform(SpectralField(grid32, 1j * K1 * psi.coeffs, False)).real
        p2 = inverse_transform(SpectralField(grid32, 1j * K2 * psi.coeffs, False)).real
        lam_psi_vals = inverse_transform(
            SpectralField(grid32, grid32.k_abs * psi.coeffs, False)).real
        expected = 1j * forward_transform(
            0.5 * (lam_psi_vals**2 - p1**2 - p2**2), grid32).dealias().coeffs
        assert np.max(np.abs(total - expected)) < 1e-12
