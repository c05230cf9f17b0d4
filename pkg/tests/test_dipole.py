import io

import numpy as np
import pytest

from speds.dipole import (
    AngularPowerSpectrum,
    DipoleSource,
    EmissionGeometry,
    adaptive_integral,
    analytic_no_cavity_efficiency,
    collection_efficiency,
    direct_collection_efficiency,
    emission_pattern,
)
from speds.errors import InvalidInput, NumericalFailure, UnsupportedInput
from speds.multilayer import DESIGN_WAVELENGTH_NM, N_GAAS, Layer, LayerStack

LAM = DESIGN_WAVELENGTH_NM


def homogeneous_geometry(n=1.0):
    half = LayerStack(n, (), n)
    return EmissionGeometry(half, half, DipoleSource(LAM, n, LAM, LAM))


def bare_surface_geometry(depth_wavelengths=2.0):
    """Dipole in semi-infinite GaAs below a bare GaAs/air surface."""
    d = depth_wavelengths * LAM / N_GAAS
    upper = LayerStack(N_GAAS, (), 1.0)
    lower = LayerStack(N_GAAS, (), N_GAAS)
    return EmissionGeometry(upper, lower, DipoleSource(LAM, N_GAAS, d, d))


class TestAdaptiveIntegral:
    def test_polynomial_exact(self):
        val = adaptive_integral(lambda x: 3.0 * x**2, 0.0, 2.0)
        assert val == pytest.approx(8.0, rel=1e-12)

    def test_oscillatory(self):
        val = adaptive_integral(lambda x: np.sin(40.0 * x), 0.0, 1.0, rel_tol=1e-9)
        expected = (1.0 - np.cos(40.0)) / 40.0
        assert val == pytest.approx(expected, rel=1e-8)

    def test_failure_reports_diagnostics(self):
        rng = np.random.default_rng(0)
        with pytest.raises(NumericalFailure, match="panels"):
            adaptive_integral(
                lambda x: rng.standard_normal(np.shape(x)), 0.0, 1.0, rel_tol=1e-12,
                max_doublings=3,
            )


class TestHomogeneous:
    def test_total_power_normalized(self):
        spec = emission_pattern(homogeneous_geometry(), angular_resolution=0.5)
        assert spec.total_power == pytest.approx(1.0, abs=1e-4)
        assert spec.guided_power == pytest.approx(0.0, abs=1e-4)

    def test_pattern_symmetric_and_sin_weighted(self):
        spec = emission_pattern(homogeneous_geometry(), angular_resolution=0.5)
        d = spec.power_density
        assert np.allclose(d, d[::-1], atol=1e-10)
        # in-plane dipole average: density proportional to sin(t)(1 + cos^2(t))
        th = np.radians(spec.theta_grid)
        expected = 0.375 * np.sin(th) * (1.0 + np.cos(th) ** 2)
        interior = slice(5, -5)
        assert np.allclose(d[interior], expected[interior], rtol=1e-3)

    def test_cone_power_matches_closed_form(self):
        spec = emission_pattern(homogeneous_geometry(), angular_resolution=0.25)
        c = np.cos(np.radians(30.0))
        expected = 0.5 - 0.375 * c - 0.125 * c**3
        assert spec.cone_power(30.0) == pytest.approx(expected, rel=1e-3)


class TestBareSurface:
    def test_analytic_efficiency_value(self):
        # closed form: Fresnel transmission times in-plane dipole cone fraction
        eta = analytic_no_cavity_efficiency(3.5, 0.5)
        c = np.cos(np.arcsin(0.5 / 3.5))
        expected = (1.0 - (2.5 / 4.5) ** 2) * (0.5 - 0.375 * c - 0.125 * c**3)
        assert eta == pytest.approx(expected, rel=1e-12)
        assert 0.004 < eta < 0.006  # about half a percent

    def test_numeric_matches_analytic_within_ten_percent(self):
        geom = bare_surface_geometry()
        eta = direct_collection_efficiency(geom, 0.5)
        assert eta == pytest.approx(analytic_no_cavity_efficiency(3.5, 0.5), rel=0.10)

    def test_energy_closure(self):
        spec = emission_pattern(bare_surface_geometry(), angular_resolution=0.25)
        assert spec.radiated_power() + spec.guided_power == pytest.approx(
            spec.total_power, rel=1e-6
        )

    def test_collection_efficiency_routes_match(self):
        geom = bare_surface_geometry()
        spec = emission_pattern(geom, angular_resolution=0.25)
        eta_pattern = collection_efficiency(spec, 0.5)
        eta_direct = direct_collection_efficiency(geom, 0.5)
        assert eta_pattern == pytest.approx(eta_direct, rel=0.02)


class TestGuidedSpike:
    def test_spike_folds_guided_power_into_pattern(self):
        # a high-reflectivity lower mirror traps real guided power
        from speds.designer import fig5_design, geometry_for

        geom = geometry_for(fig5_design(12))
        plain = emission_pattern(geom, angular_resolution=0.25)
        folded = emission_pattern(geom, angular_resolution=0.25, include_guided_spike=True)
        assert plain.guided_power > 0.05 * plain.total_power
        assert folded.radiated_power() == pytest.approx(folded.total_power, rel=1e-6)
        i90 = np.argmin(np.abs(folded.theta_grid - 90.0))
        assert folded.power_density[i90] > plain.power_density[i90]


class TestSerialization:
    def test_csv_round_trip(self, tmp_path):
        spec = emission_pattern(homogeneous_geometry(), angular_resolution=0.5)
        path = tmp_path / "pattern.csv"
        spec.to_csv(path)
        back = AngularPowerSpectrum.from_csv(path)
        assert np.allclose(back.theta_grid, spec.theta_grid)
        assert np.allclose(back.power_density, spec.power_density, rtol=1e-9)
        assert back.total_power == pytest.approx(spec.total_power)
        assert back.guided_in_pattern == spec.guided_in_pattern

    def test_to_csv_accepts_buffer(self):
        spec = emission_pattern(homogeneous_geometry(), angular_resolution=0.5)
        buf = io.StringIO()
        spec.to_csv(buf)
        assert buf.getvalue().startswith("# guided_power")


class TestValidation:
    def test_mismatched_host_rejected(self):
        upper = LayerStack(3.0, (), 1.0)
        lower = LayerStack(3.5, (), 3.5)
        with pytest.raises(InvalidInput):
            EmissionGeometry(upper, lower, DipoleSource(LAM, 3.5, 100.0, 100.0))

    def test_gain_medium_rejected(self):
        upper = LayerStack(3.5, (Layer(50.0, 2.0),), 1.0)
        object.__setattr__(upper.layers[0], "refractive_index", 2.0 - 0.5j)
        lower = LayerStack(3.5, (), 3.5)
        with pytest.raises(UnsupportedInput):
            EmissionGeometry(upper, lower, DipoleSource(LAM, 3.5, 100.0, 100.0))

    def test_negative_distance_rejected(self):
        with pytest.raises(InvalidInput):
            DipoleSource(LAM, 3.5, -1.0, 100.0)

    def test_bad_numerical_aperture_rejected(self):
        with pytest.raises(InvalidInput):
            direct_collection_efficiency(homogeneous_geometry(), 1.5)

    def test_bad_resolution_rejected(self):
        with pytest.raises(InvalidInput):
            emission_pattern(homogeneous_geometry(), angular_resolution=2.0)
