from itertools import product
import math

import numpy as np
import pytest

from beam_foundation_lib.exceptions import (DomainError, EigensolverError, InsufficientEigenvaluesError,
                                            UnsupportedRuleError)
from beam_foundation_lib.spectral import (SpectralAnalyzer, characteristic_residual, decay_fit, discretize,
                                          eigen_spectrum, kernel_K, operator_norm, parity_scores, quadrature_grid,
                                          resolvent_distance, verify_confinement)
from beam_foundation_lib.utils import BeamConfig, QuadratureGrid, Spectrum


def test_kernel_values(unit_config):
    """
    Test K(0) = alpha sqrt2 / (4k), the envelope bound and the first sign change at y = 3 pi / (2 sqrt2).

    :param unit_config: Configuration with alpha = 1.
    """
    assert kernel_K(0.0, unit_config) == pytest.approx(math.sqrt(2.0) / 4.0, rel=1e-15)
    y = np.linspace(0.0, 30.0, 3001)
    values = kernel_K(y, unit_config)
    assert np.all(np.abs(values) <= 0.5 * np.exp(-y / math.sqrt(2.0)) + 1e-16)
    zero = 0.75 * math.pi * math.sqrt(2.0)
    assert kernel_K(zero, unit_config) == pytest.approx(0.0, abs=1e-15)
    assert kernel_K(zero - 0.1, unit_config) > 0 > kernel_K(zero + 0.1, unit_config)


def test_kernel_scales_with_alpha_and_k():
    """
    Test that K(0) follows alpha / k.
    """
    config = BeamConfig.with_alpha(2.0, k=4.0)
    assert config.alpha == pytest.approx(2.0)
    assert kernel_K(0.0, config) == pytest.approx(2.0 * math.sqrt(2.0) / 16.0)


def test_kernel_rejects_negative_distance(unit_config):
    """
    :param unit_config: Configuration with alpha = 1.
    """
    with pytest.raises(DomainError):
        kernel_K(-1e-3, unit_config)
    with pytest.raises(DomainError):
        kernel_K(np.array([0.0, np.nan]), unit_config)


@pytest.mark.parametrize("rule, n, panels", [
    ("gauss_legendre", 40, 1),
    ("gauss_legendre", 40, 4),
    ("composite_simpson", 41, 1),
])
def test_quadrature_grid_integrates_polynomials(rule, n, panels):
    """
    Test that every rule integrates x^2 and x^3 exactly on [-l, l] and weights sum to 2l.

    :param rule: Quadrature rule.
    :param n: Node count.
    :param panels: Gauss-Legendre panels.
    """
    grid = quadrature_grid(1.5, n, rule, panels)
    assert grid.n == n
    assert np.all(np.diff(grid.nodes) > 0)
    assert np.all(grid.weights > 0)
    assert grid.weights.sum() == pytest.approx(3.0, rel=1e-14)
    assert grid.weights @ grid.nodes ** 2 == pytest.approx(2.0 * 1.5 ** 3 / 3.0, rel=1e-13)
    assert grid.weights @ grid.nodes ** 3 == pytest.approx(0.0, abs=1e-13)


def test_quadrature_grid_rejects_bad_arguments():
    """
    Test unknown rules, even Simpson node counts and panels that do not divide n.
    """
    with pytest.raises(UnsupportedRuleError):
        quadrature_grid(1.0, 40, "trapezoid")
    with pytest.raises(UnsupportedRuleError):
        quadrature_grid(1.0, 40, "composite_simpson")
    with pytest.raises(UnsupportedRuleError):
        quadrature_grid(1.0, 40, "gauss_legendre", panels=3)


def test_discretize_is_exactly_symmetric(unit_config):
    """
    :param unit_config: Configuration with alpha = 1.
    """
    for rule, n in (("gauss_legendre", 120), ("composite_simpson", 121)):
        matrix = discretize(unit_config, n, rule)
        assert matrix.entries.shape == (n, n)
        assert matrix.symmetry_defect == 0.0
        np.testing.assert_allclose(np.diag(matrix.entries), matrix.weights * math.sqrt(2.0) / 4.0, rtol=1e-14)


def test_discretize_rejects_too_few_nodes(unit_config):
    """
    :param unit_config: Configuration with alpha = 1.
    """
    with pytest.raises(DomainError):
        discretize(unit_config, 3)


def test_spectrum_confined_at_400_nodes(unit_config, file_stream_logger):
    """
    Test that every eigenvalue lies in (-1e-10, 1 - 1e-3) for E = I = k = l = 1.

    :param unit_config: Configuration with alpha = 1.
    :param file_stream_logger: Logger writing to file and console.
    """
    analyzer = SpectralAnalyzer(file_stream_logger)
    spectrum = analyzer.analyze(unit_config, 400)
    verdict = analyzer.verify_confinement(spectrum, unit_config)
    assert verdict
    assert verdict.violations == []
    assert verdict.lower == -1e-10
    assert verdict.upper <= 1.0 - 1e-3
    assert np.all(spectrum.eigenvalues > -1e-10)
    assert np.all(spectrum.eigenvalues < 1.0 - 1e-3)
    assert np.all(np.diff(spectrum.eigenvalues) <= 0)
    assert spectrum.residual_bound < 1e-12


# Beams with alpha * l above ~3 bring lambda_1 k within the default margin of 1.
CONFINEMENT_SWEEP = [(E, I, k, l) for E, I, k, l in product((1e-2, 1.0, 1e2), repeat=4)
                     if BeamConfig(E=E, I=I, k=k, l=l).alpha * l <= 3.2]


@pytest.mark.parametrize("E, I, k, l", CONFINEMENT_SWEEP)
def test_confinement_over_parameter_sweep(file_stream_logger, E, I, k, l):
    """
    Test the confinement verdict with 200 nodes across a log grid of E, I, k and l.

    :param file_stream_logger: Logger writing to file and console.
    :param E: Young's modulus.
    :param I: Moment of inertia.
    :param k: Spring constant.
    :param l: Half-length.
    """
    config = BeamConfig(E=E, I=I, k=k, l=l)
    spectrum = SpectralAnalyzer(file_stream_logger).analyze(config, 200)
    verdict = verify_confinement(spectrum, config)
    assert verdict, verdict.violations[:3]
    assert np.all(spectrum.eigenvalues * k < 1.0)


def test_confinement_sweep_covers_the_grid():
    """
    Test that the sweep reaches both ends of every parameter range.
    """
    assert len(CONFINEMENT_SWEEP) == 51
    for column in zip(*CONFINEMENT_SWEEP):
        assert {1e-2, 1.0, 1e2} <= set(column)


def test_top_eigenvalue_is_stable_under_refinement(unit_config):
    """
    Test that lambda_1 barely moves between 200, 400 and 800 Gauss-Legendre nodes.

    :param unit_config: Configuration with alpha = 1.
    """
    top = [eigen_spectrum(discretize(unit_config, n)).eigenvalues[0] for n in (200, 400, 800)]
    assert 0.5 < top[1] < 0.7
    assert top[0] == pytest.approx(top[1], rel=1e-7)
    assert top[1] == pytest.approx(top[2], rel=1e-8)


def test_simpson_and_gauss_legendre_agree(unit_config):
    """
    Test that both rules converge to the same leading eigenvalues.

    :param unit_config: Configuration with alpha = 1.
    """
    gauss = eigen_spectrum(discretize(unit_config, 400, "gauss_legendre")).eigenvalues[:5]
    simpson = eigen_spectrum(discretize(unit_config, 401, "composite_simpson")).eigenvalues[:5]
    np.testing.assert_allclose(simpson, gauss, rtol=1e-5)


def test_error_estimates_and_reliable_count(unit_config, file_stream_logger, caplog):
    """
    Test the companion-grid error estimates and the reliable eigenvalue count.

    :param unit_config: Configuration with alpha = 1.
    :param file_stream_logger: Logger writing to file and console.
    :param caplog: Pytest fixture for capturing log messages.
    """
    spectrum = SpectralAnalyzer(file_stream_logger).analyze(unit_config, 400)
    assert spectrum.error_estimates.shape == (400,)
    assert np.all(np.isfinite(spectrum.error_estimates[:200]))
    assert np.all(np.isinf(spectrum.error_estimates[200:]))
    assert spectrum.error_estimates[0] < 1e-8
    assert 48 <= spectrum.reliable_count < 400
    assert "reliable eigenvalues" in caplog.text


def test_reliable_eigenvalues_are_simple(unit_config, file_stream_logger):
    """
    Test that consecutive reliable eigenvalues are separated by more than 1e-12.

    :param unit_config: Configuration with alpha = 1.
    :param file_stream_logger: Logger writing to file and console.
    """
    spectrum = SpectralAnalyzer(file_stream_logger).analyze(unit_config, 400)
    reliable = spectrum.eigenvalues[:spectrum.reliable_count]
    assert np.all(-np.diff(reliable) > 1e-12)


def test_parity_alternates(unit_config):
    """
    Test that the leading eigenvectors alternate even, odd, even, ... about x = 0.

    :param unit_config: Configuration with alpha = 1.
    """
    spectrum = eigen_spectrum(discretize(unit_config, 400))
    assert spectrum.parity_classes()[:6] == ["even", "odd"] * 3
    assert np.all(np.abs(np.abs(spectrum.parity[:6]) - 1.0) < 1e-10)


def test_parity_needs_symmetric_grid(unit_config):
    """
    Test that parity is not classified on a grid that is not symmetric about 0.

    :param unit_config: Configuration with alpha = 1.
    """
    nodes = np.linspace(-1.0, 1.2, 11)
    grid = QuadratureGrid(nodes=nodes, weights=np.full(11, 0.22), rule="custom")
    assert parity_scores(np.eye(11), grid) is None
    assert parity_scores(np.eye(11), None) is None
    spectrum = Spectrum(eigenvalues=np.array([1.0, 0.5]), n=2, residual_bound=0.0)
    assert spectrum.parity_classes() == ["unclassified", "unclassified"]


def test_stiff_foundation_spectrum_below_one_over_k():
    """
    Test that k = 100 keeps every eigenvalue below 1/k = 0.01.
    """
    config = BeamConfig(k=100.0)
    spectrum = eigen_spectrum(discretize(config, 400))
    assert np.all(spectrum.eigenvalues < 0.01)
    assert verify_confinement(spectrum, config)


def test_planted_violation_is_reported(unit_config, file_stream_logger, caplog):
    """
    Test that eigenvalues outside (-tol, 1/k - margin) are listed as violations.

    :param unit_config: Configuration with alpha = 1.
    :param file_stream_logger: Logger writing to file and console.
    :param caplog: Pytest fixture for capturing log messages.
    """
    planted = Spectrum(eigenvalues=np.array([1.5, 0.9995, 0.5, -1e-6]), n=4, residual_bound=0.0)
    verdict = SpectralAnalyzer(file_stream_logger).verify_confinement(planted, unit_config)
    assert not verdict
    assert verdict.violations == [1.5, 0.9995, -1e-6]
    assert "Confinement violated by 3" in caplog.text


def test_error_estimates_widen_confinement_margin(unit_config):
    """
    Test that a large discretisation error estimate pulls the upper bound down.

    :param unit_config: Configuration with alpha = 1.
    """
    spectrum = Spectrum(eigenvalues=np.array([0.9, 0.1]), n=2, residual_bound=0.0,
                        error_estimates=np.array([0.02, np.inf]))
    verdict = verify_confinement(spectrum, unit_config)
    assert verdict.upper == pytest.approx(0.8)
    assert verdict.violations == [0.9]


@pytest.mark.parametrize("lam", [-1e-6, -1.0, -1e6, 1.0 + 1e-9, 2.0, 1e6])
def test_characteristic_residual_positive(unit_config, lam):
    """
    Test that no eigenvalue candidate outside [0, 1/k] solves the characteristic equation.

    :param unit_config: Configuration with alpha = 1.
    :param lam: Eigenvalue candidate.
    """
    assert characteristic_residual(lam, unit_config) > 0


@pytest.mark.parametrize("lam", [0.0, 0.5, 1.0])
def test_characteristic_residual_rejects_confined_lambda(unit_config, lam):
    """
    :param unit_config: Configuration with alpha = 1.
    :param lam: Value inside [0, 1/k].
    """
    with pytest.raises(DomainError):
        characteristic_residual(lam, unit_config)


def test_decay_fit_synthetic_sequence():
    """
    Test that lam_n = n^-4 gives slope -4 to 1e-12.
    """
    spectrum = Spectrum(eigenvalues=np.arange(1, 101, dtype=float) ** -4.0, n=100, residual_bound=0.0)
    fit = decay_fit(spectrum, 4, 60)
    assert fit.slope == pytest.approx(-4.0, abs=1e-12)
    assert fit.r2 == pytest.approx(1.0, abs=1e-12)


def test_decay_fit_unit_beam(unit_config, file_stream_logger):
    """
    Test that the default window gives a slope near -4.

    :param unit_config: Configuration with alpha = 1.
    :param file_stream_logger: Logger writing to file and console.
    """
    analyzer = SpectralAnalyzer(file_stream_logger)
    fit = analyzer.decay_fit(analyzer.analyze(unit_config, 400), 16, 48)
    assert -4.5 <= fit.slope <= -3.5
    assert fit.r2 > 0.99


@pytest.mark.parametrize("window", [(1, 10), (10, 10), (12, 4), (2, 101)])
def test_decay_fit_rejects_bad_window(window):
    """
    :param window: (n_lo, n_hi) outside the admissible range.
    """
    spectrum = Spectrum(eigenvalues=np.arange(1, 101, dtype=float) ** -4.0, n=100, residual_bound=0.0)
    with pytest.raises(InsufficientEigenvaluesError):
        decay_fit(spectrum, *window)


def test_decay_fit_rejects_unreliable_tail(file_stream_logger, caplog):
    """
    Test that a window reaching past the reliable eigenvalues is refused and logged.

    :param file_stream_logger: Logger writing to file and console.
    :param caplog: Pytest fixture for capturing log messages.
    """
    values = np.arange(1, 21, dtype=float) ** -4.0
    estimates = np.where(np.arange(20) < 10, 1e-12, 1.0)
    spectrum = Spectrum(eigenvalues=values, n=20, residual_bound=0.0, error_estimates=estimates)
    assert spectrum.reliable_count == 10
    with pytest.raises(InsufficientEigenvaluesError):
        SpectralAnalyzer(file_stream_logger).decay_fit(spectrum, 2, 15)
    assert "reliable eigenvalues" in caplog.text


def test_operator_norm_matches_top_eigenvalue(unit_config):
    """
    :param unit_config: Configuration with alpha = 1.
    """
    matrix = discretize(unit_config, 200)
    spectrum = eigen_spectrum(matrix)
    assert operator_norm(matrix) == pytest.approx(spectrum.eigenvalues[0], rel=1e-10)
    assert resolvent_distance(spectrum, 2.0) == pytest.approx(2.0 - spectrum.eigenvalues[0], rel=1e-12)
    assert resolvent_distance(spectrum, spectrum.eigenvalues[3]) == 0.0


def test_eigen_spectrum_residual_check(unit_config, file_stream_logger, caplog):
    """
    Test that an unattainable residual tolerance raises EigensolverError with diagnostics.

    :param unit_config: Configuration with alpha = 1.
    :param file_stream_logger: Logger writing to file and console.
    :param caplog: Pytest fixture for capturing log messages.
    """
    matrix = discretize(unit_config, 50)
    with pytest.raises(EigensolverError) as error:
        SpectralAnalyzer(file_stream_logger).eigen_spectrum(matrix, tol=0.0)
    assert error.value.diagnostics["n"] == 50
    assert 1 <= error.value.diagnostics["worst_index"] <= 50
    assert "exceeds tolerance" in caplog.text


def test_eigenvectors_satisfy_eigen_equation(unit_config):
    """
    :param unit_config: Configuration with alpha = 1.
    """
    matrix = discretize(unit_config, 100)
    spectrum = eigen_spectrum(matrix)
    v = spectrum.eigenvectors[:, 0]
    np.testing.assert_allclose(matrix.entries @ v, spectrum.eigenvalues[0] * v, atol=1e-13)
    assert spectrum.residuals.shape == (100,)
    assert spectrum.residual_bound == spectrum.residuals.max()
