import math

import numpy as np
import pytest

from beam_foundation_lib.charfun import eval_margin
from beam_foundation_lib.exceptions import DomainError
from beam_foundation_lib.scanner import (Scanner, abc_coefficients, check_abc_positive, check_g_inverse_ordering,
                                         check_lemma_small_kappa, check_mollified_chain, margin_with_error)
from beam_foundation_lib.utils import KAPPA_UPPER_BRANCH, ScanRegion

SQRT2 = math.sqrt(2.0)


def test_margin_with_error_regular_and_saturated():
    """
    Test that the margin matches eval_margin below the overflow threshold and switches to
    log space above it.
    """
    kappa = np.array([0.01, 0.5, 2.0, 40.0])
    margin, error, saturated = margin_with_error(kappa, 1.0)
    assert not saturated.any()
    np.testing.assert_allclose(margin, eval_margin(kappa, 1.0), rtol=1e-14)
    assert np.all(error >= 0)
    assert np.all(error <= 1e-12 * (np.abs(margin) + 1.0))

    margin, error, saturated = margin_with_error(np.array([100.0]), 50.0)
    assert saturated.all()
    assert np.isfinite(margin).all()
    assert margin[0] > 4000.0


@pytest.mark.parametrize("kappa", [KAPPA_UPPER_BRANCH + 1e-6, 3.0, 10.0, 1e3, 1e6])
def test_abc_coefficients_positive(kappa):
    """
    Test the cubic coefficients at single points beyond 1 + sqrt2.

    :param kappa: Characteristic coordinate.
    """
    coefficients = check_abc_positive(kappa)
    assert coefficients.all_positive
    assert 0.0 < coefficients.arctan_value < 0.5 * math.pi


def test_abc_arctan_matches_closed_form():
    """
    Test that the arctan term equals 4 arctan(1/kappa) beyond 1 + sqrt2.
    """
    kappa = np.geomspace(KAPPA_UPPER_BRANCH + 1e-3, 1e6, 500)
    angle, _, _, _ = abc_coefficients(kappa)
    np.testing.assert_allclose(angle, 4.0 * np.arctan(1.0 / kappa), rtol=1e-10)


def test_abc_positive_rejects_small_kappa():
    """
    Test the precondition kappa > 1 + sqrt2.
    """
    with pytest.raises(DomainError):
        check_abc_positive(2.0)


def test_mollified_chain():
    """
    Test psi~ > f(cos t) > q(ghat^{-1}(-t)) > q~ at 200 points of (3 pi/2, 2 pi) for L = 0.05.
    """
    from beam_foundation_lib.charfun import q_of_ghat_inverse
    for t in np.linspace(1.5 * math.pi, 2.0 * math.pi, 202)[1:-1]:
        chain = check_mollified_chain(float(t), 0.05)
        assert chain.psi_tilde > chain.f_cos > q_of_ghat_inverse(float(t)) > chain.q_tilde


def test_mollified_chain_rejects_t_outside_interval():
    """
    Test the t-interval precondition.
    """
    with pytest.raises(DomainError):
        check_mollified_chain(1.0, 0.05)


@pytest.mark.parametrize("t", [0.5, math.pi, 1.5 * math.pi, 5.5])
def test_g_inverse_ordering(t):
    """
    Test g_L^{-1}(t) < ghat^{-1}(-t) with monotone approach as L decreases.

    :param t: Angle.
    """
    assert check_g_inverse_ordering(t, [10.0, 1.0, 0.1, 0.01, 0.001])


def test_g_inverse_limit_at_three_half_pi():
    """
    Test that g_L^{-1}(3 pi/2) approaches 1 + sqrt2 within 1e-4 at L = 1e-5.
    """
    assert check_g_inverse_ordering(1.5 * math.pi, [1.0, 1e-5], limit_tol=1e-4)
    assert not check_g_inverse_ordering(1.5 * math.pi, [1.0, 0.1], limit_tol=1e-4)


def test_g_inverse_ordering_rejects_bad_input():
    """
    Test the argument checks of the ordering predicate.
    """
    with pytest.raises(DomainError):
        check_g_inverse_ordering(7.0, [1.0])
    with pytest.raises(DomainError):
        check_g_inverse_ordering(1.0, [])


def test_g_inverse_ordering_ignores_repeated_L():
    """
    Test that a repeated L does not break the strict monotonicity check.
    """
    assert check_g_inverse_ordering(1.0, [1.0, 0.1, 1.0, 0.1, 0.01])
    assert check_g_inverse_ordering(1.5 * math.pi, [1e-5, 1.0, 1e-5], limit_tol=1e-4)


def test_small_kappa_margin_check():
    """
    Test psi_L > q on the dense small-kappa grid.
    """
    assert check_lemma_small_kappa([0.01, 1.0, 2.0 * SQRT2, 100.0])
    assert not check_lemma_small_kappa([])


def test_scan_small_region_is_positive(file_stream_logger):
    """
    Test that a coarse scan certifies positivity and reports its counters.

    :param file_stream_logger: Logger writing to file and console.
    """
    region = ScanRegion(kappa_min=0.01, kappa_max=50.0, L_min=0.01, L_max=50.0, initial_grid=(60, 30),
                        refine_depth=2)
    report = Scanner(file_stream_logger, workers=1).scan_psi_minus_q(region)
    assert report.all_positive
    assert report.min_margin > 0
    assert region.contains(*report.witness)
    assert report.cells_evaluated >= 59 * 29
    assert report.points_evaluated >= 60 * 30 + 59 * 29
    assert report.cells.shape[1] == 7
    assert report.cells.shape[0] == report.cells_evaluated


def test_scan_threads_match_serial(file_stream_logger):
    """
    Test that threaded row evaluation gives the same minimum as the serial scan.

    :param file_stream_logger: Logger writing to file and console.
    """
    region = ScanRegion(kappa_min=0.05, kappa_max=20.0, L_min=0.1, L_max=20.0, initial_grid=(40, 20),
                        refine_depth=1)
    serial = Scanner(file_stream_logger, workers=1).scan_psi_minus_q(region)
    threaded = Scanner(file_stream_logger, workers=4).scan_psi_minus_q(region)
    assert threaded.min_margin == serial.min_margin
    assert threaded.witness == serial.witness


def test_scan_inverted_fails(file_stream_logger, caplog):
    """
    Test that scanning q - psi reports a nonpositive margin and logs a warning.

    :param file_stream_logger: Logger writing to file and console.
    :param caplog: Pytest fixture for capturing log messages.
    """
    region = ScanRegion(initial_grid=(20, 10), refine_depth=1)
    report = Scanner(file_stream_logger, workers=1).scan_psi_minus_q(region, inverted=True)
    assert not report.all_positive
    assert report.inverted
    assert "Nonpositive margin" in caplog.text


def test_scan_report_dict(file_stream_logger):
    """
    Test the JSON shape of a scan report.

    :param file_stream_logger: Logger writing to file and console.
    """
    region = ScanRegion(initial_grid=(10, 5), refine_depth=0)
    data = Scanner(file_stream_logger, workers=1).scan_psi_minus_q(region).to_dict()
    assert data["grid"] == [10, 5]
    assert set(data["witness"]) == {"kappa", "L"}
    assert data["all_positive"] is True
    assert data["refined_cells"] == 0


@pytest.mark.parametrize("kwargs", [
    {"kappa_min": 0.0},
    {"kappa_min": 5.0, "kappa_max": 1.0},
    {"L_max": -1.0},
    {"initial_grid": (1, 10)},
    {"refine_depth": -1},
])
def test_scan_region_validation(kwargs):
    """
    Test that invalid regions are rejected on construction.

    :param kwargs: Offending field values.
    """
    with pytest.raises(DomainError):
        ScanRegion(**kwargs)


def test_auxiliary_checks_all_pass(file_stream_logger):
    """
    Test that every auxiliary inequality check passes and reports its sample size.

    :param file_stream_logger: Logger writing to file and console.
    """
    reports = Scanner(file_stream_logger, workers=1).run_auxiliary_checks(seed=7)
    names = [report.name for report in reports]
    assert len(names) == len(set(names)) == 14
    for report in reports:
        assert report.passed, f"{report.name} failed with worst value {report.worst_value} at {report.witness}"
        assert report.checked > 0
    chain = next(report for report in reports if report.name == "mollified_chain")
    assert chain.checked == 200
    assert "holds" in chain.note
    abc = next(report for report in reports if report.name == "abc_positive")
    assert abc.checked == 10 ** 4
