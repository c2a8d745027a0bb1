"""
Symmetrised Nystrom discretisation of the finite-beam operator and its spectrum.
"""
import math
from typing import Optional

import numpy as np
from scipy import linalg
from scipy.sparse.linalg import ArpackError, eigsh
from scipy.special import roots_legendre

from beam_foundation_lib.charfun import eval_margin
from beam_foundation_lib.exceptions import (DomainError, EigensolverError, InsufficientEigenvaluesError,
                                            UnsupportedRuleError)
from beam_foundation_lib.logger import Logger
from beam_foundation_lib.utils import (CONFINEMENT_MARGIN, CONFINEMENT_TOLERANCE, DEFAULT_N, DEFAULT_RULE,
                                       EIGEN_TOLERANCE, PARITY_THRESHOLD, QUADRATURE_RULES, RELIABLE_FACTOR,
                                       BeamConfig, ConfinementVerdict, DecayFit, KernelMatrix, QuadratureGrid,
                                       SpectralPoint, Spectrum)

MIN_NODES = 4
CONVERGENCE_ORDER = 4  # K(|y|) has a jump in its third derivative at y = 0


def kernel_K(y: float | np.ndarray, config: BeamConfig) -> float | np.ndarray:
    """
    Green's function of EI u'''' + k u on the real line:
    K(y) = (alpha / 2k) exp(-alpha y / sqrt2) sin(alpha y / sqrt2 + pi/4).

    :param y: Distance(s) |x - xi| >= 0.
    :param config: Beam parameters.
    :return: Kernel value(s), bounded by (alpha / 2k) exp(-alpha y / sqrt2).
    :raises DomainError: For negative y.
    """
    distance = np.asarray(y, dtype=float)
    if np.any(np.isnan(distance)) or np.any(distance < 0):
        raise DomainError(f"kernel distance must be >= 0, got {y}")
    scaled = config.alpha * distance / math.sqrt(2.0)
    value = config.alpha / (2.0 * config.k) * np.exp(-scaled) * np.sin(scaled + 0.25 * math.pi)
    return float(value) if np.ndim(y) == 0 else value


def quadrature_grid(l: float, n: int, rule: str = DEFAULT_RULE, panels: int = 1) -> QuadratureGrid:
    """
    Quadrature nodes and weights on [-l, l].

    gauss_legendre splits [-l, l] into equal panels with n / panels Gauss points each;
    composite_simpson uses n equispaced nodes and needs n odd.

    :param l: Half-length of the interval.
    :param n: Total number of nodes.
    :param rule: One of QUADRATURE_RULES.
    :param panels: Number of Gauss-Legendre panels; must divide n.
    :return: QuadratureGrid with weights summing to 2l.
    :raises UnsupportedRuleError: For an unknown rule or a node count the rule cannot use.
    """
    if rule not in QUADRATURE_RULES:
        raise UnsupportedRuleError(f"Unknown quadrature rule {rule!r}, expected one of {QUADRATURE_RULES}")
    if rule == "gauss_legendre":
        if panels < 1 or n % panels:
            raise UnsupportedRuleError(f"{panels} panels do not divide {n} nodes")
        reference, reference_weights = roots_legendre(n // panels)
        edges = np.linspace(-l, l, panels + 1)
        half = 0.5 * np.diff(edges)
        centres = 0.5 * (edges[:-1] + edges[1:])
        nodes = (centres[:, None] + half[:, None] * reference[None, :]).ravel()
        weights = (half[:, None] * reference_weights[None, :]).ravel()
        return QuadratureGrid(nodes=nodes, weights=weights, rule=rule)
    if n % 2 == 0:
        raise UnsupportedRuleError(f"composite_simpson needs an odd number of nodes, got {n}")
    nodes = np.linspace(-l, l, n)
    h = nodes[1] - nodes[0]
    weights = np.full(n, 2.0)
    weights[1::2] = 4.0
    weights[0] = weights[-1] = 1.0
    return QuadratureGrid(nodes=nodes, weights=weights * h / 3.0, rule=rule)


def discretize(config: BeamConfig, n: int = DEFAULT_N, rule: str = DEFAULT_RULE, panels: int = 1) -> KernelMatrix:
    """
    Builds A_ij = sqrt(w_i) K(|x_i - x_j|) sqrt(w_j), exactly symmetric by construction.

    :param config: Beam parameters.
    :param n: Number of nodes, at least 4.
    :param rule: Quadrature rule identifier.
    :param panels: Gauss-Legendre panel count.
    :return: KernelMatrix.
    :raises DomainError: For n < 4.
    """
    if n < MIN_NODES:
        raise DomainError(f"n must be at least {MIN_NODES}, got {n}")
    grid = quadrature_grid(config.l, n, rule, panels)
    root_weights = np.sqrt(grid.weights)
    distances = np.abs(grid.nodes[:, None] - grid.nodes[None, :])
    entries = np.outer(root_weights, root_weights) * kernel_K(distances, config)
    return KernelMatrix(grid=grid, entries=entries, config=config)


def parity_scores(eigenvectors: np.ndarray, grid: Optional[QuadratureGrid]) -> Optional[np.ndarray]:
    """
    <v, P v> for unit eigenvectors, P the reflection x -> -x; +1 for even, -1 for odd.

    :param eigenvectors: Columns are eigenvectors of a KernelMatrix.
    :param grid: Grid the matrix was built on.
    :return: Scores, or None if the grid is not symmetric about 0.
    """
    if grid is None or not (np.allclose(grid.nodes, -grid.nodes[::-1], rtol=0.0, atol=1e-13)
                            and np.allclose(grid.weights, grid.weights[::-1], rtol=1e-12, atol=0.0)):
        return None
    norms = np.sum(eigenvectors * eigenvectors, axis=0)
    return np.sum(eigenvectors * eigenvectors[::-1, :], axis=0) / norms


def eigen_spectrum(m: KernelMatrix, tol: float = EIGEN_TOLERANCE) -> Spectrum:
    """
    Full symmetric eigendecomposition (LAPACK tridiagonalisation), sorted descending and residual-checked.

    :param m: KernelMatrix.
    :param tol: Admissible residual ||A v - lam v|| relative to max(1, ||A||_2).
    :return: Spectrum with eigenvectors, residuals and parity scores.
    :raises EigensolverError: If LAPACK fails or a residual exceeds the tolerance.
    """
    try:
        values, vectors = linalg.eigh(m.entries)
    except (linalg.LinAlgError, ValueError) as error:
        raise EigensolverError(f"Symmetric eigensolver failed for n={m.n}: {error}",
                               diagnostics={"n": m.n}) from error
    order = np.argsort(values)[::-1]
    values = values[order]
    vectors = vectors[:, order]
    residuals = np.linalg.norm(m.entries @ vectors - vectors * values[None, :], axis=0)
    residual_bound = float(residuals.max())
    scale = max(1.0, float(np.max(np.abs(values))))
    if not np.isfinite(residual_bound) or residual_bound > tol * scale:
        worst = int(np.argmax(residuals))
        raise EigensolverError(f"Eigenpair residual {residual_bound:.3e} exceeds tolerance {tol * scale:.3e}",
                               diagnostics={"n": m.n, "worst_index": worst + 1,
                                            "worst_eigenvalue": float(values[worst])})
    return Spectrum(eigenvalues=values, n=m.n, residual_bound=residual_bound, eigenvectors=vectors, grid=m.grid,
                    parity=parity_scores(vectors, m.grid), residuals=residuals)


def verify_confinement(s: Spectrum, config: BeamConfig, tol: float = CONFINEMENT_TOLERANCE,
                       margin: float = CONFINEMENT_MARGIN) -> ConfinementVerdict:
    """
    Checks -tol < lam < 1/k - margin_floor for every eigenvalue.
    margin_floor is margin / k, widened to the discretisation error estimate when that is larger.

    :param s: Spectrum to check.
    :param config: Beam parameters supplying k.
    :param tol: Allowed negative excursion.
    :param margin: Relative distance kept from 1/k.
    :return: ConfinementVerdict listing violating eigenvalues.
    """
    floor = margin / config.k
    if s.error_estimates is not None and s.error_estimates.size:
        finite = s.error_estimates[np.isfinite(s.error_estimates)]
        if finite.size:
            floor = max(floor, RELIABLE_FACTOR * float(finite.max()))
    lower, upper = -tol, 1.0 / config.k - floor
    violations = [float(value) for value in s.eigenvalues if not lower < value < upper]
    return ConfinementVerdict(confined=not violations, lower=lower, upper=upper, violations=violations)


def characteristic_residual(lam: float, config: BeamConfig) -> float:
    """
    psi_L(kappa) - q(kappa) at kappa = (1 - 1/(lam k))^(1/4), L = 2 sqrt2 l alpha.
    Any zero would be an eigenvalue outside (0, 1/k).

    :param lam: Eigenvalue candidate outside [0, 1/k].
    :param config: Beam parameters.
    :return: The residual, positive for every admissible lam.
    :raises DomainError: For lam in [0, 1/k].
    """
    point = SpectralPoint.from_lambda(lam, config.k)
    return float(eval_margin(point.kappa, config.L))


def decay_fit(s: Spectrum, n_lo: int, n_hi: int) -> DecayFit:
    """
    Least-squares slope of log lam_j against log j for j = n_lo..n_hi (1-based, inclusive).

    :param s: Spectrum with positive leading eigenvalues.
    :param n_lo: First index, at least 2.
    :param n_hi: Last index, above n_lo and within the reliable eigenvalues.
    :return: DecayFit(slope, r2).
    :raises InsufficientEigenvaluesError: For a degenerate window or one reaching unreliable eigenvalues.
    """
    reliable = s.reliable_count
    if not 2 <= n_lo < n_hi:
        raise InsufficientEigenvaluesError(f"decay window needs 2 <= n_lo < n_hi, got [{n_lo}, {n_hi}]")
    if n_hi > reliable:
        raise InsufficientEigenvaluesError(
            f"decay window [{n_lo}, {n_hi}] reaches past the {reliable} reliable eigenvalues")
    index = np.arange(n_lo, n_hi + 1, dtype=float)
    values = s.eigenvalues[n_lo - 1:n_hi]
    if np.any(values <= 0):
        raise InsufficientEigenvaluesError(f"decay window [{n_lo}, {n_hi}] contains nonpositive eigenvalues")
    x, y = np.log(index), np.log(values)
    slope, intercept = np.polyfit(x, y, 1)
    residual = y - (slope * x + intercept)
    total = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - float(np.sum(residual ** 2)) / float(total) if total > 0 else 1.0
    return DecayFit(slope=float(slope), r2=r2)


def operator_norm(m: KernelMatrix) -> float:
    """
    Largest eigenvalue of the symmetric positive matrix, i.e. its 2-norm, by Lanczos iteration.

    :param m: KernelMatrix.
    :return: lam_1.
    :raises EigensolverError: If ARPACK does not converge.
    """
    try:
        top = eigsh(m.entries, k=1, which="LA", return_eigenvectors=False)
    except ArpackError as error:
        raise EigensolverError(f"Lanczos iteration for the top eigenvalue failed: {error}",
                               diagnostics={"n": m.n}) from error
    return float(top[0])


def resolvent_distance(s: Spectrum, lam: float) -> float:
    """
    Distance from lam to the computed spectrum; the resolvent norm of A is its reciprocal.
    """
    return float(np.min(np.abs(s.eigenvalues - lam)))


def _companion_size(n: int, rule: str, panels: int) -> Optional[int]:
    size = n // 2
    if rule == "composite_simpson" and size % 2 == 0:
        size += 1
    if rule == "gauss_legendre":
        size -= size % panels
    return size if size >= MIN_NODES else None


class SpectralAnalyzer:
    def __init__(self, logger: Logger) -> None:
        """
        Initializes the SpectralAnalyzer instance.

        :param logger: Logger instance for logging events.
        """
        self.logger = logger

    def discretize(self, config: BeamConfig, n: int = DEFAULT_N, rule: str = DEFAULT_RULE,
                   panels: int = 1) -> KernelMatrix:
        try:
            with self.logger.timed(f"assembly n={n} rule={rule}"):
                matrix = discretize(config, n, rule, panels)
        except (DomainError, UnsupportedRuleError) as error:
            self.logger.log_message(f"Cannot discretise: {error}", "ERROR")
            raise
        self.logger.log_message(
            f"Assembled {n}x{n} {rule} matrix for alpha={config.alpha:.6g}, l={config.l:.6g}, "
            f"symmetry defect {matrix.symmetry_defect:.1e}", "DEBUG")
        return matrix

    def eigen_spectrum(self, m: KernelMatrix, tol: float = EIGEN_TOLERANCE) -> Spectrum:
        try:
            with self.logger.timed(f"eigensolve n={m.n}"):
                spectrum = eigen_spectrum(m, tol)
        except EigensolverError as error:
            self.logger.log_message(f"{error} ({error.diagnostics})", "ERROR")
            raise
        self.logger.log_message(
            f"Spectrum n={m.n}: lambda_1={spectrum.eigenvalues[0]:.10g}, residual bound "
            f"{spectrum.residual_bound:.1e}", "INFO")
        return spectrum

    def analyze(self, config: BeamConfig, n: int = DEFAULT_N, rule: str = DEFAULT_RULE, panels: int = 1,
                tol: float = EIGEN_TOLERANCE) -> Spectrum:
        """
        Discretises, solves, and estimates the discretisation error of each eigenvalue from a
        companion solve on about n/2 nodes: |lam_j(n) - lam_j(n/2)| / (2^4 - 1).
        Eigenvalues without a companion get an infinite estimate.

        :param config: Beam parameters.
        :param n: Number of nodes.
        :param rule: Quadrature rule identifier.
        :param panels: Gauss-Legendre panel count.
        :param tol: Eigensolver residual tolerance.
        :return: Spectrum with error_estimates and parity scores.
        """
        spectrum = self.eigen_spectrum(self.discretize(config, n, rule, panels), tol)
        estimates = np.full(spectrum.eigenvalues.size, np.inf)
        companion = _companion_size(n, rule, panels)
        if companion is not None:
            coarse = eigen_spectrum(discretize(config, companion, rule, panels), tol)
            count = min(companion, n)
            estimates[:count] = (np.abs(spectrum.eigenvalues[:count] - coarse.eigenvalues[:count])
                                 / (2.0 ** CONVERGENCE_ORDER - 1.0))
        else:
            self.logger.log_message(f"No companion grid for n={n}; error estimates left infinite", "WARNING")
        spectrum.error_estimates = estimates
        classes = spectrum.parity_classes()
        self.logger.log_message(
            f"{spectrum.reliable_count} reliable eigenvalues; leading symmetry classes "
            f"{', '.join(classes[:6])}", "INFO")
        return spectrum

    def verify_confinement(self, s: Spectrum, config: BeamConfig, tol: float = CONFINEMENT_TOLERANCE,
                           margin: float = CONFINEMENT_MARGIN) -> ConfinementVerdict:
        verdict = verify_confinement(s, config, tol, margin)
        if verdict:
            self.logger.log_message(f"Spectrum confined to ({verdict.lower:.3g}, {verdict.upper:.10g})", "INFO")
        else:
            self.logger.log_message(
                f"Confinement violated by {len(verdict.violations)} eigenvalue(s), first {verdict.violations[0]:.10g}",
                "ERROR")
        return verdict

    def decay_fit(self, s: Spectrum, n_lo: int, n_hi: int) -> DecayFit:
        try:
            fit = decay_fit(s, n_lo, n_hi)
        except InsufficientEigenvaluesError as error:
            self.logger.log_message(str(error), "ERROR")
            raise
        self.logger.log_message(f"Decay slope over [{n_lo}, {n_hi}]: {fit.slope:.4f} (r2={fit.r2:.6f})", "INFO")
        return fit
