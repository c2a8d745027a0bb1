"""
Deflection of beams on a Winkler foundation: convolution with the Green's function on the
real line, the finite-beam operator on [-l, l] and a Picard iteration for nonlinear foundations.
"""
from concurrent.futures import ThreadPoolExecutor
import math
from typing import List, Optional

import numpy as np
from scipy.integrate import trapezoid

from beam_foundation_lib.exceptions import (DomainError, GridMismatchError, GridTooCoarseError, MaxIterationsError,
                                            NonContractionError)
from beam_foundation_lib.logger import Logger
from beam_foundation_lib.spectral import discretize, kernel_K, operator_norm, quadrature_grid
from beam_foundation_lib.utils import (DEFAULT_N, DEFAULT_RULE, DEFLECTION_MARGIN, FIXED_POINT_MAX_ITER,
                                       FIXED_POINT_TOLERANCE, BeamConfig, DeflectionProfile, FoundationLaw,
                                       LoadProfile, QuadratureGrid, thread_count)

BOUNDARY_TOLERANCE = 1e-2  # |u| at the ends of the evaluation grid relative to max |u|
FORM_TOLERANCE = 1e-10
CHUNK = 512


def apply_operator(u: np.ndarray, grid: QuadratureGrid, config: BeamConfig,
                   points: Optional[np.ndarray] = None) -> np.ndarray:
    """
    Quadrature approximation of K_l[u](x) = int_{-l}^{l} K(|x - xi|) u(xi) dxi.

    :param u: Samples of u at the grid nodes.
    :param grid: Quadrature grid over [-l, l].
    :param config: Beam parameters.
    :param points: Evaluation points; the grid nodes when None.
    :return: K_l[u] at the evaluation points.
    :raises GridMismatchError: If u does not match the grid.
    """
    u = np.asarray(u, dtype=float)
    if u.shape != grid.nodes.shape:
        raise GridMismatchError(f"samples of shape {u.shape} do not match a grid of {grid.n} nodes")
    x = grid.nodes if points is None else np.atleast_1d(np.asarray(points, dtype=float))
    return kernel_K(np.abs(x[:, None] - grid.nodes[None, :]), config) @ (grid.weights * u)


def quadratic_form(u: np.ndarray, grid: QuadratureGrid, config: BeamConfig) -> float:
    """
    <u, K_l u> in the quadrature inner product; nonnegative up to rounding.
    """
    u = np.asarray(u, dtype=float)
    return float(np.sum(grid.weights * u * apply_operator(u, grid, config)))


def fourth_difference(u: np.ndarray, h: float) -> np.ndarray:
    """
    Five-point central fourth difference at the interior points 2..n-3.
    """
    return (u[:-4] - 4.0 * u[1:-3] + 6.0 * u[2:-2] - 4.0 * u[3:-1] + u[4:]) / h ** 4


def residual_ode(u: DeflectionProfile, w: LoadProfile, phi: Optional[FoundationLaw], config: BeamConfig) -> float:
    """
    max over interior points of |EI D4 u + phi(u, x) - w|, divided by max |w| when w is not zero.

    :param u: Deflection on a uniform grid with at least 5 interior points.
    :param w: Load; zero outside its support.
    :param phi: Foundation law; the linear law k u when None.
    :param config: Beam parameters.
    :return: Normalised residual.
    :raises GridTooCoarseError: For fewer than 9 samples.
    :raises GridMismatchError: For a non-uniform grid.
    """
    x, values = np.asarray(u.x, dtype=float), np.asarray(u.u, dtype=float)
    if x.size < 9:
        raise GridTooCoarseError(f"need at least 5 interior points for the fourth difference, got {x.size} samples")
    steps = np.diff(x)
    if np.any(steps <= 0) or not np.allclose(steps, steps[0], rtol=1e-9, atol=0.0):
        raise GridMismatchError("residual_ode needs a uniform, increasing grid")
    law = phi if phi is not None else FoundationLaw.linear(config.k)
    interior = x[2:-2]
    load = w.evaluate(interior)
    residual = (config.flexural_rigidity * fourth_difference(values, float(steps[0]))
                + law.phi(values[2:-2], interior) - load)
    scale = float(np.max(np.abs(w.w)))
    worst = float(np.max(np.abs(residual)))
    return worst / scale if scale > 0 else worst


class DeflectionSolver:
    def __init__(self, logger: Logger, workers: Optional[int] = None) -> None:
        """
        Initializes the DeflectionSolver instance.

        :param logger: Logger instance for logging events.
        :param workers: Threads for the convolution; read from BEAM_FOUNDATION_THREADS when None.
        """
        self.logger = logger
        self.workers = workers if workers is not None else thread_count(logger)

    def apply_operator(self, u: np.ndarray, grid: QuadratureGrid, config: BeamConfig,
                       points: Optional[np.ndarray] = None) -> np.ndarray:
        try:
            return apply_operator(u, grid, config, points)
        except GridMismatchError as error:
            self.logger.log_message(str(error), "ERROR")
            raise

    def default_eval_grid(self, w: LoadProfile, config: BeamConfig) -> np.ndarray:
        """
        The load grid extended on both sides by DEFLECTION_MARGIN / alpha, keeping its spacing and alignment.
        """
        h = w.spacing
        extra = math.ceil(DEFLECTION_MARGIN / (config.alpha * h))
        start, _ = w.support
        return start + h * np.arange(-extra, w.x.size + extra)

    def solve_infinite(self, w: LoadProfile, config: BeamConfig,
                       eval_grid: Optional[np.ndarray] = None) -> DeflectionProfile:
        """
        u(x) = int K(|x - xi|) w(xi) dxi over the support of w, by the trapezoidal rule on the load grid.

        :param w: Compactly supported load.
        :param config: Beam parameters.
        :param eval_grid: Evaluation points; the load grid plus a 10/alpha margin when None.
        :return: DeflectionProfile on the evaluation grid.
        """
        x = self.default_eval_grid(w, config) if eval_grid is None else np.asarray(eval_grid, dtype=float)
        start, stop = w.support
        margin = DEFLECTION_MARGIN / config.alpha
        if x[0] > start - margin or x[-1] < stop + margin:
            self.logger.log_message(
                f"Evaluation grid [{x[0]:.6g}, {x[-1]:.6g}] leaves less than {DEFLECTION_MARGIN}/alpha = {margin:.6g} "
                f"around the load support [{start:.6g}, {stop:.6g}]", "WARNING")

        def convolve(points: np.ndarray) -> np.ndarray:
            return trapezoid(kernel_K(np.abs(points[:, None] - w.x[None, :]), config) * w.w[None, :], w.x, axis=1)

        chunks = [x[i:i + CHUNK] for i in range(0, x.size, CHUNK)]
        with self.logger.timed(f"convolution on {x.size} points"):
            if self.workers > 1 and len(chunks) > 1:
                with ThreadPoolExecutor(max_workers=self.workers) as pool:
                    u = np.concatenate(list(pool.map(convolve, chunks)))
            else:
                u = np.concatenate([convolve(chunk) for chunk in chunks])
        peak = float(np.max(np.abs(u)))
        edge = max(abs(float(u[0])), abs(float(u[-1])))
        if peak > 0 and edge > BOUNDARY_TOLERANCE * peak:
            self.logger.log_message(
                f"Deflection at the ends of the evaluation grid is {edge / peak:.2e} of its peak; "
                f"widen the grid", "WARNING")
        self.logger.log_message(f"Infinite-beam deflection on {x.size} points, max |u| = {peak:.6g}", "INFO")
        return DeflectionProfile(x=x, u=u, metadata={"solver": "infinite", "config": config.to_dict(),
                                                     "iterations": 0, "load_points": int(w.x.size)})

    def solve_nonlinear_fixed_point(self, w: LoadProfile, phi: FoundationLaw, config: BeamConfig,
                                    tol: float = FIXED_POINT_TOLERANCE, max_iter: int = FIXED_POINT_MAX_ITER,
                                    n: int = DEFAULT_N, rule: str = DEFAULT_RULE) -> DeflectionProfile:
        """
        Picard iteration u_{m+1} = K_l[w - phi(u_m) + k u_m] from u_0 = K_l[w] on a quadrature grid over [-l, l].

        The map contracts with factor rho = Lambda' * lam_1, where Lambda' is the Lipschitz constant of
        k u - phi(u, x) and lam_1 = ||K_l|| is the top eigenvalue of the discretised operator.

        :param w: Load; sampled at the quadrature nodes by linear interpolation.
        :param phi: Foundation law with its Lipschitz estimate.
        :param config: Beam parameters.
        :param tol: Stop when the sup-norm difference of successive iterates is at most tol.
        :param max_iter: Iteration budget.
        :param n: Number of quadrature nodes.
        :param rule: Quadrature rule identifier.
        :return: DeflectionProfile at the quadrature nodes with iteration history in metadata.
        :raises NonContractionError: If rho >= 1.
        :raises MaxIterationsError: If tol is not reached within max_iter iterations.
        """
        if max_iter < 1:
            raise DomainError(f"max_iter must be at least 1, got {max_iter}")
        matrix = discretize(config, n, rule)
        grid = matrix.grid
        norm = operator_norm(matrix)
        rho = phi.lipschitz * norm
        if rho >= 1.0:
            self.logger.log_message(f"Contraction factor {rho:.6g} = {phi.lipschitz:.6g} * {norm:.6g} is not below 1",
                                    "ERROR")
            raise NonContractionError(f"estimated contraction factor {rho:.6g} >= 1 for foundation law {phi.name}",
                                      rho=rho)
        x = grid.nodes
        load = w.evaluate(x)
        current = apply_operator(load, grid, config)
        history: List[float] = []
        ratios: List[float] = []
        iterations = 0
        while iterations < max_iter:
            iterations += 1
            update = apply_operator(load - phi.phi(current, x) + config.k * current, grid, config)
            difference = float(np.max(np.abs(update - current)))
            if history and history[-1] > 0:
                ratios.append(difference / history[-1])
            history.append(difference)
            current = update
            self.logger.log_message(f"Iteration {iterations}: |u_m+1 - u_m| = {difference:.3e}", "DEBUG")
            if difference <= tol:
                break
        else:
            self.logger.log_message(f"Fixed point not reached in {max_iter} iterations, last step {history[-1]:.3e}",
                                    "ERROR")
            raise MaxIterationsError(f"fixed-point iteration did not reach {tol} in {max_iter} iterations",
                                     iterations=max_iter,
                                     diagnostics={"last_difference": history[-1], "rho": rho, "ratios": ratios})
        observed = ratios[-1] if ratios else 0.0
        self.logger.log_message(
            f"Fixed point after {iterations} iteration(s), rho = {rho:.4g}, observed ratio {observed:.4g}", "INFO")
        reach = float(np.max(np.abs(current)))
        sampled = FoundationLaw.estimate(phi.phi, config.k, reach, x).lipschitz if reach > 0.0 else 0.0
        if sampled > phi.lipschitz:
            self.logger.log_message(
                f"Lipschitz constant {sampled:.6g} sampled on |u| <= {reach:.6g} exceeds the declared "
                f"{phi.lipschitz:.6g}; rho may be as large as {sampled * norm:.4g}", "WARNING")
        return DeflectionProfile(x=x, u=current, metadata={
            "solver": "fixed_point", "config": config.to_dict(), "law": phi.name, "iterations": iterations,
            "residual": history[-1], "history": history, "ratios": ratios, "observed_ratio": observed,
            "rho": rho, "operator_norm": norm, "lipschitz": phi.lipschitz, "lipschitz_sampled": sampled,
            "reach": reach, "n": n, "rule": rule})

    def residual_ode(self, u: DeflectionProfile, w: LoadProfile, phi: Optional[FoundationLaw],
                     config: BeamConfig) -> float:
        try:
            residual = residual_ode(u, w, phi, config)
        except (GridTooCoarseError, GridMismatchError) as error:
            self.logger.log_message(str(error), "ERROR")
            raise
        self.logger.log_message(f"Normalised ODE residual {residual:.3e}", "INFO")
        return residual

    def quadratic_form(self, u: np.ndarray, grid: QuadratureGrid, config: BeamConfig) -> float:
        value = quadratic_form(u, grid, config)
        if value < -FORM_TOLERANCE:
            self.logger.log_message(f"Quadratic form <u, K_l u> = {value:.3e} is negative", "WARNING")
        return value

    def solve_operator(self, w: LoadProfile, config: BeamConfig, n: int = DEFAULT_N,
                       rule: str = DEFAULT_RULE) -> DeflectionProfile:
        """
        K_l[w] at the quadrature nodes of [-l, l]; the load is cut off at the beam ends.

        :param w: Load, sampled at the nodes by linear interpolation.
        :param config: Beam parameters.
        :param n: Number of quadrature nodes.
        :param rule: Quadrature rule identifier.
        :return: DeflectionProfile at the quadrature nodes.
        """
        grid = quadrature_grid(config.l, n, rule)
        u = self.apply_operator(w.evaluate(grid.nodes), grid, config)
        self.logger.log_message(f"Applied finite-beam operator on {n} {rule} nodes, max |u| = "
                                f"{float(np.max(np.abs(u))):.6g}", "INFO")
        return DeflectionProfile(x=grid.nodes, u=u, metadata={"solver": "operator", "config": config.to_dict(),
                                                              "iterations": 0, "n": n, "rule": rule})
