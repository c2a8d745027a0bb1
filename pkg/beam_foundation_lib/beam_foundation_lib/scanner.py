"""
Floating-point certification of psi_L(kappa) > q(kappa) and of the auxiliary inequalities
around it. Margins carry an error estimate, this is not an interval-arithmetic proof.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import math
from typing import List, Optional, Sequence, Tuple

import numpy as np

from beam_foundation_lib.charfun import (TWO_PI, eval_f, eval_gL, eval_log_margin, eval_margin, eval_psi,
                                         eval_psi_dL, eval_psi_prime, eval_q, ghat_inverse, invert_gL,
                                         q_of_ghat_inverse, reciprocal_f_bound, ghat_inverse_closed, eval_ghat)
from beam_foundation_lib.exceptions import DomainError
from beam_foundation_lib.logger import Logger
from beam_foundation_lib.utils import (F_MIN, KAPPA_UPPER_BRANCH, LOG_OVERFLOW, NONDIFF_TOLERANCE,
                                       REFINE_ERROR_FACTOR, SQRT2, ABCCoefficients, MollifiedChain, ScanRegion,
                                       ScanReport, SubReport, thread_count)

EPS = float(np.finfo(float).eps)
SMALL_KAPPA_GRID = np.geomspace(1e-8, 1.0, 10 ** 4)
EXPANSION_KAPPAS = np.logspace(-1, -8, 50)
MOLLIFIED_L = 0.05
ORDERING_TS = (0.5, math.pi, 1.5 * math.pi, 5.5)
ORDERING_LS = (10.0, 1.0, 0.1, 0.01, 0.001)
ORDERING_LIMIT_L = 1e-5
ORDERING_LIMIT_TOL = 1e-4


def margin_with_error(kappa: np.ndarray, L: np.ndarray | float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Margin psi_L - q with its estimated evaluation error.
    Where L kappa exceeds LOG_OVERFLOW the margin is log psi_L - log q instead.

    :param kappa: Characteristic coordinates, all > 0.
    :param L: Beam length parameter(s), broadcast against kappa.
    :return: (margin, error estimate, saturated mask).
    """
    kappa, L = np.broadcast_arrays(np.asarray(kappa, dtype=float), np.asarray(L, dtype=float))
    log_margin = np.asarray(eval_log_margin(kappa, L))
    q = np.asarray(eval_q(kappa))
    g = np.asarray(eval_gL(kappa, L))
    lk = L * kappa
    saturated = lk > LOG_OVERFLOW
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        linear = np.where(q > 0, q * np.expm1(log_margin), np.asarray(eval_psi(kappa, L)))
        abs_log_q = np.where(q > 0, np.abs(np.log(q)), 0.0)
        below = kappa < 1.0
        # absolute error of the log margin for the regrouped and the direct evaluation
        log_error = 8.0 * EPS * np.where(
            below,
            np.abs(np.where(below, log_margin, 0.0)) + np.where(kappa >= 0.1, kappa, 0.0) + np.where(g >= 0.02, g, 0.0),
            lk + 2.0 + abs_log_q)
        margin = np.where(saturated, log_margin, linear)
        error = np.where(saturated, log_error, (np.where(saturated, 0.0, linear) + q) * log_error)
    return margin, error, saturated


def _log_of_margin(kappa: np.ndarray, L: float) -> np.ndarray:
    # log(psi - q) = log q + m + log(1 - exp(-m)), finite where psi overflows
    q = np.asarray(eval_q(kappa))
    m = np.asarray(eval_log_margin(kappa, L))
    return np.log(q) + m + np.log(-np.expm1(-m))


def abc_coefficients(kappa: np.ndarray | float) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """
    Coefficients a, b, c of the cubic x^3 + a x^2 + b x + c in x = L kappa, for kappa > 1 + sqrt2.

    :param kappa: Characteristic coordinate(s).
    :return: (arctan value, a, b, c).
    """
    k = np.asarray(kappa, dtype=float)
    q = np.asarray(eval_q(k))
    one_minus_q = 4.0 * k / (k + 1.0) ** 2
    angle = np.arctan(4.0 * k * (k * k - 1.0) / (k ** 4 - 6.0 * k * k + 1.0))
    denominator = 4.0 - 3.0 * q
    a = (12.0 * one_minus_q + 9.0 * q * angle) / denominator
    b = (24.0 * one_minus_q - q * angle * (9.0 * angle - 24.0)) / denominator
    c = (24.0 * one_minus_q + 3.0 * q * angle * (angle * angle - 4.0 * angle + 8.0)) / denominator
    return angle, a, b, c


def check_abc_positive(kappa: float) -> ABCCoefficients:
    """
    Evaluates the cubic coefficients at one kappa beyond 1 + sqrt2.

    :param kappa: Characteristic coordinate > 1 + sqrt2.
    :return: ABCCoefficients; all_positive tells whether a, b, c > 0.
    :raises DomainError: For kappa <= 1 + sqrt2.
    """
    if not (math.isfinite(kappa) and kappa > KAPPA_UPPER_BRANCH):
        raise DomainError(f"kappa must exceed 1 + sqrt2 = {KAPPA_UPPER_BRANCH}, got {kappa!r}")
    angle, a, b, c = abc_coefficients(kappa)
    return ABCCoefficients(kappa=kappa, arctan_value=float(angle), a=float(a), b=float(b), c=float(c))


def check_mollified_chain(t: float, L: float) -> MollifiedChain:
    """
    The mollified functions at angle t: psi~_L(t) = psi_L(g_L^{-1}(t)), f(cos t) and q~_L(t) = q(g_L^{-1}(t)).

    :param t: Angle in (3 pi/2, 2 pi).
    :param L: Positive beam length parameter.
    :return: MollifiedChain(psi_tilde, f_cos, q_tilde).
    :raises DomainError: Outside the t-interval or for L <= 0.
    """
    if not 1.5 * math.pi < t < TWO_PI:
        raise DomainError(f"t must lie in (3 pi/2, 2 pi), got {t!r}")
    if not (math.isfinite(L) and L > 0):
        raise DomainError(f"L must be > 0, got {L!r}")
    kappa = invert_gL(t, L)
    return MollifiedChain(psi_tilde=eval_psi(kappa, L), f_cos=eval_f(math.cos(t)), q_tilde=eval_q(kappa))


def check_g_inverse_ordering(t: float, L_list: Sequence[float], limit_tol: Optional[float] = None) -> bool:
    """
    Checks g_L^{-1}(t) < ghat^{-1}(-t) for every L, and that g_L^{-1}(t) increases towards
    ghat^{-1}(-t) as L decreases.

    :param t: Angle in (0, 2 pi).
    :param L_list: Positive L values, in any order; repeated values count once.
    :param limit_tol: If given, the gap at the smallest L must also be below it.
    :return: True iff every condition holds.
    :raises DomainError: For t outside (0, 2 pi) or an empty or nonpositive L_list.
    """
    if not 0.0 < t < TWO_PI:
        raise DomainError(f"t must lie in (0, 2 pi), got {t!r}")
    if not L_list or any(not (math.isfinite(L) and L > 0) for L in L_list):
        raise DomainError(f"L_list must be a nonempty list of positive numbers, got {L_list!r}")
    target = ghat_inverse(t)
    values = np.array([invert_gL(t, L) for L in sorted(set(L_list), reverse=True)])
    gaps = target - values
    ordered = bool(np.all(gaps > 0))
    increasing = bool(np.all(np.diff(values) > 0))
    converging = limit_tol is None or bool(gaps[-1] < limit_tol)
    return ordered and increasing and converging


def check_lemma_small_kappa(L_list: Sequence[float]) -> bool:
    """
    psi_L(kappa) > q(kappa) on a dense geometric grid of (0, 1] for every L in the list.

    :param L_list: Positive L values.
    :return: True iff the minimum margin is strictly positive; False for an empty list.
    """
    if not L_list:
        return False
    Ls = np.asarray(L_list, dtype=float)[:, None]
    margins = np.asarray(eval_margin(SMALL_KAPPA_GRID[None, :], Ls))
    return bool(np.min(margins) > 0)


def _sub_report(name: str, slack: np.ndarray, coordinates: dict, strict: bool = True,
                tolerance: float = 0.0, note: str = "") -> SubReport:
    slack = np.asarray(slack, dtype=float).ravel()
    index = int(np.argmin(slack))
    worst = float(slack[index])
    passed = worst > 0 if strict else worst >= -tolerance
    witness = {key: float(np.asarray(values, dtype=float).ravel()[index]) for key, values in coordinates.items()}
    return SubReport(name=name, passed=bool(passed), checked=int(slack.size), worst_value=worst, witness=witness,
                     note=note)


@dataclass
class _Tally:
    points: int = 0
    cells: int = 0
    refined: int = 0
    saturated: int = 0
    rows: List[Tuple[float, ...]] = field(default_factory=list)


class Scanner:
    def __init__(self, logger: Logger, workers: Optional[int] = None) -> None:
        """
        Initializes the Scanner instance.

        :param logger: Logger instance for logging events.
        :param workers: Row-evaluation threads; read from BEAM_FOUNDATION_THREADS when None.
        """
        self.logger = logger
        self.workers = workers if workers is not None else thread_count(logger)

    def scan_psi_minus_q(self, region: ScanRegion, inverted: bool = False,
                         with_sub_reports: bool = False, seed: int = 0) -> ScanReport:
        """
        Evaluates the margin on a geometric grid of cell corners and centres and bisects every cell
        whose minimum is within REFINE_ERROR_FACTOR error estimates of zero, or whose centre dips
        below all four corners, down to region.refine_depth levels.

        :param region: Rectangle of (kappa, L) values.
        :param inverted: Scan q - psi_L instead; used to exercise the failure path.
        :param with_sub_reports: Also run the auxiliary checks.
        :param seed: Seed of the randomised auxiliary checks.
        :return: ScanReport with the minimum margin and its witness.
        """
        n_kappa, n_L = region.initial_grid
        kappas = np.geomspace(region.kappa_min, region.kappa_max, n_kappa)
        Ls = np.geomspace(region.L_min, region.L_max, n_L)
        kappa_mid = np.sqrt(kappas[:-1] * kappas[1:])
        L_mid = np.sqrt(Ls[:-1] * Ls[1:])
        self.logger.log_message(
            f"Scanning {'q - psi' if inverted else 'psi - q'} on kappa [{region.kappa_min}, {region.kappa_max}] x "
            f"L [{region.L_min}, {region.L_max}], grid {n_kappa}x{n_L}, depth {region.refine_depth}, "
            f"{self.workers} worker(s)", "INFO")
        tally = _Tally()
        with self.logger.timed("grid evaluation"):
            corner_margin, corner_error, corner_saturated = self._evaluate_rows(kappas, Ls, inverted)
            centre_margin, centre_error, centre_saturated = self._evaluate_rows(kappa_mid, L_mid, inverted)
        tally.points = corner_margin.size + centre_margin.size
        tally.saturated = int(corner_saturated.sum() + centre_saturated.sum())

        samples = np.stack([corner_margin[:-1, :-1], corner_margin[:-1, 1:], corner_margin[1:, :-1],
                            corner_margin[1:, 1:], centre_margin])
        errors = np.stack([corner_error[:-1, :-1], corner_error[:-1, 1:], corner_error[1:, :-1],
                           corner_error[1:, 1:], centre_error])
        arg = np.argmin(samples, axis=0)
        cell_min = np.take_along_axis(samples, arg[None], axis=0)[0]
        cell_error = np.take_along_axis(errors, arg[None], axis=0)[0]
        threshold = REFINE_ERROR_FACTOR * errors.max(axis=0)
        dip = centre_margin < samples[:4].min(axis=0)
        to_refine = (cell_min < threshold) | dip

        # witness coordinates per cell: corners in the order stacked above, then the centre
        k_lo = np.broadcast_to(kappas[:-1], cell_min.shape)
        k_hi = np.broadcast_to(kappas[1:], cell_min.shape)
        L_lo = np.broadcast_to(Ls[:-1, None], cell_min.shape)
        L_hi = np.broadcast_to(Ls[1:, None], cell_min.shape)
        k_c = np.broadcast_to(kappa_mid, cell_min.shape)
        L_c = np.broadcast_to(L_mid[:, None], cell_min.shape)
        witness_kappa = np.choose(arg, [k_lo, k_hi, k_lo, k_hi, k_c]).astype(float)
        witness_L = np.choose(arg, [L_lo, L_lo, L_hi, L_hi, L_c]).astype(float)
        tally.cells = cell_min.size
        cells = np.column_stack([k_lo.ravel(), k_hi.ravel(), L_lo.ravel(), L_hi.ravel(), cell_min.ravel(),
                                 cell_error.ravel(), np.zeros(cell_min.size)])

        if region.refine_depth > 0 and np.any(to_refine):
            with self.logger.timed(f"refinement of {int(to_refine.sum())} cells"):
                for j, i in zip(*np.nonzero(to_refine)):
                    best = self._refine(kappas[i], kappas[i + 1], Ls[j], Ls[j + 1], 1, region.refine_depth,
                                        inverted, tally)
                    if best[0] < cell_min[j, i]:
                        cell_min[j, i], witness_kappa[j, i], witness_L[j, i], cell_error[j, i] = best
        flat = int(np.argmin(cell_min))
        min_margin = float(cell_min.ravel()[flat])
        witness = (float(witness_kappa.ravel()[flat]), float(witness_L.ravel()[flat]))
        if tally.rows:
            cells = np.vstack([cells, np.array(tally.rows)])
        report = ScanReport(region=region, min_margin=min_margin, witness=witness,
                            cells_evaluated=tally.cells, points_evaluated=tally.points,
                            all_positive=min_margin > 0, error_bound=float(cell_error.ravel()[flat]),
                            saturated_points=tally.saturated, refined_cells=tally.refined, inverted=inverted,
                            cells=cells)
        self.logger.log_message(
            f"Scan done: min margin {min_margin:.6e} at kappa={witness[0]:.6g}, L={witness[1]:.6g} "
            f"(error bound {report.error_bound:.1e}), {tally.cells} cells, {tally.refined} refined, "
            f"{tally.saturated} saturated samples", "INFO")
        if not report.all_positive:
            self.logger.log_message(f"Nonpositive margin {min_margin:.6e} at {witness}", "WARNING")
        if with_sub_reports:
            report.sub_reports = self.run_auxiliary_checks(seed=seed)
        return report

    def _evaluate_rows(self, kappas: np.ndarray, Ls: np.ndarray,
                       inverted: bool) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        def row(L: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
            return margin_with_error(kappas, L)

        if self.workers > 1:
            with ThreadPoolExecutor(max_workers=self.workers) as pool:
                rows = list(pool.map(row, Ls))
        else:
            rows = [row(L) for L in Ls]
        margin = np.vstack([r[0] for r in rows])
        error = np.vstack([r[1] for r in rows])
        saturated = np.vstack([r[2] for r in rows])
        return (-margin if inverted else margin), error, saturated

    def _refine(self, k_lo: float, k_hi: float, L_lo: float, L_hi: float, depth: int, max_depth: int,
                inverted: bool, tally: _Tally) -> Tuple[float, float, float, float]:
        """
        Bisects one cell into four in both log-coordinates.
        The 3x3 child corner grid contains the parent corners and centre.

        :return: (minimum margin, witness kappa, witness L, error estimate at the witness).
        """
        k3 = np.array([k_lo, math.sqrt(k_lo * k_hi), k_hi])
        L3 = np.array([L_lo, math.sqrt(L_lo * L_hi), L_hi])
        kc = np.sqrt(k3[:-1] * k3[1:])
        Lc = np.sqrt(L3[:-1] * L3[1:])
        kk = np.concatenate([np.tile(k3, 3), np.tile(kc, 2)])
        LL = np.concatenate([np.repeat(L3, 3), np.repeat(Lc, 2)])
        margin, error, saturated = margin_with_error(kk, LL)
        if inverted:
            margin = -margin
        tally.points += kk.size
        tally.saturated += int(saturated.sum())
        tally.refined += 1
        grid_margin, grid_error = margin[:9].reshape(3, 3), error[:9].reshape(3, 3)
        centre_margin, centre_error = margin[9:].reshape(2, 2), error[9:].reshape(2, 2)
        best = (math.inf, k_lo, L_lo, 0.0)
        for a in range(2):
            for b in range(2):
                values = np.append(grid_margin[a:a + 2, b:b + 2].ravel(), centre_margin[a, b])
                errs = np.append(grid_error[a:a + 2, b:b + 2].ravel(), centre_error[a, b])
                ks = np.array([k3[b], k3[b + 1], k3[b], k3[b + 1], kc[b]])
                Lv = np.array([L3[a], L3[a], L3[a + 1], L3[a + 1], Lc[a]])
                index = int(np.argmin(values))
                child = (float(values[index]), float(ks[index]), float(Lv[index]), float(errs[index]))
                tally.cells += 1
                tally.rows.append((k3[b], k3[b + 1], L3[a], L3[a + 1], child[0], child[3], float(depth)))
                dip = centre_margin[a, b] < values[:4].min()
                if depth < max_depth and (child[0] < REFINE_ERROR_FACTOR * errs.max() or dip):
                    deeper = self._refine(k3[b], k3[b + 1], L3[a], L3[a + 1], depth + 1, max_depth, inverted,
                                          tally)
                    if deeper[0] < child[0]:
                        child = deeper
                if child[0] < best[0]:
                    best = child
        return best

    def run_auxiliary_checks(self, seed: int = 0) -> List[SubReport]:
        """
        Runs every auxiliary inequality check.

        :param seed: Seed of the randomised samples.
        :return: One SubReport per check, in a fixed order.
        """
        checks = [self.check_f_bounds, self.check_sine_ratio_bound, self.check_cosine_identity,
                  lambda: self.check_psi_prime_lower_bound(seed), self.check_threshold_region,
                  self.check_polynomial_tail, self.check_divergence, self.check_small_kappa_expansion,
                  self.check_mollified_chain_grid, self.check_abc_sweep, self.check_g_inverse_orderings,
                  self.check_small_kappa_margin, lambda: self.check_psi_increasing_in_L(seed),
                  self.check_reciprocal_f_bound]
        reports = []
        with self.logger.timed("auxiliary checks"):
            for check in checks:
                report = check()
                level = "DEBUG" if report.passed else "WARNING"
                self.logger.log_message(
                    f"Check {report.name}: {'passed' if report.passed else 'FAILED'} on {report.checked} points, "
                    f"worst {report.worst_value:.3e}", level)
                reports.append(report)
        return reports

    def check_f_bounds(self) -> SubReport:
        x = np.linspace(-4.0 * math.pi, 4.0 * math.pi, 20001)
        f = np.asarray(eval_f(np.cos(x)))
        slack = np.minimum(f - F_MIN, 1.0 - f)
        return _sub_report("f_bounds", slack, {"x": x}, strict=False, tolerance=1e-15)

    def check_sine_ratio_bound(self) -> SubReport:
        x = np.linspace(-4.0 * math.pi, 4.0 * math.pi, 20000)
        half_sin = np.sin(0.5 * x)
        x = x[np.abs(half_sin) > 1e-6]
        half_sin = np.sin(0.5 * x)
        # (2 - cos x)^2 - 1 with 1 - cos x = 2 sin^2(x/2)
        denominator = np.sqrt(2.0 * half_sin ** 2 * (3.0 - np.cos(x)))
        slack = 1.0 - np.abs(np.sin(x)) / denominator
        return _sub_report("sine_ratio_bound", slack, {"x": x}, strict=False, tolerance=1e-14)

    def check_cosine_identity(self) -> SubReport:
        x = np.linspace(-4.0 * math.pi, 4.0 * math.pi, 20001)
        c = np.cos(x)
        defect = np.abs((2.0 - c) ** 2 - 1.0 - (1.0 - c) * (3.0 - c))
        return _sub_report("cosine_identity", 1e-14 - defect, {"x": x}, strict=False)

    def check_psi_prime_lower_bound(self, seed: int = 0, samples: int = 2000) -> SubReport:
        """
        psi_L'(kappa) >= -psi_L(kappa) 4/(kappa^2 + 1) at random differentiable points, relative to psi_L.
        """
        rng = np.random.default_rng(seed)
        kappa = np.exp(rng.uniform(math.log(1e-3), math.log(20.0), samples))
        L = np.exp(rng.uniform(math.log(1e-2), math.log(20.0), samples))
        g = np.asarray(eval_gL(kappa, L))
        remainder = np.mod(g, TWO_PI)
        keep = np.minimum(remainder, TWO_PI - remainder) > 1e3 * NONDIFF_TOLERANCE
        kappa, L = kappa[keep], L[keep]
        psi = np.asarray(eval_psi(kappa, L))
        slack = np.asarray(eval_psi_prime(kappa, L)) / psi + 4.0 / (kappa ** 2 + 1.0)
        return _sub_report("psi_prime_lower_bound", slack, {"kappa": kappa, "L": L}, strict=False,
                           tolerance=1e-12)

    def check_threshold_region(self) -> SubReport:
        """
        The margin is positive everywhere with kappa <= 1 + sqrt2, so any crossing would need kappa > 1 + sqrt2.
        """
        kappa = np.geomspace(1e-3, KAPPA_UPPER_BRANCH, 400)
        L = np.geomspace(1e-3, 100.0, 200)
        kk, LL = np.meshgrid(kappa, L)
        margin = np.asarray(eval_margin(kk, LL))
        return _sub_report("margin_below_threshold", margin, {"kappa": kk, "L": LL})

    def check_polynomial_tail(self) -> SubReport:
        t = np.linspace(1.5 * math.pi, TWO_PI, 2002)[1:-1]
        c = np.cos(t)
        return _sub_report("cosine_polynomial_tail", c * c - 2.0 * c + 1.0, {"t": t})

    def check_divergence(self) -> SubReport:
        """
        For fixed L the margin increases along kappa = 10 2^j; compared through log(psi - q).
        """
        kappa = 10.0 * 2.0 ** np.arange(12)
        steps, ks, Ls = [], [], []
        for L in (0.1, 1.0, 10.0):
            values = _log_of_margin(kappa, L)
            steps.append(np.diff(values))
            ks.append(kappa[1:])
            Ls.append(np.full(kappa.size - 1, L))
        return _sub_report("margin_divergence", np.concatenate(steps),
                           {"kappa": np.concatenate(ks), "L": np.concatenate(Ls)})

    def check_small_kappa_expansion(self) -> SubReport:
        """
        Near kappa = 0 the margin is nonnegative and increasing in kappa on kappa = 1e-1 ... 1e-8.
        """
        ascending = EXPANSION_KAPPAS[::-1]
        slack, ks, Ls = [], [], []
        for L in (0.01, 1.0, 2.0 * SQRT2):
            margin = np.asarray(eval_margin(ascending, L))
            slack.append(np.minimum(margin[1:], np.diff(margin)))
            ks.append(ascending[1:])
            Ls.append(np.full(ascending.size - 1, L))
        return _sub_report("small_kappa_expansion", np.concatenate(slack),
                           {"kappa": np.concatenate(ks), "L": np.concatenate(Ls)})

    def check_mollified_chain_grid(self, L: float = MOLLIFIED_L, points: int = 200) -> SubReport:
        """
        psi~_L(t) > f(cos t) > q(ghat^{-1}(-t)) > q~_L(t) on an interior grid of (3 pi/2, 2 pi),
        together with the closed inverse consistency |ghat(ghat^{-1}(-t)) + t|.
        The last link needs g_L^{-1}(t) > 1; its status goes into the note.
        """
        t = np.linspace(1.5 * math.pi, TWO_PI, points + 2)[1:-1]
        chains = [check_mollified_chain(float(value), L) for value in t]
        psi_tilde = np.array([chain.psi_tilde for chain in chains])
        f_cos = np.array([chain.f_cos for chain in chains])
        q_tilde = np.array([chain.q_tilde for chain in chains])
        q_hat = np.asarray(q_of_ghat_inverse(t))
        closed_defect = np.abs(np.asarray(eval_ghat(np.asarray(ghat_inverse_closed(t))).value) + t)
        slack = np.minimum.reduce([psi_tilde - f_cos, f_cos - q_hat, q_hat - q_tilde, 1e-9 - closed_defect])
        precondition = all(invert_gL(float(value), L) > 1.0 for value in t)
        note = f"L={L}; precondition g_L^-1(t) > 1 {'holds' if precondition else 'FAILS'} on the grid"
        return _sub_report("mollified_chain", slack, {"t": t}, note=note)

    def check_abc_sweep(self, points: int = 10 ** 4) -> SubReport:
        kappa = np.geomspace(KAPPA_UPPER_BRANCH + 1e-6, 1e6, points)
        _, a, b, c = abc_coefficients(kappa)
        return _sub_report("abc_positive", np.minimum.reduce([a, b, c]), {"kappa": kappa})

    def check_g_inverse_orderings(self) -> SubReport:
        """
        g_L^{-1}(t) < ghat^{-1}(-t) with monotone approach as L decreases, and the limit at t = 3 pi/2.
        """
        slack, ts, Ls = [], [], []
        for t in ORDERING_TS:
            target = ghat_inverse(t)
            values = np.array([invert_gL(t, L) for L in ORDERING_LS])
            slack.extend(target - values)
            slack.extend(np.diff(values))
            ts.extend([t] * (2 * values.size - 1))
            Ls.extend(list(ORDERING_LS) + list(ORDERING_LS[1:]))
        limit_t = 1.5 * math.pi
        limit_gap = ORDERING_LIMIT_TOL - abs(invert_gL(limit_t, ORDERING_LIMIT_L) - (1.0 + SQRT2))
        slack.append(limit_gap)
        ts.append(limit_t)
        Ls.append(ORDERING_LIMIT_L)
        return _sub_report("g_inverse_ordering", np.array(slack), {"t": np.array(ts), "L": np.array(Ls)})

    def check_small_kappa_margin(self, L_list: Sequence[float] = (0.01, 1.0, 100.0)) -> SubReport:
        kk, LL = np.meshgrid(SMALL_KAPPA_GRID, np.asarray(L_list, dtype=float))
        margin = np.asarray(eval_margin(kk, LL))
        report = _sub_report("small_kappa_margin", margin, {"kappa": kk, "L": LL})
        if report.passed != check_lemma_small_kappa(L_list):
            self.logger.log_message("Small-kappa margin check disagrees with its grid report", "ERROR")
        return report

    def check_psi_increasing_in_L(self, seed: int = 0, samples: int = 2000) -> SubReport:
        rng = np.random.default_rng(seed + 1)
        kappa = np.exp(rng.uniform(math.log(1e-3), math.log(20.0), samples))
        L = np.exp(rng.uniform(math.log(1e-2), math.log(20.0), samples))
        g = np.asarray(eval_gL(kappa, L))
        remainder = np.mod(g, TWO_PI)
        keep = np.minimum(remainder, TWO_PI - remainder) > 1e3 * NONDIFF_TOLERANCE
        kappa, L = kappa[keep], L[keep]
        slack = np.asarray(eval_psi_dL(kappa, L)) / np.asarray(eval_psi(kappa, L))
        return _sub_report("psi_increasing_in_L", slack, {"kappa": kappa, "L": L}, strict=False)

    def check_reciprocal_f_bound(self) -> SubReport:
        t = np.linspace(0.0, 4.0 * math.pi, 4001)
        reciprocal, bound = reciprocal_f_bound(t)
        return _sub_report("reciprocal_f_bound", np.asarray(bound) - np.asarray(reciprocal), {"t": t},
                           strict=False, tolerance=1e-12)
