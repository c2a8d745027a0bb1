from dataclasses import dataclass, field, asdict
import math
import os
from typing import Callable, Dict, List, NamedTuple, Optional, Tuple

import numpy as np

from beam_foundation_lib.exceptions import DomainError, GridMismatchError
from beam_foundation_lib.logger import Logger

SQRT2 = math.sqrt(2.0)
KAPPA_LOWER_BRANCH = SQRT2 - 1.0  # ghat = -pi/2 here
KAPPA_UPPER_BRANCH = SQRT2 + 1.0  # ghat = -3pi/2 here
F_MIN = 3.0 - 2.0 * SQRT2  # f(-1)
LOG_OVERFLOW = 700.0

NONDIFF_TOLERANCE = 1e-9
INVERSE_TOLERANCE = 1e-12
INVERSE_MAX_ITER = 200

DEFAULT_N = 400
DEFAULT_RULE = "gauss_legendre"
QUADRATURE_RULES = ("gauss_legendre", "composite_simpson")
EIGEN_TOLERANCE = 1e-10
RELIABLE_FACTOR = 10.0
PARITY_THRESHOLD = 0.99
CONFINEMENT_TOLERANCE = 1e-10
CONFINEMENT_MARGIN = 1e-3
DEFAULT_DECAY_WINDOW = (16, 48)

DEFAULT_SCAN_KAPPA = (0.01, 50.0)
DEFAULT_SCAN_L = (0.01, 50.0)
DEFAULT_SCAN_GRID = (500, 200)
DEFAULT_REFINE_DEPTH = 4
REFINE_ERROR_FACTOR = 10.0

DEFLECTION_MARGIN = 10.0  # decay margin in units of 1/alpha
FIXED_POINT_TOLERANCE = 1e-10
FIXED_POINT_MAX_ITER = 100

SCHEMA_VERSION = "1.0"
THREADS_ENV = "BEAM_FOUNDATION_THREADS"


def thread_count(logger: Optional[Logger] = None) -> int:
    """
    Reads the worker-thread count from BEAM_FOUNDATION_THREADS.

    :param logger: Receives a warning when the variable holds an invalid value.
    :return: The configured positive count, or 1 when unset or invalid.
    """
    raw = os.environ.get(THREADS_ENV, "").strip()
    if not raw:
        return 1
    try:
        value = int(raw)
    except ValueError:
        value = 0
    if value < 1:
        if logger is not None:
            logger.log_message(f"Ignoring {THREADS_ENV}={raw!r}, expected a positive integer; using 1", "WARNING")
        return 1
    return value


def _require_positive(name: str, value: float) -> None:
    if not (isinstance(value, (int, float, np.floating, np.integer)) and math.isfinite(value) and value > 0):
        raise DomainError(f"{name} must be a finite positive number, got {value!r}")


@dataclass(frozen=True)
class BeamConfig:
    """
    Physical parameters of the beam and the foundation.

    Attributes:
        E (float): Young's modulus (force/area).
        I (float): Moment of inertia of the beam (length^4).
        k (float): Spring constant of the foundation (force/length^2).
        l (float): Half-length of the beam, which occupies [-l, l].
        alpha (float): Derived, (k / (E I))^(1/4).
        L (float): Derived, 2 sqrt(2) l alpha.
    """
    E: float = 1.0
    I: float = 1.0
    k: float = 1.0
    l: float = 1.0
    alpha: float = field(init=False)
    L: float = field(init=False)

    def __post_init__(self) -> None:
        for name in ("E", "I", "k", "l"):
            _require_positive(name, getattr(self, name))
        alpha = (self.k / (self.E * self.I)) ** 0.25
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "L", 2.0 * SQRT2 * self.l * alpha)

    @classmethod
    def with_alpha(cls, alpha: float, k: float = 1.0, l: float = 1.0) -> "BeamConfig":
        """
        Builds a configuration with a prescribed alpha (I = 1, E = k / alpha^4).

        :param alpha: Target value of alpha.
        :param k: Spring constant.
        :param l: Half-length of the beam.
        :return: BeamConfig whose alpha equals the given value up to rounding.
        """
        _require_positive("alpha", alpha)
        _require_positive("k", k)
        return cls(E=k / alpha ** 4, I=1.0, k=k, l=l)

    @property
    def flexural_rigidity(self) -> float:
        return self.E * self.I

    def to_dict(self) -> Dict[str, float]:
        return {"E": self.E, "I": self.I, "k": self.k, "l": self.l, "alpha": self.alpha, "L": self.L}


@dataclass(frozen=True)
class SpectralPoint:
    """
    An eigenvalue candidate lam together with its characteristic coordinate.

    Attributes:
        lam (float): Eigenvalue candidate outside [0, 1/k].
        kappa (float): (1 - 1/(lam k))^(1/4) > 0.
        k (float): Spring constant the mapping refers to.
    """
    lam: float
    kappa: float
    k: float

    @classmethod
    def from_lambda(cls, lam: float, k: float) -> "SpectralPoint":
        """
        Maps an eigenvalue candidate to its characteristic coordinate.

        :param lam: Eigenvalue candidate; must lie outside [0, 1/k].
        :param k: Spring constant.
        :return: SpectralPoint with kappa > 1 for lam < 0 and 0 < kappa < 1 for lam > 1/k.
        """
        _require_positive("k", k)
        if not math.isfinite(lam) or 0.0 <= lam * k <= 1.0:
            raise DomainError(f"lambda must lie outside [0, 1/k] = [0, {1.0 / k}], got {lam!r}")
        kappa4 = 1.0 - 1.0 / (lam * k)
        return cls(lam=lam, kappa=kappa4 ** 0.25, k=k)

    @classmethod
    def from_kappa(cls, kappa: float, k: float) -> "SpectralPoint":
        """
        Inverse mapping lam = 1 / (k (1 - kappa^4)).

        :param kappa: Characteristic coordinate, positive and different from 1.
        :param k: Spring constant.
        :return: SpectralPoint for the corresponding eigenvalue candidate.
        """
        _require_positive("k", k)
        _require_positive("kappa", kappa)
        if kappa == 1.0:
            raise DomainError("kappa = 1 corresponds to lambda = infinity")
        # factored so that 1 - kappa^4 stays accurate near kappa = 1
        one_minus = (1.0 - kappa) * (1.0 + kappa) * (1.0 + kappa * kappa)
        return cls(lam=1.0 / (k * one_minus), kappa=kappa, k=k)


@dataclass(frozen=True)
class BranchedAngle:
    """
    Value of ghat(kappa) together with the arctan piece it was taken from.

    Attributes:
        value (float | np.ndarray): ghat(kappa) in (-2 pi, 0].
        branch_index (int | np.ndarray): 0 for kappa < sqrt2-1, 1 up to sqrt2+1, 2 beyond.
    """
    value: float | np.ndarray
    branch_index: int | np.ndarray


@dataclass(frozen=True)
class PsiEvaluation:
    """
    psi_L(kappa) with a saturation flag for huge L*kappa.

    Attributes:
        value (float): psi_L(kappa), +inf when saturated.
        log_value (float): log psi_L(kappa), always finite.
        saturated (bool): True when L*kappa exceeds LOG_OVERFLOW.
    """
    value: float
    log_value: float
    saturated: bool


class MollifiedChain(NamedTuple):
    psi_tilde: float
    f_cos: float
    q_tilde: float


@dataclass(frozen=True)
class ScanRegion:
    """
    Rectangle of (kappa, L) values to certify.

    Attributes:
        kappa_min (float), kappa_max (float): Range of kappa, 0 < kappa_min < kappa_max.
        L_min (float), L_max (float): Range of L, 0 < L_min < L_max.
        initial_grid (tuple): (n_kappa, n_L), both at least 2.
        refine_depth (int): Maximum number of bisection levels per cell.
    """
    kappa_min: float = DEFAULT_SCAN_KAPPA[0]
    kappa_max: float = DEFAULT_SCAN_KAPPA[1]
    L_min: float = DEFAULT_SCAN_L[0]
    L_max: float = DEFAULT_SCAN_L[1]
    initial_grid: Tuple[int, int] = DEFAULT_SCAN_GRID
    refine_depth: int = DEFAULT_REFINE_DEPTH

    def __post_init__(self) -> None:
        for name in ("kappa_min", "kappa_max", "L_min", "L_max"):
            _require_positive(name, getattr(self, name))
        if not self.kappa_min < self.kappa_max:
            raise DomainError(f"kappa_min {self.kappa_min} must be below kappa_max {self.kappa_max}")
        if not self.L_min < self.L_max:
            raise DomainError(f"L_min {self.L_min} must be below L_max {self.L_max}")
        if len(self.initial_grid) != 2 or min(self.initial_grid) < 2:
            raise DomainError(f"grid dimensions must both be at least 2, got {self.initial_grid}")
        if self.refine_depth < 0:
            raise DomainError(f"refine_depth must be nonnegative, got {self.refine_depth}")

    def contains(self, kappa: float, L: float) -> bool:
        return self.kappa_min <= kappa <= self.kappa_max and self.L_min <= L <= self.L_max

    def to_dict(self) -> dict:
        data = asdict(self)
        data["initial_grid"] = list(self.initial_grid)
        return data


@dataclass
class SubReport:
    """
    Outcome of one auxiliary inequality check.

    Attributes:
        name (str): Short identifier of the check.
        passed (bool): Whether the inequality held at every sampled point.
        checked (int): Number of sampled points.
        worst_value (float): Smallest slack observed (positive means satisfied).
        witness (Optional[dict]): Sample attaining worst_value.
        note (str): Extra information, e.g. precondition status.
    """
    name: str
    passed: bool
    checked: int
    worst_value: float
    witness: Optional[dict] = None
    note: str = ""

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class ScanReport:
    """
    Result of certifying psi_L(kappa) - q(kappa) > 0 over a region.

    Attributes:
        region (ScanRegion): The scanned region.
        min_margin (float): Smallest margin seen (log-space margin in saturated cells).
        witness (tuple): (kappa, L) attaining min_margin.
        cells_evaluated (int): Cells visited, refined children included.
        points_evaluated (int): Margin evaluations performed.
        all_positive (bool): True iff min_margin > 0.
        error_bound (float): Estimated evaluation error at the witness.
        saturated_points (int): Samples evaluated in log space.
        refined_cells (int): Cells that were bisected.
        inverted (bool): True when q - psi was scanned instead.
        sub_reports (List[SubReport]): Auxiliary checks.
        cells (Optional[np.ndarray]): Per-cell rows (kappa_lo, kappa_hi, L_lo, L_hi, min_margin, error_bound, depth).
    """
    region: ScanRegion
    min_margin: float
    witness: Tuple[float, float]
    cells_evaluated: int
    points_evaluated: int
    all_positive: bool
    error_bound: float
    saturated_points: int = 0
    refined_cells: int = 0
    inverted: bool = False
    sub_reports: List[SubReport] = field(default_factory=list)
    cells: Optional[np.ndarray] = None

    def to_dict(self) -> dict:
        return {
            "region": self.region.to_dict(),
            "grid": list(self.region.initial_grid),
            "min_margin": self.min_margin,
            "witness": {"kappa": self.witness[0], "L": self.witness[1]},
            "error_bound": self.error_bound,
            "cells_evaluated": self.cells_evaluated,
            "points_evaluated": self.points_evaluated,
            "saturated_points": self.saturated_points,
            "refined_cells": self.refined_cells,
            "all_positive": self.all_positive,
            "inverted": self.inverted,
            "sub_reports": [report.to_dict() for report in self.sub_reports],
        }


@dataclass(frozen=True)
class ABCCoefficients:
    """
    Coefficients of the cubic x^3 + a x^2 + b x + c in x = L*kappa.

    Attributes:
        kappa (float): Point the coefficients were evaluated at (> 1 + sqrt2).
        arctan_value (float): arctan{4 kappa (kappa^2-1)/(kappa^4-6 kappa^2+1)}, in (0, pi/2).
        a (float), b (float), c (float): The three coefficients.
    """
    kappa: float
    arctan_value: float
    a: float
    b: float
    c: float

    @property
    def all_positive(self) -> bool:
        return self.a > 0 and self.b > 0 and self.c > 0


@dataclass(frozen=True)
class QuadratureGrid:
    """
    Quadrature nodes and weights on [-l, l].

    Attributes:
        nodes (np.ndarray): Strictly increasing nodes.
        weights (np.ndarray): Positive weights.
        rule (str): Rule identifier.
    """
    nodes: np.ndarray
    weights: np.ndarray
    rule: str

    def __post_init__(self) -> None:
        if self.nodes.shape != self.weights.shape or self.nodes.ndim != 1:
            raise GridMismatchError(
                f"nodes {self.nodes.shape} and weights {self.weights.shape} must be 1-d of equal length")

    @property
    def n(self) -> int:
        return self.nodes.size


@dataclass(frozen=True)
class KernelMatrix:
    """
    Symmetric Nystrom matrix A_ij = sqrt(w_i) K(|x_i - x_j|) sqrt(w_j).

    Attributes:
        grid (QuadratureGrid): Nodes and weights.
        entries (np.ndarray): The n x n matrix.
        config (BeamConfig): Parameters the kernel was built with.
    """
    grid: QuadratureGrid
    entries: np.ndarray
    config: BeamConfig

    @property
    def nodes(self) -> np.ndarray:
        return self.grid.nodes

    @property
    def weights(self) -> np.ndarray:
        return self.grid.weights

    @property
    def n(self) -> int:
        return self.grid.n

    @property
    def symmetry_defect(self) -> float:
        return float(np.max(np.abs(self.entries - self.entries.T)))


@dataclass
class Spectrum:
    """
    Descending eigenvalues of a KernelMatrix with diagnostics.

    Attributes:
        eigenvalues (np.ndarray): Sorted in descending order.
        n (int): Matrix size.
        residual_bound (float): max ||A v - lam v|| over computed pairs.
        eigenvectors (Optional[np.ndarray]): Columns match eigenvalues.
        grid (Optional[QuadratureGrid]): Grid of the discretisation.
        error_estimates (Optional[np.ndarray]): Per-eigenvalue discretisation error estimate.
        parity (Optional[np.ndarray]): Even-odd scores <v, Pv> of the eigenvectors.
        residuals (Optional[np.ndarray]): Per-pair residual norms ||A v - lam v||.
    """
    eigenvalues: np.ndarray
    n: int
    residual_bound: float
    eigenvectors: Optional[np.ndarray] = None
    grid: Optional[QuadratureGrid] = None
    error_estimates: Optional[np.ndarray] = None
    parity: Optional[np.ndarray] = None
    residuals: Optional[np.ndarray] = None

    @property
    def reliable_count(self) -> int:
        """
        Number of leading eigenvalues exceeding RELIABLE_FACTOR times their error estimate.
        """
        floor = np.full(self.eigenvalues.size, self.residual_bound)
        if self.error_estimates is not None:
            floor = np.maximum(floor, self.error_estimates)
        good = self.eigenvalues > RELIABLE_FACTOR * floor
        if good.all():
            return int(good.size)
        return int(np.argmin(good))

    def parity_classes(self) -> List[str]:
        if self.parity is None:
            return ["unclassified"] * self.eigenvalues.size
        classes = []
        for score in self.parity:
            if score > PARITY_THRESHOLD:
                classes.append("even")
            elif score < -PARITY_THRESHOLD:
                classes.append("odd")
            else:
                classes.append("unclassified")
        return classes


@dataclass
class ConfinementVerdict:
    """
    Outcome of checking that the spectrum lies inside (-tol, 1/k - margin).

    Truthy iff confined.
    """
    confined: bool
    lower: float
    upper: float
    violations: List[float] = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.confined


class DecayFit(NamedTuple):
    slope: float
    r2: float


@dataclass
class LoadProfile:
    """
    Load w(x) sampled on a uniform grid; zero outside the sampled support.

    Attributes:
        x (np.ndarray): Uniform, strictly increasing grid.
        w (np.ndarray): Load values (force/length).
    """
    x: np.ndarray
    w: np.ndarray

    def __post_init__(self) -> None:
        self.x = np.asarray(self.x, dtype=float)
        self.w = np.asarray(self.w, dtype=float)
        if self.x.ndim != 1 or self.x.shape != self.w.shape or self.x.size < 2:
            raise GridMismatchError(f"x {self.x.shape} and w {self.w.shape} must be 1-d, equal, at least 2 long")
        if not (np.all(np.isfinite(self.x)) and np.all(np.isfinite(self.w))):
            raise DomainError("load profile contains non-finite values")
        steps = np.diff(self.x)
        if np.any(steps <= 0):
            raise DomainError("load grid must be strictly increasing")
        if not np.allclose(steps, steps[0], rtol=1e-6, atol=0.0):
            raise DomainError("load grid must be uniform")

    @classmethod
    def from_function(cls, func: Callable[[np.ndarray], np.ndarray], start: float, stop: float,
                      n: int) -> "LoadProfile":
        x = np.linspace(start, stop, n)
        return cls(x=x, w=np.asarray(func(x), dtype=float) * np.ones_like(x))

    @property
    def spacing(self) -> float:
        return float(self.x[1] - self.x[0])

    @property
    def support(self) -> Tuple[float, float]:
        return float(self.x[0]), float(self.x[-1])

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        return np.interp(points, self.x, self.w, left=0.0, right=0.0)


@dataclass
class DeflectionProfile:
    """
    Deflection u(x) sampled on the evaluation grid.

    Attributes:
        x (np.ndarray): Evaluation points.
        u (np.ndarray): Deflection values (length).
        metadata (dict): Solver name, configuration, iteration count, residual, history.
    """
    x: np.ndarray
    u: np.ndarray
    metadata: dict = field(default_factory=dict)


@dataclass
class FoundationLaw:
    """
    Pointwise foundation reaction phi(u, x).

    Attributes:
        phi (Callable): Vectorised phi(u, x) in force/length.
        lipschitz (float): Lipschitz constant in u of k*u - phi(u, x) over the operating range.
        name (str): Label used in reports.
    """
    phi: Callable[[np.ndarray, np.ndarray], np.ndarray]
    lipschitz: float
    name: str = "custom"

    def __post_init__(self) -> None:
        if not (math.isfinite(self.lipschitz) and self.lipschitz >= 0):
            raise DomainError(f"Lipschitz constant must be finite and nonnegative, got {self.lipschitz!r}")

    @classmethod
    def linear(cls, k: float) -> "FoundationLaw":
        return cls(phi=lambda u, x: k * u, lipschitz=0.0, name="linear")

    @classmethod
    def cubic(cls, k: float, epsilon: float, amplitude: float) -> "FoundationLaw":
        """
        Hardening law phi = k u + epsilon u^3, valid for |u| <= amplitude.

        :param k: Linear spring constant.
        :param epsilon: Cubic coefficient.
        :param amplitude: Bound on |u| over the operating range.
        :return: FoundationLaw with Lipschitz constant 3 |epsilon| amplitude^2.
        """
        return cls(phi=lambda u, x: k * u + epsilon * u ** 3,
                   lipschitz=3.0 * abs(epsilon) * amplitude ** 2,
                   name=f"cubic(eps={epsilon})")

    @classmethod
    def estimate(cls, phi: Callable[[np.ndarray, np.ndarray], np.ndarray], k: float, amplitude: float,
                 x: np.ndarray, samples: int = 201, name: str = "estimated") -> "FoundationLaw":
        """
        Estimates the Lipschitz constant of k*u - phi(u, x) by difference quotients on |u| <= amplitude.

        :param phi: Vectorised foundation law.
        :param k: Linear spring constant.
        :param amplitude: Operating range bound on |u|.
        :param x: Positions where the law is sampled.
        :param samples: Number of u samples.
        :param name: Label for reports.
        :return: FoundationLaw with the estimated constant.
        """
        u = np.linspace(-amplitude, amplitude, samples)
        uu, xx = np.meshgrid(u, np.asarray(x, dtype=float), indexing="ij")
        deviation = k * uu - phi(uu, xx)
        quotients = np.abs(np.diff(deviation, axis=0)) / np.diff(u)[:, None]
        return cls(phi=phi, lipschitz=float(np.max(quotients)), name=name)


@dataclass
class RunManifest:
    """
    Everything needed to reproduce a CLI run.

    Attributes:
        subcommand (str): eval, scan, spectrum, deflect or check.
        parameters (dict): Configuration and numerical parameters.
        paths (dict): Input and output paths.
        tolerances (dict): Tolerances in force; all positive.
        seed (Optional[int]): Seed for randomised checks.
        schema_version (str): Report schema version.
    """
    subcommand: str
    parameters: dict = field(default_factory=dict)
    paths: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)
    seed: Optional[int] = None
    schema_version: str = SCHEMA_VERSION

    def __post_init__(self) -> None:
        for name, value in self.tolerances.items():
            if not (isinstance(value, (int, float)) and value > 0):
                raise DomainError(f"tolerance {name} must be positive, got {value!r}")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class SpectrumSummary:
    """
    Spectrum of one discretisation together with its confinement verdict and decay fit.

    Attributes:
        config (BeamConfig): Beam parameters.
        rule (str): Quadrature rule.
        spectrum (Spectrum): Eigenvalues and diagnostics.
        verdict (ConfinementVerdict): Confinement outcome.
        window (tuple): Decay window (n_lo, n_hi), 1-based.
        decay (Optional[DecayFit]): Fit over the window, None when the window is not reliable.
        decay_note (str): Why decay is None.
    """
    config: BeamConfig
    rule: str
    spectrum: Spectrum
    verdict: ConfinementVerdict
    window: Tuple[int, int] = DEFAULT_DECAY_WINDOW
    decay: Optional[DecayFit] = None
    decay_note: str = ""

    def to_dict(self) -> dict:
        classes = self.spectrum.parity_classes()
        return {
            "config": self.config.to_dict(),
            "n": self.spectrum.n,
            "rule": self.rule,
            "lambda_1": float(self.spectrum.eigenvalues[0]),
            "confined": self.verdict.confined,
            "bounds": [self.verdict.lower, self.verdict.upper],
            "violations": list(self.verdict.violations),
            "residual_bound": self.spectrum.residual_bound,
            "reliable_count": self.spectrum.reliable_count,
            "decay": None if self.decay is None else {"window": list(self.window), "slope": self.decay.slope,
                                                      "r2": self.decay.r2},
            "decay_note": self.decay_note,
            "leading_symmetry_classes": classes[:6],
        }
