"""
Closed-form characteristic functions of the beam-on-foundation eigenproblem.

Every function accepts a float or a numpy array and returns the same kind.
Nothing in this module logs or keeps state.
"""
import math
from typing import Tuple

import numpy as np
from scipy.optimize import brentq

from beam_foundation_lib.exceptions import (ConvergenceError, DomainError, NondifferentiablePointError,
                                            SingularityError)
from beam_foundation_lib.utils import (INVERSE_MAX_ITER, INVERSE_TOLERANCE, KAPPA_LOWER_BRANCH,
                                       KAPPA_UPPER_BRANCH, LOG_OVERFLOW, NONDIFF_TOLERANCE, BranchedAngle,
                                       PsiEvaluation)

Real = float | np.ndarray

TWO_PI = 2.0 * math.pi
_ATANH_SERIES_LIMIT = 0.1
_DEFECT_SERIES_LIMIT = 2e-2


def _array(value: Real) -> np.ndarray:
    return np.asarray(value, dtype=float)


def _result(value: np.ndarray, *like: Real) -> Real:
    if all(np.ndim(item) == 0 for item in like):
        return float(value)
    return value


def _require_nonneg(value: np.ndarray, name: str) -> None:
    if np.any(np.isnan(value)) or np.any(value < 0):
        raise DomainError(f"{name} must be >= 0, got {value if value.ndim == 0 else value[value < 0]}")


def _require_positive(value: np.ndarray, name: str) -> None:
    if np.any(np.isnan(value)) or np.any(value <= 0):
        raise DomainError(f"{name} must be > 0, got {value if value.ndim == 0 else value[value <= 0]}")


def _require_open_interval(t: np.ndarray, low: float, high: float, name: str = "t") -> None:
    if np.any(np.isnan(t)) or np.any(t <= low) or np.any(t >= high):
        raise DomainError(f"{name} must lie in the open interval ({low}, {high}), got {t}")


def _distance_to_two_pi_multiple(g: np.ndarray) -> np.ndarray:
    remainder = np.mod(g, TWO_PI)
    return np.minimum(remainder, TWO_PI - remainder)


def _sine_ratio(g: np.ndarray) -> np.ndarray:
    # sin g / sqrt((2 - cos g)^2 - 1) rewritten in half angles
    half_sin = np.sin(0.5 * g)
    return np.sign(half_sin) * np.cos(0.5 * g) / np.sqrt(1.0 + half_sin ** 2)


def eval_q(kappa: Real) -> Real:
    """
    q(kappa) = (kappa - 1)^2 / (kappa + 1)^2.

    :param kappa: Nonnegative characteristic coordinate.
    :return: Value in [0, 1].
    :raises DomainError: If kappa < 0.
    """
    k = _array(kappa)
    _require_nonneg(k, "kappa")
    return _result(((k - 1.0) / (k + 1.0)) ** 2, kappa)


def eval_q_prime(kappa: Real) -> Real:
    """
    q'(kappa) = 4 (kappa - 1) / (kappa + 1)^3.

    :param kappa: Nonnegative characteristic coordinate.
    :return: Negative on [0, 1), zero at 1, positive beyond.
    :raises DomainError: If kappa < 0.
    """
    k = _array(kappa)
    _require_nonneg(k, "kappa")
    return _result(4.0 * (k - 1.0) / (k + 1.0) ** 3, kappa)


def eval_f(t: Real) -> Real:
    """
    f(t) = (2 - t) - sqrt((2 - t)^2 - 1), evaluated in the conjugate form
    1 / ((2 - t) + sqrt((1 - t)(3 - t))).

    :param t: Argument in [-1, 1].
    :return: Value in [3 - 2 sqrt2, 1].
    :raises DomainError: Outside [-1, 1].
    """
    x = _array(t)
    if np.any(np.isnan(x)) or np.any(np.abs(x) > 1.0):
        raise DomainError(f"f is defined on [-1, 1], got {t}")
    return _result(1.0 / ((2.0 - x) + np.sqrt((1.0 - x) * (3.0 - x))), t)


def eval_f_prime(t: Real) -> Real:
    """
    f'(t) = f(t) / sqrt((2 - t)^2 - 1).

    :param t: Argument in [-1, 1).
    :return: Nonnegative derivative.
    :raises SingularityError: At t = 1.
    :raises DomainError: Outside [-1, 1].
    """
    x = _array(t)
    if np.any(np.isnan(x)) or np.any(np.abs(x) > 1.0):
        raise DomainError(f"f' is defined on [-1, 1), got {t}")
    if np.any(x == 1.0):
        raise SingularityError("f' is singular at t = 1")
    root = np.sqrt((1.0 - x) * (3.0 - x))
    return _result(1.0 / (((2.0 - x) + root) * root), t)


def eval_ghat(kappa: Real) -> BranchedAngle:
    """
    Branch-correct ghat(kappa), dispatching on the three kappa-intervals of the arctan pieces.
    The boundaries sqrt2 - 1 and sqrt2 + 1 return -pi/2 and -3pi/2 exactly and are counted
    with the branch above them.

    :param kappa: Nonnegative characteristic coordinate.
    :return: BranchedAngle with value in (-2 pi, 0].
    :raises DomainError: If kappa < 0.
    """
    k = _array(kappa)
    _require_nonneg(k, "kappa")
    branch = np.where(k < KAPPA_LOWER_BRANCH, 0, np.where(k < KAPPA_UPPER_BRANCH, 1, 2))
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = 4.0 * k * (k * k - 1.0) / (k ** 4 - 6.0 * k * k + 1.0)
        value = np.arctan(ratio) - math.pi * branch
    value = np.where(k == KAPPA_LOWER_BRANCH, -0.5 * math.pi, value)
    value = np.where(k == KAPPA_UPPER_BRANCH, -1.5 * math.pi, value)
    value = np.where(np.isinf(k), -TWO_PI, value)
    if np.ndim(kappa) == 0:
        return BranchedAngle(value=float(value), branch_index=int(branch))
    return BranchedAngle(value=value, branch_index=branch)


def eval_ghat_prime(kappa: Real) -> Real:
    """
    ghat'(kappa) = -4 / (kappa^2 + 1); smooth across both branch points.

    :param kappa: Nonnegative characteristic coordinate.
    :return: Negative value in [-4, 0).
    """
    k = _array(kappa)
    _require_nonneg(k, "kappa")
    return _result(-4.0 / (k * k + 1.0), kappa)


def eval_gL(kappa: Real, L: Real) -> Real:
    """
    g_L(kappa) = L kappa - ghat(kappa).

    :param kappa: Nonnegative characteristic coordinate.
    :param L: Positive dimensionless beam length.
    :return: Nonnegative value, strictly increasing in kappa.
    """
    k = _array(kappa)
    length = _array(L)
    _require_nonneg(k, "kappa")
    _require_positive(length, "L")
    return _result(length * k - eval_ghat(k).value, kappa, L)


def eval_gL_prime(kappa: Real, L: Real) -> Real:
    """
    g_L'(kappa) = L + 4 / (kappa^2 + 1), the Newton slope used by invert_gL.

    :param kappa: Nonnegative characteristic coordinate.
    :param L: Positive dimensionless beam length.
    :return: Value in (L, L + 4].
    """
    k = _array(kappa)
    length = _array(L)
    _require_nonneg(k, "kappa")
    _require_positive(length, "L")
    return _result(length + 4.0 / (k * k + 1.0), kappa, L)


def invert_gL(t: float, L: float, tol: float = INVERSE_TOLERANCE, max_iter: int = INVERSE_MAX_ITER) -> float:
    """
    Inverts the strictly increasing g_L on the bracket [0, t/L] with safeguarded Newton steps.
    A Newton step leaving the bracket or shrinking too slowly is replaced by bisection.

    :param t: Target value, t >= 0.
    :param L: Positive dimensionless beam length.
    :param tol: Tolerance on |g_L(kappa) - t|.
    :param max_iter: Iteration budget.
    :return: kappa with |g_L(kappa) - t| <= tol, or the floating-point limit of the bracket.
    :raises DomainError: On negative t, nonpositive L or tol.
    :raises ConvergenceError: If the budget is exhausted.
    """
    if not (math.isfinite(t) and t >= 0):
        raise DomainError(f"t must be a finite number >= 0, got {t!r}")
    if not (math.isfinite(L) and L > 0):
        raise DomainError(f"L must be a finite number > 0, got {L!r}")
    if not tol > 0:
        raise DomainError(f"tol must be > 0, got {tol!r}")
    if t == 0.0:
        return 0.0
    low, high = 0.0, t / L
    kappa = 0.5 * (low + high)
    step_old = high - low
    step = step_old
    residual = eval_gL(kappa, L) - t
    slope = eval_gL_prime(kappa, L)
    for iteration in range(1, max_iter + 1):
        if abs(residual) <= tol:
            return kappa
        if residual < 0:
            low = kappa
        else:
            high = kappa
        newton_outside = ((kappa - high) * slope - residual) * ((kappa - low) * slope - residual) >= 0.0
        if newton_outside or abs(2.0 * residual) > abs(step_old * slope):
            step_old = step
            step = 0.5 * (high - low)
            kappa = low + step
        else:
            step_old = step
            step = residual / slope
            kappa = kappa - step
        if high - low <= 4.0 * np.finfo(float).eps * max(high, 1.0):
            return kappa
        residual = eval_gL(kappa, L) - t
        slope = eval_gL_prime(kappa, L)
    raise ConvergenceError(f"g_L inversion for t={t}, L={L} did not reach tol={tol} in {max_iter} iterations",
                           iterations=max_iter,
                           diagnostics={"kappa": kappa, "residual": residual, "bracket": (low, high)})


def invert_gL_dL(t: float, L: float) -> float:
    """
    Sensitivity of g_L^{-1}(t) to L: -kappa / g_L'(kappa) with kappa = g_L^{-1}(t). Never positive.
    """
    kappa = invert_gL(t, L)
    return -kappa / eval_gL_prime(kappa, L)


def eval_psi(kappa: Real, L: Real) -> Real:
    """
    psi_L(kappa) = exp(L kappa) f(cos g_L(kappa)).

    Returns inf once L kappa overflows; eval_psi_checked reports that case explicitly.

    :param kappa: Nonnegative characteristic coordinate.
    :param L: Positive dimensionless beam length.
    :return: Positive value, 1 at kappa = 0.
    """
    k = _array(kappa)
    length = _array(L)
    g = _array(eval_gL(k, length))
    with np.errstate(over="ignore"):
        value = np.exp(length * k) * eval_f(np.cos(g))
    return _result(value, kappa, L)


def eval_log_psi(kappa: Real, L: Real) -> Real:
    """
    log psi_L(kappa) = L kappa - 2 asinh|sin(g_L(kappa)/2)|; finite for every finite input.
    """
    k = _array(kappa)
    length = _array(L)
    g = _array(eval_gL(k, length))
    return _result(length * k - 2.0 * np.arcsinh(np.abs(np.sin(0.5 * g))), kappa, L)


def eval_psi_checked(kappa: Real, L: Real) -> PsiEvaluation:
    """
    psi_L(kappa) together with its logarithm and the saturation flag (L kappa > LOG_OVERFLOW).

    :param kappa: Nonnegative characteristic coordinate.
    :param L: Positive dimensionless beam length.
    :return: PsiEvaluation; value is inf where saturated.
    """
    k = _array(kappa)
    length = _array(L)
    log_value = _array(eval_log_psi(k, length))
    saturated = length * k > LOG_OVERFLOW
    with np.errstate(over="ignore"):
        value = np.where(saturated, np.inf, np.exp(np.minimum(log_value, LOG_OVERFLOW)))
    if np.ndim(kappa) == 0 and np.ndim(L) == 0:
        return PsiEvaluation(value=float(value), log_value=float(log_value), saturated=bool(saturated))
    return PsiEvaluation(value=value, log_value=log_value, saturated=saturated)


def eval_psi_prime(kappa: Real, L: Real) -> Real:
    """
    psi_L'(kappa) = psi_L(kappa) {L - sin g / sqrt((2 - cos g)^2 - 1) g_L'(kappa)}, g = g_L(kappa).

    :param kappa: Positive characteristic coordinate.
    :param L: Positive dimensionless beam length.
    :return: Derivative value.
    :raises NondifferentiablePointError: Where g_L(kappa) is within NONDIFF_TOLERANCE of a multiple of 2 pi.
    """
    k = _array(kappa)
    length = _array(L)
    _require_positive(k, "kappa")
    g = _array(eval_gL(k, length))
    if np.any(_distance_to_two_pi_multiple(g) < NONDIFF_TOLERANCE):
        raise NondifferentiablePointError(f"g_L(kappa) is a multiple of 2 pi at kappa={kappa}, L={L}")
    psi = _array(eval_psi(k, length))
    slope = _array(eval_gL_prime(k, length))
    return _result(psi * (length - _sine_ratio(g) * slope), kappa, L)


def eval_psi_dL(kappa: Real, L: Real) -> Real:
    """
    Partial derivative of psi_L(kappa) in L: kappa psi {1 - sin g / sqrt((2 - cos g)^2 - 1)} >= 0.

    :raises NondifferentiablePointError: Where g_L(kappa) is a multiple of 2 pi.
    """
    k = _array(kappa)
    length = _array(L)
    _require_positive(k, "kappa")
    g = _array(eval_gL(k, length))
    if np.any(_distance_to_two_pi_multiple(g) < NONDIFF_TOLERANCE):
        raise NondifferentiablePointError(f"g_L(kappa) is a multiple of 2 pi at kappa={kappa}, L={L}")
    psi = _array(eval_psi(k, length))
    return _result(k * psi * (1.0 - _sine_ratio(g)), kappa, L)


def _atanh_minus_atan(kappa: np.ndarray) -> np.ndarray:
    # sum of 2 kappa^(4j+3) / (4j+3) below the series limit
    out = np.arctanh(kappa) - np.arctan(kappa)
    small = kappa < _ATANH_SERIES_LIMIT
    if np.any(small):
        k = kappa[small]
        k4 = k ** 4
        series = np.zeros_like(k)
        power = k ** 3
        for j in range(6):
            series += 2.0 * power / (4 * j + 3)
            power = power * k4
        out[small] = series
    return out


def _half_angle_defect(g: np.ndarray) -> np.ndarray:
    # g - 2 asinh(sin(g/2)) for g >= 0
    out = g - 2.0 * np.arcsinh(np.abs(np.sin(0.5 * g)))
    small = g < _DEFECT_SERIES_LIMIT
    if np.any(small):
        x = g[small]
        x2 = x * x
        out[small] = x * x2 * (1.0 / 12.0 - x2 / 96.0 + 79.0 * x2 * x2 / 40320.0)
    return out


def eval_log_margin(kappa: Real, L: Real) -> Real:
    """
    log psi_L(kappa) - log q(kappa), +inf at kappa = 1.

    Below kappa = 1 this is regrouped as 4 (artanh kappa - arctan kappa) + [g - 2 asinh sin(g/2)],
    which keeps full relative accuracy as kappa -> 0 where both logarithms vanish.

    :param kappa: Nonnegative characteristic coordinate.
    :param L: Positive dimensionless beam length.
    :return: Log of psi_L / q.
    """
    k, length = np.broadcast_arrays(_array(kappa), _array(L))
    k = np.array(k, dtype=float)
    length = np.array(length, dtype=float)
    g = np.atleast_1d(_array(eval_gL(k, length)))
    k1 = np.atleast_1d(k)
    l1 = np.atleast_1d(length)
    out = np.full(k1.shape, np.inf)
    below = k1 < 1.0
    above = k1 > 1.0
    if np.any(below):
        out[below] = 4.0 * _atanh_minus_atan(k1[below]) + _half_angle_defect(g[below])
    if np.any(above):
        ka = k1[above]
        out[above] = (l1[above] * ka - 2.0 * np.arcsinh(np.abs(np.sin(0.5 * g[above])))
                      - 2.0 * np.log((ka - 1.0) / (ka + 1.0)))
    return _result(out.reshape(k.shape), kappa, L)


def eval_margin(kappa: Real, L: Real) -> Real:
    """
    psi_L(kappa) - q(kappa) computed as q expm1(log margin); equals psi_L where q = 0.

    :param kappa: Nonnegative characteristic coordinate.
    :param L: Positive dimensionless beam length.
    :return: The margin, inf where psi_L overflows.
    """
    k, length = np.broadcast_arrays(_array(kappa), _array(L))
    q = _array(eval_q(k))
    log_margin = _array(eval_log_margin(k, length))
    with np.errstate(over="ignore", invalid="ignore"):
        margin = np.where(q > 0, q * np.expm1(log_margin), 0.0)
    at_one = q == 0
    if np.any(at_one):
        margin = np.where(at_one, _array(eval_psi(k, length)), margin)
    return _result(margin, kappa, L)


def ghat_inverse(s: float) -> float:
    """
    Numerical inverse of ghat: kappa >= 0 with ghat(kappa) = -s.

    :param s: Angle in [0, 2 pi).
    :return: kappa on the monotone branch.
    :raises DomainError: Outside [0, 2 pi).
    """
    if not (math.isfinite(s) and 0.0 <= s < TWO_PI):
        raise DomainError(f"s must lie in [0, 2 pi), got {s!r}")
    if s == 0.0:
        return 0.0
    high = 1.0
    while eval_ghat(high).value + s > 0:
        high *= 2.0
    return brentq(lambda kappa: eval_ghat(kappa).value + s, 0.0, high, xtol=1e-15, rtol=4 * np.finfo(float).eps,
                  maxiter=INVERSE_MAX_ITER)


def ghat_inverse_closed(t: Real) -> Real:
    """
    Closed form of ghat^{-1}(-t) on (3 pi/2, 2 pi):
    (sqrt(1 + cos t) + sqrt2) / sqrt(1 - cos t) = (1 + |cos(t/2)|) / |sin(t/2)|.

    :param t: Angle in the open interval (3 pi/2, 2 pi).
    :return: kappa > 1 + sqrt2.
    :raises DomainError: Outside the open interval.
    """
    x = _array(t)
    _require_open_interval(x, 1.5 * math.pi, TWO_PI)
    return _result((1.0 + np.abs(np.cos(0.5 * x))) / np.abs(np.sin(0.5 * x)), t)


def q_of_ghat_inverse(t: Real) -> Real:
    """
    q(ghat^{-1}(-t)) = (3 - cos t - 2 sqrt2 sqrt(1 - cos t)) / (1 + cos t) on (3 pi/2, 2 pi),
    in the half-angle form (1 - |sin(t/2)|) / (1 + |sin(t/2)|).

    :param t: Angle in the open interval (3 pi/2, 2 pi).
    :return: Value in (0, 1).
    :raises DomainError: Outside the open interval.
    """
    x = _array(t)
    _require_open_interval(x, 1.5 * math.pi, TWO_PI)
    half_sin = np.abs(np.sin(0.5 * x))
    return _result((1.0 - half_sin) / (1.0 + half_sin), t)


def reciprocal_f_bound(t: Real) -> Tuple[Real, Real]:
    """
    1 / f(cos t) and its cubic majorant 1 + d + d^2/2 + d^3/8 with d = |t - 2 pi|.

    :param t: Any real angle.
    :return: (reciprocal, bound); reciprocal <= bound everywhere.
    """
    x = _array(t)
    c = np.cos(x)
    reciprocal = (2.0 - c) + np.sqrt((1.0 - c) * (3.0 - c))
    d = np.abs(x - TWO_PI)
    bound = 1.0 + d + d * d / 2.0 + d ** 3 / 8.0
    return _result(reciprocal, t), _result(bound, t)
