"""Fundamental solution of L = (eps dt + c^2) dxx - (dt + a) dt.

Two independent evaluation paths are provided:

* the time-domain path, which integrates the Bessel representation of G and
  then applies the Abel convolution K = int G(r, tau) / sqrt(pi (t - tau)),
* the Talbot path, which inverts the Laplace transform of any kernel channel
  on a fixed Talbot contour.

Offsets are scaled as r = |x| / sqrt(eps); with this scaling the transform of
K written in |x| and the transform of G written in r agree exactly.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable
from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple

import numpy as np
from scipy import integrate, special

from viscowave.errors import AccuracyError, KernelDomainError, RangeError

logger = logging.getLogger(__name__)

TALBOT_NODES = 32


@dataclass(frozen=True)
class ModelParams:
    epsilon: float
    c: float
    a: float

    def __post_init__(self):
        for name in ("epsilon", "c", "a"):
            value = getattr(self, name)
            if not math.isfinite(value) or value <= 0:
                raise KernelDomainError(
                    f"{name} must be a positive finite number, got {value!r}."
                )
        if self.a > self.b * (1.0 + 1e-12):
            raise KernelDomainError(
                f"a <= b required (a={self.a:g}, b={self.b:g}); "
                "the kernel loses positivity for a > b."
            )

    @property
    def b(self) -> float:
        return self.c**2 / self.epsilon

    @property
    def degenerate(self) -> bool:
        """True when a == b and the Bessel factor of G collapses to 1."""
        return math.isclose(self.a, self.b, rel_tol=1e-12)

    def scaled_offset(self, x):
        return np.abs(x) / math.sqrt(self.epsilon)


@dataclass(frozen=True)
class QuadratureSpec:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-14
    max_subdivisions: int = 200

    def __post_init__(self):
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise ValueError("Quadrature tolerances must be positive.")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be at least 1.")

    def relaxed(self, rel_tol: float, abs_tol: float) -> QuadratureSpec:
        return QuadratureSpec(
            rel_tol=max(self.rel_tol, rel_tol),
            abs_tol=max(self.abs_tol, abs_tol),
            max_subdivisions=self.max_subdivisions,
        )


@dataclass(frozen=True)
class LaplacePoint:
    s: complex

    def check(self, params: ModelParams) -> None:
        bound = max(-params.a, -params.b)
        if not complex(self.s).real > bound:
            raise KernelDomainError(
                f"Laplace point s={self.s} outside the half-plane Re(s) > {bound:g}."
            )


class KernelChannel(str, Enum):
    K = "k"
    KX = "kx"
    KT = "kt"
    KXX = "kxx"
    M = "m"
    MX = "mx"
    MT = "mt"


class KernelPath(str, Enum):
    TIME_DOMAIN = "time_domain"
    TALBOT = "talbot"
    CROSS_CHECKED = "cross_checked"


class KernelDerivatives(NamedTuple):
    k: float
    kx: float
    kt: float
    kxx: float


class MassCheck(NamedTuple):
    numeric: float
    exact: float


class MomentResiduals(NamedTuple):
    damped: float
    shifted: float
    star: float


class FluxCheck(NamedTuple):
    numeric: float
    exact: float


def bessel_i0(z: float) -> float:
    if not math.isfinite(z) or z < 0:
        raise KernelDomainError(f"bessel_i0 needs a finite nonnegative z, got {z!r}.")
    value = float(special.i0(z))
    if math.isinf(value):
        raise RangeError(f"I0({z:g}) overflows double precision.")
    return value


def bessel_i1(z: float) -> float:
    if not math.isfinite(z) or z < 0:
        raise KernelDomainError(f"bessel_i1 needs a finite nonnegative z, got {z!r}.")
    value = float(special.i1(z))
    if math.isinf(value):
        raise RangeError(f"I1({z:g}) overflows double precision.")
    return value


def _root_factors(s, params: ModelParams):
    s = np.asarray(s, dtype=np.complex128)
    return np.sqrt(s), np.sqrt(s + params.a), np.sqrt(s + params.b)


def g_hat(r: float, s: LaplacePoint | complex, params: ModelParams) -> complex:
    point = s if isinstance(s, LaplacePoint) else LaplacePoint(complex(s))
    point.check(params)
    if r < 0:
        raise KernelDomainError(f"r must be nonnegative, got {r!r}.")
    root_s, root_a, root_b = _root_factors(point.s, params)
    exponent = -r * root_s * root_a / root_b
    return complex(
        np.exp(exponent) / (2.0 * math.sqrt(params.epsilon) * root_a * root_b)
    )


def k_hat(r: float, s: LaplacePoint | complex, params: ModelParams) -> complex:
    point = s if isinstance(s, LaplacePoint) else LaplacePoint(complex(s))
    if point.s == 0:
        raise KernelDomainError("k_hat is singular at s = 0.")
    return g_hat(r, point, params) / complex(np.sqrt(complex(point.s)))


_ODD_CHANNELS = (KernelChannel.KX, KernelChannel.MX)


def _channel_parts(channel: KernelChannel, s, params: ModelParams):
    """Decay rate kappa, base transform K_hat(0, s) and the channel factor.

    Even channels are ``factor * base * exp(-kappa |x|)``; odd channels are
    ``-sign(x) * kappa * factor * base * exp(-kappa |x|)``.
    """
    root_s, root_a, root_b = _root_factors(s, params)
    s = np.asarray(s, dtype=np.complex128)
    kappa = root_s * root_a / (root_b * math.sqrt(params.epsilon))
    base = 1.0 / (2.0 * math.sqrt(params.epsilon) * root_s * root_a * root_b)
    star = params.b * (s + params.a) / (s + params.b)
    factor = {
        KernelChannel.K: 1.0,
        KernelChannel.KX: 1.0,
        KernelChannel.KT: s,
        KernelChannel.KXX: kappa**2,
        KernelChannel.M: star,
        KernelChannel.MX: star,
        KernelChannel.MT: s * star,
    }[KernelChannel(channel)]
    return kappa, base, factor


def channel_hat(channel: KernelChannel | str, x, s, params: ModelParams):
    """Laplace transform of a kernel channel at signed offsets x.

    Broadcasts ``x`` against ``s``. ``kxx`` is the pointwise second
    derivative; the delta part at x = 0 is carried by the star potential.
    """
    x = np.asarray(x, dtype=float)
    kappa, base, factor = _channel_parts(channel, s, params)
    even = factor * base * np.exp(-kappa * np.abs(x))
    if KernelChannel(channel) in _ODD_CHANNELS:
        return -np.sign(x) * kappa * even
    return even


def channel_primitive_hat(channel: KernelChannel | str, x, s, params: ModelParams):
    """Transform of the x-antiderivative of a channel, vanishing at x = 0
    for even channels."""
    x = np.asarray(x, dtype=float)
    kappa, base, factor = _channel_parts(channel, s, params)
    if KernelChannel(channel) in _ODD_CHANNELS:
        return factor * base * np.exp(-kappa * np.abs(x))
    return -np.sign(x) * factor * base * np.expm1(-kappa * np.abs(x)) / kappa


def talbot_invert(
    transform: Callable[[np.ndarray], np.ndarray],
    t: float,
    nodes: int = TALBOT_NODES,
) -> np.ndarray:
    """Invert a Laplace transform at time t on the fixed Talbot contour.

    Args:
        transform (Callable): Maps an array of contour points of shape
            ``(nodes,)`` to values of shape ``(..., nodes)``
        t (float): Positive time
        nodes (int): Number of contour nodes

    Returns:
        np.ndarray: Real inverse with the leading shape of ``transform``'s output
    """
    if t <= 0:
        raise KernelDomainError(f"Talbot inversion needs t > 0, got {t!r}.")
    theta = np.arange(1, nodes) * np.pi / nodes
    cot = 1.0 / np.tan(theta)
    scale = 2.0 * nodes / (5.0 * t)
    points = np.concatenate(([scale + 0j], scale * theta * (cot + 1j)))
    sigma = theta + (theta * cot - 1.0) * cot
    weights = np.concatenate(
        ([0.5 * np.exp(scale * t) + 0j], np.exp(t * points[1:]) * (1.0 + 1j * sigma))
    )
    values = transform(points)
    return (scale / nodes) * np.real(values @ weights)


def evaluate_channel(
    channel: KernelChannel | str, x, t: float, params: ModelParams
) -> np.ndarray:
    """Talbot evaluation of a kernel channel at every offset in ``x``."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return talbot_invert(
        lambda s: channel_hat(channel, x[:, None], s[None, :], params), t
    )


def kernel_reach(t: float, params: ModelParams) -> float:
    """Offset beyond which the kernel mass at time t is negligible."""
    return params.c * t + 10.0 * math.sqrt(params.epsilon * t)


def kernel_slice(
    channel: KernelChannel | str,
    t: float,
    spacing: float,
    params: ModelParams,
    half_width: int | None = None,
) -> np.ndarray:
    """Cell-averaged kernel weights on the offsets ``l * spacing``.

    Each weight is the exact mean of the channel over its cell, taken as a
    difference of the antiderivative at the cell edges, so the discrete mass
    equals the continuous one even when the kernel is narrower than a cell.

    Args:
        channel (KernelChannel | str): Kernel channel
        t (float): Time at which the kernel is sampled
        spacing (float): Grid spacing
        params (ModelParams): Model parameters
        half_width (int | None): Number of cells on each side; defaults to
            the kernel reach

    Returns:
        np.ndarray: Weights for offsets ``-L..L``, length ``2L + 1``
    """
    if spacing <= 0:
        raise ValueError("spacing must be positive.")
    if half_width is None:
        half_width = max(1, math.ceil(kernel_reach(t, params) / spacing))
    edges = (np.arange(-half_width, half_width + 2) - 0.5) * spacing
    primitive = talbot_invert(
        lambda s: channel_primitive_hat(channel, edges[:, None], s[None, :], params),
        t,
    )
    return np.diff(primitive) / spacing


def _adaptive_quad(
    func: Callable[[float], float],
    lower: float,
    upper: float,
    quad: QuadratureSpec,
    **kwargs,
) -> float:
    result = integrate.quad(
        func,
        lower,
        upper,
        epsabs=quad.abs_tol,
        epsrel=quad.rel_tol,
        limit=quad.max_subdivisions,
        full_output=1,
        **kwargs,
    )
    value, error = result[0], result[1]
    if len(result) > 3:
        budget = max(quad.abs_tol, quad.rel_tol * abs(value))
        if error > 100.0 * budget:
            raise AccuracyError(
                f"Quadrature on [{lower:g}, {upper:g}] did not converge: "
                f"{result[3]}",
                estimate=error,
            )
        logger.debug("quad warning accepted (error=%.3e): %s", error, result[3])
    return value


def _bessel_integral(
    integrand: Callable[[float, float], float],
    r: float,
    t: float,
    params: ModelParams,
    quad: QuadratureSpec,
) -> float:
    """int_{r^2/4t}^inf integrand(w, t - r^2/4w) dw, split at its two peaks.

    For large t / r^2 most of the mass sits in a sliver of width about
    r^2 / (4 b t^2) above the lower limit, where the lag t - v is below 1/b.
    That part is integrated in the lag itself over v in [t/2, t]. The Bessel
    bulk, centred near w = (b - a) t, gets its own finite segment before the
    exponentially small tail.
    """
    scale = r * r / 4.0
    half = t / 2.0

    def near(lag: float) -> float:
        v = t - lag
        return integrand(scale / v, lag) * scale / (v * v)

    breaks = [p for p in (1.0 / params.b, 10.0 / params.b) if p < half]
    head = _adaptive_quad(near, 0.0, half, quad, points=breaks or None)

    def far(w: float) -> float:
        return integrand(w, max(t - scale / w, 0.0))

    start = scale / half
    peak = max(start, (params.b - params.a) * t)
    upper = 2.0 * peak + 50.0
    body = _adaptive_quad(
        far, start, upper, quad, points=[peak] if start < peak else None
    )
    tail = _adaptive_quad(far, upper, math.inf, quad)
    return head + body + tail


def g_time(r: float, t: float, params: ModelParams, quad: QuadratureSpec) -> float:
    """Time-domain G(r, t) from its Bessel representation.

    The substitution w = r^2 / (4 v) moves the v^(-3/2) exp(-r^2 / 4v)
    singularity to a decaying exponential on [r^2 / 4t, inf).
    """
    if r <= 0 or t <= 0:
        raise KernelDomainError(f"g_time needs r > 0 and t > 0, got r={r}, t={t}.")
    b, spread = params.b, params.b - params.a

    def integrand(w: float, lag: float) -> float:
        z = 2.0 * math.sqrt(spread * lag * w)
        return math.exp(-w - b * lag + z) * special.i0e(z) / math.sqrt(w)

    value = _bessel_integral(integrand, r, t, params, quad)
    return value / (2.0 * math.sqrt(math.pi * params.epsilon))


def g_time_reduced(r: float, t: float, params: ModelParams, quad: QuadratureSpec):
    """G for a = b, where the Bessel factor is identically one."""
    if r <= 0 or t <= 0:
        raise KernelDomainError(f"g_time needs r > 0 and t > 0, got r={r}, t={t}.")
    a = params.a

    def integrand(v: float) -> float:
        if v <= 0:
            return 0.0
        return v**-1.5 * math.exp(-r * r / (4.0 * v) - a * (t - v))

    value = _adaptive_quad(integrand, 0.0, t, quad)
    return r * value / (4.0 * math.sqrt(math.pi * params.epsilon))


def g_r_time(r: float, t: float, params: ModelParams, quad: QuadratureSpec) -> float:
    """Analytic r-derivative of G, using I0' = I1."""
    if r <= 0 or t <= 0:
        raise KernelDomainError(f"g_r_time needs r > 0 and t > 0, got r={r}, t={t}.")
    b, spread = params.b, params.b - params.a

    def integrand(w: float, lag: float) -> float:
        z = 2.0 * math.sqrt(spread * lag * w)
        bracket = (1.0 - 2.0 * w) * special.i0e(z) + z * special.i1e(z)
        return math.exp(-w - b * lag + z) * bracket / math.sqrt(w)

    value = _bessel_integral(integrand, r, t, params, quad)
    return value / (2.0 * r * math.sqrt(math.pi * params.epsilon))


def _abel(
    func: Callable[[float], float], t: float, quad: QuadratureSpec
) -> float:
    # QAWS product rule with weight (t - tau)^(-1/2)
    def integrand(tau: float) -> float:
        return func(tau) if tau > 0 else 0.0

    value = _adaptive_quad(integrand, 0.0, t, quad, weight="alg", wvar=(0.0, -0.5))
    return value / math.sqrt(math.pi)


def k_talbot(x: float, t: float, params: ModelParams) -> float:
    return float(evaluate_channel(KernelChannel.K, x, t, params)[0])


def k_time(
    x: float,
    t: float,
    params: ModelParams,
    quad: QuadratureSpec | None = None,
    r_switch: float = 1e-3,
) -> float:
    if t <= 0:
        raise KernelDomainError(f"k_time needs t > 0, got {t!r}.")
    quad = quad or QuadratureSpec()
    r = float(params.scaled_offset(x))
    if r < r_switch:
        return k_talbot(x, t, params)
    g = g_time_reduced if params.degenerate else g_time
    return _abel(lambda tau: g(r, tau, params, quad), t, quad)


def kx_time(
    x: float,
    t: float,
    params: ModelParams,
    quad: QuadratureSpec | None = None,
    r_switch: float = 1e-3,
) -> float:
    if t <= 0:
        raise KernelDomainError(f"kx_time needs t > 0, got {t!r}.")
    if x == 0:
        raise KernelDomainError(
            "The time-domain x-derivative is undefined at x = 0; "
            "use flux_limit for the one-sided limit."
        )
    quad = quad or QuadratureSpec()
    r = float(params.scaled_offset(x))
    if r < r_switch:
        return float(evaluate_channel(KernelChannel.KX, x, t, params)[0])
    dk_dr = _abel(lambda tau: g_r_time(r, tau, params, quad), t, quad)
    return math.copysign(1.0, x) * dk_dr / math.sqrt(params.epsilon)


def k_derivatives(
    x: float,
    t: float,
    params: ModelParams,
    quad: QuadratureSpec | None = None,
    r_switch: float = 1e-3,
) -> KernelDerivatives:
    """K, dK/dx, dK/dt and the pointwise d2K/dx2 at (x, t).

    K and dK/dx come from the time-domain path; the time and second space
    derivatives are Talbot inversions of s K_hat and kappa^2 K_hat, which is
    exact because K(x, 0+) = 0.
    """
    k = k_time(x, t, params, quad, r_switch)
    kx = kx_time(x, t, params, quad, r_switch)
    kt, kxx = (
        float(evaluate_channel(channel, x, t, params)[0])
        for channel in (KernelChannel.KT, KernelChannel.KXX)
    )
    return KernelDerivatives(k=k, kx=kx, kt=kt, kxx=kxx)


def _line_integral(
    channel: KernelChannel, t: float, params: ModelParams, quad: QuadratureSpec
) -> float:
    outer = quad.relaxed(rel_tol=1e-9, abs_tol=1e-12)
    reach = kernel_reach(t, params)
    value = _adaptive_quad(
        lambda y: float(evaluate_channel(channel, y, t, params)[0]),
        0.0,
        reach,
        outer,
    )
    return 2.0 * value


def verify_mass(
    t: float, params: ModelParams, quad: QuadratureSpec | None = None
) -> MassCheck:
    if t <= 0:
        raise KernelDomainError(f"verify_mass needs t > 0, got {t!r}.")
    quad = quad or QuadratureSpec()
    numeric = _line_integral(KernelChannel.K, t, params, quad)
    exact = -math.expm1(-params.a * t) / params.a
    return MassCheck(numeric=numeric, exact=exact)


def verify_moment_identities(
    t: float, params: ModelParams, quad: QuadratureSpec | None = None
) -> MomentResiduals:
    """Residuals of the three line-integral identities of K at time t.

    * int (dt + a) K dx = 1
    * int (dt + b) K dx = exp(-a t) + b (1 - exp(-a t)) / a
    * int (dt + a - eps dxx) K dx = 1 - exp(-b t)
    """
    if t <= 0:
        raise KernelDomainError(f"verify_moment_identities needs t > 0, got {t!r}.")
    quad = quad or QuadratureSpec()
    a, b = params.a, params.b
    mass = _line_integral(KernelChannel.K, t, params, quad)
    rate = _line_integral(KernelChannel.KT, t, params, quad)
    star = _line_integral(KernelChannel.M, t, params, quad)
    decay = math.exp(-a * t)
    return MomentResiduals(
        damped=rate + a * mass - 1.0,
        shifted=rate + b * mass - (decay + b * (1.0 - decay) / a),
        star=star + math.expm1(-b * t),
    )


def verify_laplace(
    r: float,
    s_samples: list[LaplacePoint | complex],
    params: ModelParams,
    quad: QuadratureSpec | None = None,
    tail_tolerance: float = 1e-10,
) -> float:
    """Worst relative error between the Laplace integral of G and G_hat.

    The time integral is truncated at T where the certified tail bound
    exp(-sigma T / 2) G_hat(r, sigma / 2) drops below ``tail_tolerance``
    times |G_hat(r, s)|; the bound holds because G is nonnegative.
    """
    quad = quad or QuadratureSpec()
    outer = quad.relaxed(rel_tol=1e-9, abs_tol=1e-13)
    g = g_time_reduced if params.degenerate else g_time
    worst = 0.0
    for sample in s_samples:
        point = sample if isinstance(sample, LaplacePoint) else LaplacePoint(sample)
        point.check(params)
        sigma, omega = complex(point.s).real, complex(point.s).imag
        if sigma <= 0:
            raise KernelDomainError(
                f"The time-domain Laplace integral of G needs Re(s) > 0, got {point.s}."
            )
        exact = g_hat(r, point, params)
        envelope = g_hat(r, sigma / 2.0, params).real
        horizon = 2.0 / sigma * math.log(envelope / (tail_tolerance * abs(exact)))
        horizon = max(horizon, 1.0)

        def damped(t: float) -> float:
            return math.exp(-sigma * t) * g(r, t, params, quad) if t > 0 else 0.0

        if omega == 0:
            real, imag = _adaptive_quad(damped, 0.0, horizon, outer), 0.0
        else:
            real = _adaptive_quad(damped, 0.0, horizon, outer, weight="cos", wvar=omega)
            imag = -_adaptive_quad(
                damped, 0.0, horizon, outer, weight="sin", wvar=omega
            )
        error = abs(complex(real, imag) - exact) / abs(exact)
        logger.debug("Laplace check r=%g s=%s: rel error %.3e", r, point.s, error)
        worst = max(worst, error)
    return worst


def flux_limit(t: float, params: ModelParams, offset: float = 1e-3) -> FluxCheck:
    """One-sided d|x| K at x -> 0+ against -exp(-b t) / (2 eps).

    The derivative is sampled at |x| = h and 2h, h = offset * sqrt(eps), and
    combined as 2 D(h) - D(2h) to cancel the curvature term.
    """
    if t <= 0:
        raise KernelDomainError(f"flux_limit needs t > 0, got {t!r}.")
    h = offset * math.sqrt(params.epsilon)
    near, far = evaluate_channel(KernelChannel.KX, [h, 2.0 * h], t, params)
    exact = -math.exp(-params.b * t) / (2.0 * params.epsilon)
    return FluxCheck(numeric=float(2.0 * near - far), exact=exact)


def transform_amplification(
    t: float, params: ModelParams, samples: int = 2001
) -> tuple[float, float]:
    """Measured int_0^t int |dK/dx| dx dsigma and the bound t / (a sqrt(eps (b-a))).

    Returns:
        tuple[float, float]: (measured, bound)
    """
    if params.a >= params.b:
        raise KernelDomainError("transform_amplification needs a < b.")

    def spatial(sigma: float) -> float:
        if sigma <= 0:
            return 0.0
        y = np.linspace(0.0, kernel_reach(sigma, params), samples)
        values = np.abs(evaluate_channel(KernelChannel.KX, y, sigma, params))
        return 2.0 * float(integrate.simpson(values, x=y))

    measured = _adaptive_quad(spatial, 0.0, t, QuadratureSpec(1e-6, 1e-10))
    bound = t / (params.a * math.sqrt(params.epsilon * (params.b - params.a)))
    return measured, bound


@dataclass(frozen=True)
class KernelEvaluator:
    params: ModelParams
    quad: QuadratureSpec = field(default_factory=QuadratureSpec)
    r_switch: float = 1e-3
    path: KernelPath = KernelPath.TALBOT

    def __post_init__(self):
        if self.r_switch <= 0:
            raise ValueError("r_switch must be positive.")
        object.__setattr__(self, "path", KernelPath(self.path))

    def _agreement(self) -> float:
        return 100.0 * self.quad.rel_tol

    def _cross_check(self, name: str, x: float, t: float, slow: float, fast: float):
        scale = max(abs(slow), abs(fast), self.quad.abs_tol)
        if abs(slow - fast) > max(self._agreement() * scale, self.quad.abs_tol):
            raise AccuracyError(
                f"Time-domain and Talbot {name} disagree at x={x:g}, t={t:g}: "
                f"{slow!r} vs {fast!r}",
                estimate=abs(slow - fast),
            )

    def k(self, x: float, t: float) -> float:
        if self.path is KernelPath.TALBOT:
            return k_talbot(x, t, self.params)
        slow = k_time(x, t, self.params, self.quad, self.r_switch)
        if self.path is KernelPath.CROSS_CHECKED:
            self._cross_check("K", x, t, slow, k_talbot(x, t, self.params))
        return slow

    def derivatives(self, x: float, t: float) -> KernelDerivatives:
        fast = KernelDerivatives(
            *(
                float(evaluate_channel(channel, x, t, self.params)[0])
                for channel in (
                    KernelChannel.K,
                    KernelChannel.KX,
                    KernelChannel.KT,
                    KernelChannel.KXX,
                )
            )
        )
        if self.path is KernelPath.TALBOT:
            return fast
        slow = k_derivatives(x, t, self.params, self.quad, self.r_switch)
        if self.path is KernelPath.CROSS_CHECKED:
            self._cross_check("K", x, t, slow.k, fast.k)
            self._cross_check("dK/dx", x, t, slow.kx, fast.kx)
        return slow

    def channel(self, channel: KernelChannel | str, x, t: float) -> np.ndarray:
        return evaluate_channel(channel, x, t, self.params)
