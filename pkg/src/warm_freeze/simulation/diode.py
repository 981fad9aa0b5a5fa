"""Single-diode PV module model and maximum-power-point solver.

The module current at terminal voltage V solves the implicit five-parameter
equation

    I = I_ph - I_0 * (exp((V + I*R_s) / a) - 1) - (V + I*R_s) / R_sh,
    a = n * N_s * k * T / q

which is solved with vectorised Newton iterations (scipy). The maximum power
point is found by golden-section search of P(V) = V * I(V) on
[0, v_oc_approx]. Every routine works elementwise on arrays so a whole
300-sample trace is solved in one pass.
"""

import logging
import math
from dataclasses import asdict, dataclass
from typing import Callable, Tuple

import numpy as np
from scipy import optimize

from warm_freeze.config.models import DiodeParamsConfig
from warm_freeze.exceptions import ConvergenceError, SimulationError

logger = logging.getLogger(__name__)

BOLTZMANN = 1.380649e-23  # J/K
ELECTRON_CHARGE = 1.602176634e-19  # C
T_REF_K = 298.15
G_REF = 1000.0  # W/m²
BAND_GAP_EV = 1.12  # silicon
ALPHA_ISC = 0.0032  # A/K, short-circuit current temperature coefficient

NEWTON_TOL = 1e-12
NEWTON_MAXITER = 100
GOLDEN_REL_TOL = 1e-10
_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class DiodeParams:
    """Module parameters at standard test conditions."""

    i_ph_stc: float
    i_0: float
    n: float
    r_s: float
    r_sh: float
    n_cells: int
    v_oc_approx: float

    def __post_init__(self) -> None:
        values = asdict(self)
        for name, value in values.items():
            if not value > 0:
                raise SimulationError(f"Diode parameter {name} must be positive, got {value}")
        if not 1.0 <= self.n <= 2.0:
            raise SimulationError(f"Ideality factor must be in [1, 2], got {self.n}")
        if self.r_sh <= self.r_s:
            raise SimulationError(f"r_sh ({self.r_sh}) must exceed r_s ({self.r_s})")

    @classmethod
    def from_config(cls, config: DiodeParamsConfig) -> "DiodeParams":
        """Build from the validated configuration section."""
        return cls(**config.model_dump())


def _operating_point(
    params: DiodeParams, g: np.ndarray, t: np.ndarray
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Photocurrent, saturation current and modified ideality at (G, T)."""
    t_k = t + 273.15
    i_ph = np.maximum(g / G_REF * (params.i_ph_stc + ALPHA_ISC * (t - 25.0)), 0.0)
    exponent = ELECTRON_CHARGE * BAND_GAP_EV / (params.n * BOLTZMANN) * (1.0 / T_REF_K - 1.0 / t_k)
    i_0 = params.i_0 * (t_k / T_REF_K) ** 3 * np.exp(exponent)
    a = params.n * params.n_cells * BOLTZMANN * t_k / ELECTRON_CHARGE
    return i_ph, i_0, a


def module_current(
    params: DiodeParams, v: np.ndarray, g: np.ndarray, t: np.ndarray
) -> np.ndarray:
    """Solve the implicit single-diode equation for I at each (V, G, T).

    Args:
        params: Module parameters
        v: Terminal voltages (V)
        g: Irradiance (W/m²), broadcastable with v
        t: Cell temperature (°C), broadcastable with v

    Returns:
        Module current (A), same shape as the broadcast inputs

    Raises:
        ConvergenceError: If Newton iterations fail or produce non-finite values
    """
    v, g, t = np.broadcast_arrays(
        np.asarray(v, dtype=np.float64),
        np.asarray(g, dtype=np.float64),
        np.asarray(t, dtype=np.float64),
    )
    i_ph, i_0, a = _operating_point(params, g, t)

    def residual(i: np.ndarray) -> np.ndarray:
        vd = v + i * params.r_s
        return i_ph - i_0 * np.expm1(vd / a) - vd / params.r_sh - i

    def slope(i: np.ndarray) -> np.ndarray:
        vd = v + i * params.r_s
        return -i_0 * params.r_s / a * np.exp(vd / a) - params.r_s / params.r_sh - 1.0

    # Starting at I_ph keeps the iterates on the concave side of the root, so
    # Newton converges monotonically.
    x0 = np.array(i_ph, dtype=np.float64, copy=True).reshape(-1)
    try:
        if x0.size == 1:
            # scipy takes the scalar path for single-element starts
            root = optimize.newton(
                lambda i: float(residual(np.full(v.shape, i)).flat[0]),
                float(x0[0]),
                fprime=lambda i: float(slope(np.full(v.shape, i)).flat[0]),
                tol=NEWTON_TOL,
                maxiter=NEWTON_MAXITER,
            )
        else:
            root = optimize.newton(
                lambda i: residual(i.reshape(v.shape)).ravel(),
                x0,
                fprime=lambda i: slope(i.reshape(v.shape)).ravel(),
                tol=NEWTON_TOL,
                maxiter=NEWTON_MAXITER,
            )
    except RuntimeError as e:
        raise ConvergenceError(
            f"Single-diode current solve failed: {e}", float(g.flat[0]), float(t.flat[0])
        ) from e

    current = np.asarray(root, dtype=np.float64).reshape(v.shape)
    if not np.all(np.isfinite(current)):
        bad = int(np.flatnonzero(~np.isfinite(current))[0])
        raise ConvergenceError(
            "Single-diode current solve produced non-finite values",
            float(g.flat[bad]),
            float(t.flat[bad]),
        )
    return current


def module_power(params: DiodeParams, v: np.ndarray, g: np.ndarray, t: np.ndarray) -> np.ndarray:
    """P(V) = V * I(V) at each operating condition."""
    return np.asarray(v, dtype=np.float64) * module_current(params, v, g, t)


def _golden_section_max(
    fn: Callable[[np.ndarray], np.ndarray], lo: np.ndarray, hi: np.ndarray, tol: float
) -> np.ndarray:
    """Elementwise golden-section maximisation of a unimodal function on [lo, hi]."""
    a = lo.astype(np.float64).copy()
    b = hi.astype(np.float64).copy()
    width = float(np.max(b - a))
    iterations = max(1, math.ceil(math.log(tol / width) / math.log(_INV_PHI))) if width > 0 else 0
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc = fn(c)
    fd = fn(d)
    for _ in range(iterations):
        left = fc > fd
        a = np.where(left, a, c)
        b = np.where(left, d, b)
        new_c = np.where(left, b - _INV_PHI * (b - a), d)
        new_d = np.where(left, c, a + _INV_PHI * (b - a))
        probe = np.where(left, new_c, new_d)
        f_probe = fn(probe)
        fc, fd = np.where(left, f_probe, fd), np.where(left, fc, f_probe)
        c, d = new_c, new_d
    return (a + b) / 2.0


def solve_mpp_array(
    params: DiodeParams, g: np.ndarray, t: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    """Maximum power point for every (G, T) pair.

    Args:
        params: Module parameters
        g: Irradiance array (W/m²), all >= 0
        t: Temperature array (°C), same shape as g

    Returns:
        Tuple of (v_mp, p_mp) arrays; v_mp in [0, v_oc_approx], p_mp >= 0

    Raises:
        SimulationError: If any irradiance is negative
        ConvergenceError: If the current solve fails
    """
    g = np.asarray(g, dtype=np.float64)
    t = np.asarray(t, dtype=np.float64)
    if np.any(g < 0):
        raise SimulationError("Irradiance must be non-negative")

    lit = g > 0
    v_mp = np.zeros_like(g)
    p_mp = np.zeros_like(g)
    if not np.any(lit):
        return v_mp, p_mp

    g_lit = g[lit]
    t_lit = t[lit]
    lo = np.zeros_like(g_lit)
    hi = np.full_like(g_lit, params.v_oc_approx)
    v_best = _golden_section_max(
        lambda v: module_power(params, v, g_lit, t_lit),
        lo,
        hi,
        GOLDEN_REL_TOL * params.v_oc_approx,
    )
    p_best = module_power(params, v_best, g_lit, t_lit)
    v_mp[lit] = v_best
    p_mp[lit] = np.maximum(p_best, 0.0)
    return v_mp, p_mp


def solve_mpp(params: DiodeParams, g: float, t: float) -> Tuple[float, float]:
    """Maximum power point at a single operating condition.

    Args:
        params: Module parameters
        g: Irradiance (W/m²)
        t: Cell temperature (°C)

    Returns:
        Tuple of (v_mp in volts, p_mp in watts)

    Raises:
        ConvergenceError: Carrying (g, t) when the implicit solve fails
    """
    v_mp, p_mp = solve_mpp_array(params, np.array([g]), np.array([t]))
    logger.debug("MPP at g=%.1f t=%.1f: v=%.4f p=%.4f", g, t, v_mp[0], p_mp[0])
    return float(v_mp[0]), float(p_mp[0])
