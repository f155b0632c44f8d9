"""Shared numerical kernels: differentiation, quadrature, ODE integration."""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy.integrate import quad as _scipy_quad, solve_ivp

from .dual import Dual, eps, real, seed

DEFAULT_FD_STEP = 1e-6
DEFAULT_QUAD_TOL = 1e-10
DEFAULT_ODE_TOL = 1e-10


class DomainError(ValueError):
    pass


class IntegrationError(RuntimeError):
    pass


@dataclass(frozen=True)
class ScalarField:
    """Evaluable map from a coordinate vector to a real scalar."""

    fn: callable
    arity: int
    order: int = 2
    supports_dual: bool = True

    def __call__(self, x):
        return self.fn(x)


@dataclass(frozen=True)
class VectorField:
    fn: callable
    arity: int
    dim: int
    order: int = 2
    supports_dual: bool = True

    def __call__(self, x):
        return self.fn(x)


@dataclass(frozen=True)
class MatrixField:
    fn: callable
    arity: int
    shape: tuple
    order: int = 2
    supports_dual: bool = True

    def __call__(self, x):
        return self.fn(x)


def _dual_ok(f):
    return getattr(f, "supports_dual", True)


def partial(f, x, i, h=DEFAULT_FD_STEP):
    """First partial derivative of a scalar-valued field at x."""
    if i >= len(x):
        raise DomainError(f"index {i} out of range for arity {len(x)}")
    if _dual_ok(f):
        return eps(f(seed(x, i)))
    step = h * max(1.0, abs(x[i]))
    xp, xm = list(x), list(x)
    xp[i] += step
    xm[i] -= step
    return (f(xp) - f(xm)) / (2.0 * step)


def second_partial(f, x, i, j, h=DEFAULT_FD_STEP):
    """Second partial derivative of a scalar-valued field at x."""
    if _dual_ok(f):
        xs = [Dual(Dual(c, 0.0), 0.0) for c in x]
        if i == j:
            xs[i] = Dual(Dual(x[i], 1.0), 1.0)
        else:
            xs[i] = Dual(Dual(x[i], 1.0), 0.0)
            xs[j] = Dual(Dual(x[j], 0.0), 1.0)
        return eps(eps(f(xs)))
    step_j = (h ** 0.5) * max(1.0, abs(x[j]))
    xp, xm = list(x), list(x)
    xp[j] += step_j
    xm[j] -= step_j
    return (partial(f, xp, i, h) - partial(f, xm, i, h)) / (2.0 * step_j)


def gradient(f, x, h=DEFAULT_FD_STEP):
    return [partial(f, x, i, h) for i in range(len(x))]


def vector_partial(f, x, i, h=DEFAULT_FD_STEP):
    """Partial derivative of a vector-valued field: returns a list."""
    if _dual_ok(f):
        return [eps(c) for c in f(seed(x, i))]
    step = h * max(1.0, abs(x[i]))
    xp, xm = list(x), list(x)
    xp[i] += step
    xm[i] -= step
    fp, fm = f(xp), f(xm)
    return [(a - b) / (2.0 * step) for a, b in zip(fp, fm)]


def jacobian(f, x, h=DEFAULT_FD_STEP):
    """Jacobian of a vector field as rows-of-components [a][i] = df^a/dx^i."""
    cols = [vector_partial(f, x, i, h) for i in range(len(x))]
    return [list(row) for row in zip(*cols)]


def matrix_partial(f, x, i, h=DEFAULT_FD_STEP):
    """Partial derivative of a matrix-valued field: nested list."""
    if _dual_ok(f):
        return [[eps(v) for v in row] for row in f(seed(x, i))]
    step = h * max(1.0, abs(x[i]))
    xp, xm = list(x), list(x)
    xp[i] += step
    xm[i] -= step
    fp, fm = f(xp), f(xm)
    return [[(a - b) / (2.0 * step) for a, b in zip(rp, rm)]
            for rp, rm in zip(fp, fm)]


def quad(f, a, b, tol=DEFAULT_QUAD_TOL):
    """Adaptive quadrature of ``f`` over [a, b] with absolute tolerance tol."""
    if a == b:
        return 0.0
    val, err = _scipy_quad(f, a, b, epsabs=tol, epsrel=tol, limit=200)
    if err > max(100.0 * tol, 1e-8 * abs(val)) and err > 1e-7:
        raise IntegrationError(f"quadrature did not converge: err={err:g}")
    return val


@dataclass(frozen=True)
class CurveSampler:
    """Piecewise-smooth curve t -> (point, velocity) in chart coordinates."""

    fn: callable
    t_start: float
    t_end: float
    breakpoints: tuple = ()
    supports_dual: bool = True

    def __call__(self, t):
        return self.fn(t)

    def point(self, t):
        return self.fn(t)[0]

    def velocity(self, t):
        return self.fn(t)[1]


def line_segment(p, q, t_start=0.0, t_end=1.0):
    """Straight segment from p to q, affine in t."""
    p = [float(c) for c in p]
    q = [float(c) for c in q]
    dt = t_end - t_start
    vel = [(b - a) / dt for a, b in zip(p, q)]

    def fn(t):
        s = (t - t_start) / dt
        return ([a + s * (b - a) for a, b in zip(p, q)], list(vel))

    return CurveSampler(fn, t_start, t_end)


class Trajectory:
    """Dense ODE solution with interpolation at arbitrary times."""

    def __init__(self, times, states, interpolant=None, diagnostics=None):
        self.times = np.asarray(times, dtype=float)
        self.states = np.asarray(states, dtype=float)
        self._interp = interpolant
        self.diagnostics = diagnostics if diagnostics is not None else {}

    @property
    def t_end(self):
        return float(self.times[-1])

    @property
    def end_state(self):
        return self.states[-1].copy()

    def at(self, t):
        return np.asarray(self._interp(t), dtype=float)


class GuardViolation(RuntimeError):
    def __init__(self, t, state):
        super().__init__(f"guard region left at t={t:g}")
        self.t = t
        self.state = state


def integrate_ode(rhs, t0, x0, t1, method="rk45", tol=DEFAULT_ODE_TOL,
                  max_step=np.inf, step=1e-3, guard=None, dense_points=None):
    """Integrate ``x' = rhs(t, x)`` from t0 to t1.

    method "rk45" is adaptive (scipy RK45/DOP853 class solver at tolerance
    ``tol``); "rk4" is fixed-step classical RK4 with step ``step`` and cubic
    Hermite interpolation between nodes (bit-stable goldens).
    ``guard(state) -> float`` must stay positive; crossing zero aborts.
    """
    x0 = np.asarray(x0, dtype=float)
    if t1 == t0:
        traj = Trajectory([t0], [x0], interpolant=lambda t: x0)
        return traj
    if method == "rk45":
        events = None
        if guard is not None:
            def g_event(t, y):
                return guard(y)
            g_event.terminal = True
            g_event.direction = -1
            events = [g_event]
        sol = solve_ivp(rhs, (t0, t1), x0, method="RK45", rtol=tol,
                        atol=tol, max_step=max_step, dense_output=True,
                        events=events, t_eval=dense_points)
        if events and sol.t_events[0].size:
            raise GuardViolation(sol.t_events[0][0], sol.y_events[0][0])
        if not sol.success:
            raise IntegrationError(sol.message)
        return Trajectory(sol.t, sol.y.T, interpolant=sol.sol)
    if method != "rk4":
        raise ValueError(f"unknown integration method {method!r}")

    n = max(1, int(math.ceil(abs(t1 - t0) / step)))
    h = (t1 - t0) / n
    ts = [t0]
    xs = [x0]
    ks = [np.asarray(rhs(t0, x0), dtype=float)]
    t, x = t0, x0
    for _ in range(n):
        k1 = np.asarray(rhs(t, x), dtype=float)
        k2 = np.asarray(rhs(t + h / 2, x + h / 2 * k1), dtype=float)
        k3 = np.asarray(rhs(t + h / 2, x + h / 2 * k2), dtype=float)
        k4 = np.asarray(rhs(t + h, x + h * k3), dtype=float)
        x = x + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        t = t + h
        if guard is not None and guard(x) <= 0.0:
            raise GuardViolation(t, x)
        ts.append(t)
        xs.append(x)
        ks.append(np.asarray(rhs(t, x), dtype=float))
    ts_arr = np.asarray(ts)
    xs_arr = np.asarray(xs)
    ks_arr = np.asarray(ks)

    def interp(tq):
        tq = float(tq)
        i = int(np.clip(np.searchsorted(ts_arr, tq) - 1, 0, n - 1)) \
            if h > 0 else int(np.clip(np.searchsorted(-ts_arr, -tq) - 1, 0, n - 1))
        s = (tq - ts_arr[i]) / h
        x0_, x1_ = xs_arr[i], xs_arr[i + 1]
        d0, d1 = ks_arr[i] * h, ks_arr[i + 1] * h
        h00 = 2 * s ** 3 - 3 * s ** 2 + 1
        h10 = s ** 3 - 2 * s ** 2 + s
        h01 = -2 * s ** 3 + 3 * s ** 2
        h11 = s ** 3 - s ** 2
        return h00 * x0_ + h10 * d0 + h01 * x1_ + h11 * d1

    return Trajectory(ts_arr, xs_arr, interpolant=interp)


def transport_along(gamma_fn, t0, t1, rhs_matrix, v0, tol=DEFAULT_ODE_TOL):
    """Integrate a linear time-varying system v' = A(t) v from t0 to t1."""
    def rhs(t, v):
        return rhs_matrix(t) @ v

    traj = integrate_ode(rhs, t0, np.asarray(v0, dtype=float), t1, tol=tol)
    return traj.end_state
