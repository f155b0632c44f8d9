"""Control-theoretic core: regularity, projection, induced connection,
constrained dynamics, and constraint-enforcing feedback."""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from . import linalg
from .calculus import jacobian, vector_partial, gradient, second_partial
from .dual import real
from .manifold import (Chart, ConnectionCoeffs, christoffel_from_metric,
                       connection_from_metric)


class RegularityError(RuntimeError):
    """The matrix (Bperp D dphi) is singular: the VHC is not regular there."""


@dataclass(frozen=True)
class LagrangianControlSystem:
    """Mechanical control system D(q) qdd + C(q,qd) qd + gradP(q) = B(q) tau."""

    chart: Chart
    D: callable                 # inertia matrix field, n x n
    P: callable                 # potential
    gradP: callable             # gradient of P, n components
    B: callable                 # input matrix field, n x m
    Bperp: callable             # left annihilator field, (n-m) x n
    m: int
    h: callable = None          # optional constraint function, m components
    christoffels: ConnectionCoeffs = None   # optional analytic shortcut

    @property
    def n(self):
        return self.chart.dim

    def connection(self):
        if self.christoffels is not None:
            return self.christoffels
        return connection_from_metric(self.chart, self.D)

    def gamma(self, x):
        return self.connection()(x)

    def full_rhs(self, q, qdot, tau):
        """Acceleration qdd for the full system under input tau."""
        n = self.n
        G = self.gamma(list(q))
        quad = [sum(G[k][i][j] * qdot[i] * qdot[j]
                    for i in range(n) for j in range(n)) for k in range(n)]
        D = np.asarray(self.D(list(q)), dtype=float)
        forcing = np.asarray(linalg.mat_vec(self.B(list(q)), list(tau)), dtype=float) \
            if self.m > 0 else np.zeros(n)
        rhs = forcing - np.asarray(self.gradP(list(q)), dtype=float)
        return np.linalg.solve(D, rhs) - np.asarray(quad)


@dataclass(frozen=True)
class ConstraintParametrization:
    """Regular parametrization phi of the constraint manifold."""

    chart: Chart                # reduced chart, dim n - m
    phi: callable               # theta -> x, n components
    dphi: callable = None       # n x (n-m)
    d2phi: callable = None      # [a][i][j]

    def __post_init__(self):
        if self.dphi is None:
            phi = self.phi
            object.__setattr__(
                self, "dphi",
                lambda th: [list(row) for row in
                            zip(*[vector_partial(phi, list(th), i)
                                  for i in range(len(th))])])
        if self.d2phi is None:
            object.__setattr__(self, "d2phi", _second_jacobian(self.phi))


def _second_jacobian(phi):
    from .dual import Dual, eps

    def d2(th):
        th = list(th)
        d = len(th)
        probe = phi(th)
        n = len(probe)
        out = [[[0.0] * d for _ in range(d)] for _ in range(n)]
        for i in range(d):
            for j in range(i, d):
                xs = [Dual(Dual(c, 0.0), 0.0) for c in th]
                if i == j:
                    xs[i] = Dual(Dual(th[i], 1.0), 1.0)
                else:
                    xs[i] = Dual(Dual(th[i], 1.0), 0.0)
                    xs[j] = Dual(Dual(th[j], 0.0), 1.0)
                vals = phi(xs)
                for a in range(n):
                    v = eps(eps(vals[a]))
                    out[a][i][j] = v
                    out[a][j][i] = v
        return out

    return d2


def reduction_matrix(sys, par, theta):
    """T(theta) = (Bperp D dphi)^{-1} Bperp D at x = phi(theta)."""
    x = par.phi(list(theta))
    D = sys.D(x)
    Bp = sys.Bperp(x)
    dphi = par.dphi(list(theta))
    BpD = linalg.mat_mul(Bp, D)
    A = linalg.mat_mul(BpD, dphi)
    try:
        return linalg.solve(A, BpD)
    except linalg.SingularMatrixError as e:
        raise RegularityError(
            f"(Bperp D dphi) singular at theta={[real(t) for t in theta]}") from e


@dataclass
class RegularityReport:
    regular: bool
    min_singular_value: float
    worst_theta: list
    tol: float

    def __bool__(self):
        return self.regular


def check_regularity(sys, par, grid=None, tol=1e-8):
    """Smallest scaled singular value of [dphi | D^{-1} B] over a grid."""
    if grid is None:
        grid = par.chart.grid()
    best = np.inf
    worst = None
    for th in grid:
        x = par.phi(list(th))
        D = np.asarray(sys.D(x), dtype=float)
        B = np.asarray(sys.B(x), dtype=float)
        dphi = np.asarray(par.dphi(list(th)), dtype=float)
        M = np.hstack([dphi, np.linalg.solve(D, B)])
        if M.shape[0] != M.shape[1]:
            raise ValueError("dimension mismatch: need k = m = n - dim(theta)")
        sv = np.linalg.svd(M, compute_uv=False)
        margin = sv[-1] / sv[0]
        if margin < best:
            best = margin
            worst = list(th)
    return RegularityReport(bool(best > tol), float(best), worst, tol)


def projection_sigma(sys, par, theta, v):
    """Reduced coordinates w of the projection of ambient tangent vector v."""
    T = reduction_matrix(sys, par, theta)
    return linalg.mat_vec(T, list(v))


def induced_christoffels(sys, par, theta):
    """Christoffels of the induced connection on the reduced chart.

    GammaC[k][i][j] = sum_a T[k][a] * (d2phi^a_ij + dphi_i^T Gamma^a dphi_j).
    """
    theta = list(theta)
    x = par.phi(theta)
    T = reduction_matrix(sys, par, theta)
    dphi = par.dphi(theta)
    d2phi = par.d2phi(theta)
    G = sys.gamma(x)
    n = sys.n
    d = len(theta)
    out = [[[0.0] * d for _ in range(d)] for _ in range(d)]
    for i in range(d):
        for j in range(i, d):
            col = []
            for a in range(n):
                s = d2phi[a][i][j]
                for b in range(n):
                    for c in range(n):
                        s = s + G[a][b][c] * dphi[b][i] * dphi[c][j]
                col.append(s)
            for k in range(d):
                v = sum(T[k][a] * col[a] for a in range(n))
                out[k][i][j] = v
                out[k][j][i] = v
    return out


def reduced_potential(sys, par, theta):
    """lambda(theta) = (Bperp D dphi)^{-1} Bperp gradP at x = phi(theta)."""
    theta = list(theta)
    x = par.phi(theta)
    Bp = sys.Bperp(x)
    BpD = linalg.mat_mul(Bp, sys.D(x))
    A = linalg.mat_mul(BpD, par.dphi(theta))
    rhs = linalg.mat_vec(Bp, sys.gradP(x))
    try:
        return linalg.solve(A, rhs)
    except linalg.SingularMatrixError as e:
        raise RegularityError(
            f"(Bperp D dphi) singular at theta={[real(t) for t in theta]}") from e


@dataclass(frozen=True)
class InducedConnection:
    chart: Chart
    gammaC: ConnectionCoeffs
    lam: callable               # reduced potential field


def induced_connection(sys, par):
    """Bundle the induced Christoffels and reduced potential as fields."""
    gammaC = ConnectionCoeffs(par.chart,
                              lambda th: induced_christoffels(sys, par, th))
    return InducedConnection(par.chart, gammaC,
                             lambda th: reduced_potential(sys, par, th))


def constrained_rhs(sys, par, state):
    """Reduced accelerations: thdd^k = -GammaC^k_ij thd^i thd^j - lambda^k.

    Contracted form: thdd = -A^{-1} (Bperp D c + Bperp gradP) with A the
    reduction system matrix and c the ambient acceleration of the lifted
    curve, so only one d x d solve is needed per evaluation.
    """
    d = par.chart.dim
    theta, thdot = list(state[:d]), list(state[d:])
    x = par.phi(theta)
    dphi = par.dphi(theta)
    d2phi = par.d2phi(theta)
    D = sys.D(x)
    Bp = sys.Bperp(x)
    BpD = linalg.mat_mul(Bp, D)
    A = linalg.mat_mul(BpD, dphi)
    G = sys.gamma(x)
    n = sys.n
    u = [sum(dphi[a][i] * thdot[i] for i in range(d)) for a in range(n)]
    c = []
    for a in range(n):
        s = 0.0
        for i in range(d):
            for j in range(d):
                s = s + d2phi[a][i][j] * thdot[i] * thdot[j]
        for b in range(n):
            for e in range(n):
                s = s + G[a][b][e] * u[b] * u[e]
        c.append(s)
    gradP = sys.gradP(x)
    w = [sum(BpD[k][a] * c[a] for a in range(n))
         + sum(Bp[k][a] * gradP[a] for a in range(n)) for k in range(d)]
    try:
        sol = linalg.solve(A, w)
    except linalg.SingularMatrixError as e:
        raise RegularityError(
            f"(Bperp D dphi) singular at theta={[real(t) for t in theta]}"
        ) from e
    return [-v for v in sol]


def psi_functions(sys, par, theta):
    """(Psi1, Psi2) of the scalar constrained dynamics thdd = Psi1 + Psi2 thd^2."""
    if par.chart.dim != 1:
        raise ValueError("psi_functions requires degree of underactuation 1")
    theta = list(theta)
    x = par.phi(theta)
    Bp = sys.Bperp(x)[0]
    D = sys.D(x)
    dphi = [row[0] for row in par.dphi(theta)]
    d2phi = [mat[0][0] for mat in par.d2phi(theta)]
    G = sys.gamma(x)
    n = sys.n
    BpD = [sum(Bp[i] * D[i][a] for i in range(n)) for a in range(n)]
    den = sum(BpD[a] * dphi[a] for a in range(n))
    if abs(real(den)) < 1e-14:
        raise RegularityError("Bperp D phi' vanished")
    num2 = sum(BpD[a] * d2phi[a] for a in range(n))
    for a in range(n):
        num2 = num2 + BpD[a] * sum(G[a][b][c] * dphi[b] * dphi[c]
                                   for b in range(n) for c in range(n))
    gp = sys.gradP(x)
    num1 = sum(Bp[i] * gp[i] for i in range(n))
    return (-num1 / den, -num2 / den)


def stabilizing_feedback(sys, q, qdot, gains=(0.0, 0.0)):
    """Input-output linearizing feedback for the output e = h(q).

    Returns tau solving  hdd = -Kp h - Kd hd  along the closed loop. With
    gains (0, 0) and an on-constraint state this is the unique feedback
    rendering the constraint manifold invariant.
    """
    if sys.h is None:
        raise ValueError("system has no constraint function h")
    q, qdot = list(q), list(qdot)
    n, m = sys.n, sys.m
    kp, kd = gains
    hval = list(sys.h(q))
    dh = jacobian(sys.h, q)                       # m x n
    D = np.asarray(sys.D(q), dtype=float)
    B = np.asarray(sys.B(q), dtype=float)
    Dinv_B = np.linalg.solve(D, B)
    b = np.asarray(dh, dtype=float) @ Dinv_B      # m x m
    if abs(np.linalg.det(b)) < 1e-12:
        raise RegularityError("decoupling matrix dh D^{-1} B singular")
    G = sys.gamma(q)
    quad = np.asarray([sum(G[k][i][j] * qdot[i] * qdot[j]
                           for i in range(n) for j in range(n))
                       for k in range(n)])
    drift = -quad - np.linalg.solve(D, np.asarray(sys.gradP(q), dtype=float))
    rhs = np.empty(m)
    for r in range(m):
        hess = [[second_partial(lambda xx, r=r: sys.h(xx)[r], q, i, j)
                 for j in range(n)] for i in range(n)]
        qHq = float(np.asarray(qdot) @ np.asarray(hess) @ np.asarray(qdot))
        hd = float(np.asarray(dh[r]) @ np.asarray(qdot))
        rhs[r] = -kp * hval[r] - kd * hd - qHq - float(np.asarray(dh[r]) @ drift)
    return np.linalg.solve(b, rhs)


def orthogonality_check(sys, par, grid=None, tol=1e-9):
    """True iff dphi^T B vanishes on the grid (control forces orthogonal to C)."""
    if grid is None:
        grid = par.chart.grid()
    worst = 0.0
    for th in grid:
        x = par.phi(list(th))
        B = np.asarray(sys.B(x), dtype=float)
        dphi = np.asarray(par.dphi(list(th)), dtype=float)
        worst = max(worst, float(np.max(np.abs(dphi.T @ B))))
    return worst < tol, worst


def restricted_structure(sys, par, grid=None):
    """Pullback metric dphi^T D dphi and restricted potential P(phi(theta)).

    Only valid when the control accelerations are orthogonal to the
    constraint manifold; refuses otherwise.
    """
    ok, worst = orthogonality_check(sys, par, grid=grid)
    if not ok:
        raise ValueError(
            f"control accelerations not orthogonal to C (max |dphi^T B| = {worst:g})")

    def metric(th):
        th = list(th)
        dphi = par.dphi(th)
        D = sys.D(par.phi(th))
        return linalg.mat_mul(linalg.transpose(dphi), linalg.mat_mul(D, dphi))

    def potential(th):
        return sys.P(par.phi(list(th)))

    return metric, potential
