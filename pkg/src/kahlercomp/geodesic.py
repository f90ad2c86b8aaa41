"""Geodesics, parallel transport and the Jacobi system for a potential metric.

One adaptive integration carries the full state: position, velocity, the
parallel frame vectors e_1..e_{2n-1}, the Jacobi matrix J and its derivative
J' (columns = Jacobi fields J_u with J(0) = 0, J'(0) = I, components in the
parallel frame), plus the running radial integral of |det J| used for ball
volumes.  The Jacobi right-hand side is J'' = R_mat J with
R_mat[u][v] = <R(e0, e_u)e0, e_v> evaluated along the ray.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from . import curvature as curv
from .potential import RealAnalyticPotential

__all__ = [
    "GeodesicRay",
    "JacobiSystemState",
    "RadialDensity",
    "ConjugatePointError",
    "IntegrationStalledError",
    "shoot",
    "jacobi_integrate",
    "radial_density",
]


class ConjugatePointError(ValueError):
    def __init__(self, message, bracket=None):
        super().__init__(message)
        self.bracket = bracket


class IntegrationStalledError(RuntimeError):
    pass


@dataclass(frozen=True)
class JacobiSystemState:
    r: float
    J: np.ndarray
    J_prime: np.ndarray


@dataclass(frozen=True)
class RadialDensity:
    r: float
    value: float            # sqrt(det <J_u, J_v>)
    log_derivative: float   # d/dr log value, from (1/2) tr(G^-1 G')


def _pack(z, v, frame_rows, J, Jp, vol):
    return np.concatenate([
        z.view(float), v.view(float), frame_rows.reshape(-1).view(float),
        J.reshape(-1), Jp.reshape(-1), [vol],
    ])


class GeodesicRay:
    """Unit-speed geodesic with parallel frame, Jacobi system and dense output."""

    def __init__(self, pot: RealAnalyticPotential, p, e0, r_max, tol=1e-10, frame=None):
        self.pot = pot
        self.n = pot.n
        m = 2 * self.n - 1
        self.m = m
        self.tol = float(tol)
        self.p = np.asarray(p, dtype=complex).reshape(self.n)
        ws = curv.workspace(pot)
        self._ws = ws

        xi0 = curv.normalize_direction(pot, self.p, e0)
        self.e0 = curv.real_rep(xi0)
        G0 = ws.metric_values(self.p)
        if frame is None:
            frame_rows = curv.complete_frame(G0, xi0)[1:]
        else:
            frame_rows = np.asarray(frame, dtype=complex).reshape(m, self.n)
        self.initial_frame = frame_rows.copy()

        y0 = _pack(self.p.copy(), xi0.copy(), frame_rows.copy(),
                   np.zeros((m, m)), np.eye(m), 0.0)
        events = []
        radius = pot.validity_radius
        if np.isfinite(radius):
            def exit_ball(r, y, _radius=radius, _n=self.n):
                zz = y[:2 * _n]
                return _radius ** 2 - (zz @ zz)
            exit_ball.terminal = True
            exit_ball.direction = -1
            events.append(exit_ball)

        sol = solve_ivp(self._rhs, (0.0, float(r_max)), y0, method="DOP853",
                        rtol=self.tol, atol=self.tol, dense_output=True,
                        events=events or None)
        if sol.status == -1:
            raise IntegrationStalledError(f"integration stalled: {sol.message}")
        self.truncated = sol.status == 1
        self.r_max = float(sol.t[-1])
        self._sol = sol
        self._conjugate = None
        self._conjugate_scanned = False

    # -- ODE ----------------------------------------------------------------
    def _unpack(self, y):
        n, m = self.n, self.m
        z = y[0:2 * n].view(complex)
        v = y[2 * n:4 * n].view(complex)
        off = 4 * n
        frame = y[off:off + 2 * n * m].view(complex).reshape(m, n)
        off += 2 * n * m
        J = y[off:off + m * m].reshape(m, m)
        off += m * m
        Jp = y[off:off + m * m].reshape(m, m)
        vol = y[off + m * m]
        return z, v, frame, J, Jp, vol

    def _rhs(self, r, y):
        n, m = self.n, self.m
        z, v, frame, J, Jp, _ = self._unpack(np.ascontiguousarray(y))
        G, D1, D2 = self._ws.field_values(z)
        cginv = np.linalg.inv(G).conj()
        gamma = np.einsum("mq,ikq->mik", cginv, D1)
        acc = -np.einsum("mik,i,k->m", gamma, v, v)
        dframe = -np.einsum("mik,i,uk->um", gamma, v, frame)
        RH = -D2 + np.einsum("mq,ikq,jlm->ijkl", cginv, D1, D1.conj())
        full = np.vstack([v[None, :], frame])
        R_mat = curv.frame_curvature_matrix(RH, full)
        dJ = Jp
        dJp = R_mat @ J
        dvol = abs(np.linalg.det(J))
        return _pack(v.copy(), acc, dframe, dJ, dJp, dvol)

    # -- dense access ---------------------------------------------------------
    def _state(self, r):
        if r < -1e-15 or r > self.r_max * (1 + 1e-12):
            raise ValueError(f"r = {r} outside integrated range [0, {self.r_max}]"
                             + (" (ray truncated at the validity ball)" if self.truncated else ""))
        return self._unpack(np.ascontiguousarray(self._sol.sol(min(max(r, 0.0), self.r_max))))

    def position(self, r):
        return self._state(r)[0].copy()

    def velocity_c(self, r):
        return self._state(r)[1].copy()

    def velocity(self, r):
        return curv.real_rep(self.velocity_c(r))

    def frame(self, r):
        """Complex reps of [e0(r), e_1(r), ..., e_{2n-1}(r)]."""
        z, v, frame, *_ = self._state(r)
        return np.vstack([v[None, :], frame])

    def jacobi(self, r):
        _, _, _, J, Jp, _ = self._state(r)
        return J.copy(), Jp.copy()

    def cumulative_volume(self, r) -> float:
        return float(self._state(r)[5])

    def frame_curvature(self, r):
        """(R_uv, Ric(e0,e0)) at parameter r, in the transported frame."""
        z, v, frame, *_ = self._state(r)
        RH = self._ws.curvature_values(z)
        full = np.vstack([v[None, :], frame])
        R_uv = curv.frame_curvature_matrix(RH, full)
        _, ric = self._ws.ricci_values(z)
        return R_uv, curv.ricci_pairing(ric, v, v)

    # -- quality gates ---------------------------------------------------------
    def unit_speed_drift(self, r) -> float:
        z, v, *_ = self._state(r)
        G = self._ws.metric_values(z)
        return abs(curv.real_inner(G, v, v) - 1.0)

    def frame_drift(self, r) -> float:
        z, v, frame, *_ = self._state(r)
        G = self._ws.metric_values(z)
        full = np.vstack([v[None, :], frame])
        gram = np.array([[curv.real_inner(G, a, b) for b in full] for a in full])
        return float(np.max(np.abs(gram - np.eye(2 * self.n))))

    def wronskian_drift(self, r) -> float:
        J, Jp = self.jacobi(r)
        return float(np.max(np.abs(Jp.T @ J - J.T @ Jp)))

    # -- conjugate points -------------------------------------------------------
    def conjugate_point(self):
        """First zero of det J in (0, r_max], by grid scan plus bisection."""
        if self._conjugate_scanned:
            return self._conjugate
        from scipy.optimize import brentq
        grid = np.linspace(0.0, self.r_max, 129)[1:]
        dets = [np.linalg.det(self.jacobi(r)[0]) for r in grid]
        self._conjugate_scanned = True
        for i in range(len(grid) - 1):
            if dets[i] > 0 and dets[i + 1] <= 0:
                f = lambda r: np.linalg.det(self.jacobi(r)[0])
                self._conjugate = float(brentq(f, grid[i], grid[i + 1], xtol=1e-10))
                return self._conjugate
        self._conjugate = None
        return None

    # -- density ---------------------------------------------------------------
    def density(self, r) -> RadialDensity:
        if r <= 0:
            raise ValueError("density needs r > 0")
        m = self.m
        if r < 1e-4:
            # series evaluation near 0 avoids the 0/0 in G^-1 G'
            R0, _ = self.frame_curvature(0.0)
            trR = float(np.trace(R0))
            value = r ** m * (1.0 + r * r * trR / 6.0)
            logd = m / r + r * trR / 3.0
            return RadialDensity(r=r, value=value, log_derivative=logd)
        J, Jp = self.jacobi(r)
        det_j = np.linalg.det(J)
        if det_j <= 0:
            # sign flip of det J certifies a crossing; locate it for the report
            cp = self.conjugate_point()
            bracket = (0.0, r) if cp is None else (cp * (1 - 1e-10), cp * (1 + 1e-10))
            raise ConjugatePointError(
                f"conjugate point reached before r = {r}", bracket=bracket)
        gram = J.T @ J
        gram_p = Jp.T @ J + J.T @ Jp
        logd = 0.5 * float(np.trace(np.linalg.solve(gram, gram_p)))
        return RadialDensity(r=r, value=float(det_j), log_derivative=logd)

    def trace_csv(self, path, r_values):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["r", "speed_drift", "det", "value", "log_derivative"])
            for r in r_values:
                J, _ = self.jacobi(r)
                d = self.density(r)
                w.writerow([repr(float(r)), repr(self.unit_speed_drift(r)),
                            repr(float(np.linalg.det(J))), repr(d.value),
                            repr(d.log_derivative)])


def shoot(pot: RealAnalyticPotential, p, e0, r_max, tol=1e-10, frame=None) -> GeodesicRay:
    """Integrate the unit-speed geodesic from p in direction e0 up to r_max.

    The ray is truncated (with ``ray.truncated`` set) if it exits the
    potential's validity ball first.
    """
    return GeodesicRay(pot, p, e0, r_max, tol=tol, frame=frame)


def jacobi_integrate(ray: GeodesicRay, r) -> JacobiSystemState:
    J, Jp = ray.jacobi(r)
    return JacobiSystemState(r=float(r), J=J, J_prime=Jp)


def radial_density(ray: GeodesicRay, r) -> RadialDensity:
    return ray.density(r)
