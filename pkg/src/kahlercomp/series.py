"""Power-series machinery for the radial Jacobi density.

The Jacobi fields J_u(r) = sum_i r^i C^v_{u,i} e_v satisfy the recursion

    C^v_{u,i} = sum_{k+j=i-2, w} C^w_{u,k} R^(j)_{vw} / (j! i (i-1)),

seeded by C_1 = identity, driven by the curvature jets R^(j) along the ray.
From the coefficients we expand the Gram matrix <J_u, J_v>/r^2, take the
determinant and square root as truncated formal power series, and obtain the
per-direction density series whose sphere average is W(r) (constant term
Vol(S^{2n-1})).  A least-squares fit of sampled W values provides the
independent numerical route to the same coefficients.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from itertools import permutations

import numpy as np

from . import curvature as curv
from .potential import RealAnalyticPotential
from .sphere import SphereRule, build_rule, tangent_nodes

__all__ = [
    "SeriesExpansion",
    "JacobiCoefficients",
    "TPS",
    "jacobi_recursion",
    "density_series",
    "direct_low_order_coefficients",
    "c4_sphere_average",
    "fit_w_series",
    "kahler_r11_identity_check",
]


@dataclass(frozen=True)
class SeriesExpansion:
    coefficients: np.ndarray
    provenance: str                      # "symbolic" | "fitted"
    covariance: np.ndarray | None = None
    condition: float | None = None
    cv_shift: float | None = None        # relative c2 change under grid change

    def __getitem__(self, k):
        return float(self.coefficients[k])


@dataclass(frozen=True)
class JacobiCoefficients:
    e0: np.ndarray
    order: int
    C: np.ndarray   # C[u, i, v], 0 <= i <= order; C[:, 0, :] = 0


class TPS:
    """Truncated power series over a fixed-length float coefficient array."""

    __slots__ = ("c",)

    def __init__(self, coeffs, length=None):
        c = np.asarray(coeffs, dtype=float)
        if length is not None:
            out = np.zeros(length)
            out[:min(len(c), length)] = c[:length]
            c = out
        self.c = c

    @classmethod
    def constant(cls, value, length):
        out = np.zeros(length)
        out[0] = value
        return cls(out)

    def __add__(self, other):
        return TPS(self.c + other.c)

    def __sub__(self, other):
        return TPS(self.c - other.c)

    def __mul__(self, other):
        L = len(self.c)
        return TPS(np.convolve(self.c, other.c)[:L])

    def scale(self, s):
        return TPS(self.c * s)

    def sqrt_one_plus(self):
        """sqrt of the series, requiring constant term 1."""
        if abs(self.c[0] - 1.0) > 1e-12:
            raise ValueError("sqrt composition expects constant term 1")
        L = len(self.c)
        x = TPS(self.c.copy())
        x.c[0] = 0.0
        out = TPS.constant(1.0, L)
        power = TPS.constant(1.0, L)
        coeff = 1.0
        for k in range(1, L):
            coeff *= (0.5 - (k - 1)) / k  # binomial(1/2, k) recursion
            power = power * x
            if not power.c.any():
                break
            out = out + power.scale(coeff)
        return out


def _det_tps(entries):
    """Determinant of a square matrix of TPS entries (Leibniz; size <= 5)."""
    m = len(entries)
    L = len(entries[0][0].c)
    acc = TPS.constant(0.0, L)
    for perm in permutations(range(m)):
        inv = sum(1 for i in range(m) for j in range(i + 1, m) if perm[i] > perm[j])
        term = TPS.constant(-1.0 if inv % 2 else 1.0, L)
        for i in range(m):
            term = term * entries[i][perm[i]]
        acc = acc + term
    return acc


def jacobi_recursion(jets: curv.CurvatureJets, N: int) -> JacobiCoefficients:
    """Jacobi coefficient arrays C^v_{u,i} for 1 <= i <= N from curvature jets."""
    needed = max(0, N - 3)
    if jets.order < needed:
        raise ValueError(f"need jets of order >= {needed} for coefficients to order {N}")
    m = jets.R.shape[1]
    C = np.zeros((m, N + 1, m))
    if N >= 1:
        C[:, 1, :] = np.eye(m)
    factorials = [math.factorial(j) for j in range(jets.order + 1)]
    for i in range(3, N + 1):
        block = np.zeros((m, m))
        for k in range(1, i - 1):
            j = i - 2 - k
            if j > jets.order:
                continue
            factor = float(Fraction(1, factorials[j] * i * (i - 1)))
            # sum_w C[u,k,w] R^(j)[v,w]
            block += factor * (C[:, k, :] @ jets.R[j].T)
        C[:, i, :] = block
    return JacobiCoefficients(e0=jets.e0, order=N, C=C)


def density_series(coeffs: JacobiCoefficients, N: int) -> SeriesExpansion:
    """Per-direction series of sqrt(det <J_u, J_v>)/r^{2n-1} up to order N."""
    if N > 2 * coeffs.order - 2:
        raise ValueError("requested order exceeds what the coefficients support")
    C = coeffs.C
    m = C.shape[0]
    L = N + 1
    # Gram/r^2 entries: sum over w of C[u,i,w] C[v,j,w] at power i+j-2
    gram = [[TPS.constant(0.0, L) for _ in range(m)] for _ in range(m)]
    max_i = C.shape[1] - 1
    prods = np.einsum("uiw,vjw->uvij", C, C)
    for u in range(m):
        for v in range(m):
            arr = np.zeros(L)
            for i in range(1, max_i + 1):
                for j in range(1, max_i + 1):
                    t = i + j - 2
                    if t < L:
                        arr[t] += prods[u, v, i, j]
            gram[u][v] = TPS(arr)
    det = _det_tps(gram)
    return SeriesExpansion(coefficients=det.sqrt_one_plus().c, provenance="symbolic")


def direct_low_order_coefficients(R0, R1, R2):
    """(c2, c3, c4) of the per-direction density series straight from the jets.

    c2 = tr R / 6,  c3 = tr R' / 12,
    c4 = sum R_us^2 / 45 + tr R'' / 40 + sum_{u<v}(R_uu R_vv - R_uv^2)/18
         - (tr R)^2 / 72.
    """
    tr = float(np.trace(R0))
    c2 = tr / 6.0
    c3 = float(np.trace(R1)) / 12.0
    off = 0.0
    diag_prod = 0.0
    m = R0.shape[0]
    for u in range(m):
        for v in range(u + 1, m):
            off += R0[u, v] ** 2
            diag_prod += R0[u, u] * R0[v, v]
    c4 = (float(np.sum(R0 * R0)) / 45.0 + float(np.trace(R2)) / 40.0
          + diag_prod / 18.0 - off / 18.0 - tr * tr / 72.0)
    return c2, c3, c4


def _rule_for(pot, rule):
    return rule if rule is not None else build_rule(pot.n)


def c4_sphere_average(pot: RealAnalyticPotential, p, rule: SphereRule | None = None,
                      jet_tol: float = 1e-12) -> float:
    """Sphere integral of the per-direction r^4 density coefficient at p.

    The closed-form simplification of this integral assumes Ric = K g at p;
    if that fails the raw integral is still returned, with a warning.
    """
    rule = _rule_for(pot, rule)
    p = np.asarray(p, dtype=complex).reshape(pot.n)
    ws = curv.workspace(pot)
    G, ric = ws.ricci_values(p)
    K_est = float(np.real(np.trace(np.linalg.solve(G, ric)))) / pot.n
    if np.max(np.abs(ric - K_est * G)) > 1e-8:
        warnings.warn("Ricci is not proportional to the metric at p; "
                      "returning the raw sphere integral")
    H = curv.real_metric_matrix(G)
    dirs = tangent_nodes(rule, H)
    vals = []
    for e0 in dirs:
        jets = curv.curvature_jets_along(pot, p, e0, order=2, tol=jet_tol)
        _, _, c4 = direct_low_order_coefficients(jets.R[0], jets.R[1], jets.R[2])
        vals.append(c4)
    return math.fsum(w * v for w, v in zip(rule.weights, vals))


def fit_w_series(samples, N: int) -> SeriesExpansion:
    """Least-squares polynomial fit of W(r) samples, powers r^0..r^N.

    Columns are norm-scaled before solving; the condition number of the scaled
    design must stay below 1e12.  A disjoint-grid refit reports the relative
    shift of the r^2 coefficient (``cv_shift``).
    """
    samples = sorted((float(r), float(v)) for r, v in samples)
    if len(samples) < 2 * N:
        raise ValueError(f"need at least {2 * N} samples for a degree-{N} fit")
    r = np.array([s[0] for s in samples])
    y = np.array([s[1] for s in samples])

    def solve(rr, yy):
        V = rr[:, None] ** np.arange(N + 1)[None, :]
        scale = np.linalg.norm(V, axis=0)
        Vs = V / scale
        cond = float(np.linalg.cond(Vs))
        if cond > 1e12:
            raise ValueError(
                f"fit design condition number {cond:.3g} too large; reduce N or widen grid")
        coef, res, *_ = np.linalg.lstsq(Vs, yy, rcond=None)
        coef = coef / scale
        dof = max(len(rr) - (N + 1), 1)
        resid = yy - V @ coef
        sigma2 = float(resid @ resid) / dof
        cov = sigma2 * np.linalg.inv((Vs.T @ Vs)) / np.outer(scale, scale)
        return coef, cov, cond

    coef, cov, cond = solve(r, y)
    coef_half, _, _ = solve(r[::2], y[::2])
    denom = abs(coef[2]) if abs(coef[2]) > 1e-12 else 1.0
    cv_shift = abs(coef_half[2] - coef[2]) / denom
    return SeriesExpansion(coefficients=coef, provenance="fitted",
                           covariance=cov, condition=cond, cv_shift=cv_shift)


_R11_CONSTANT_CACHE: dict = {}


def _r11_integral(pot, p, rule):
    """Sphere integral of R_11(e0) = <R(e0, Je0)e0, Je0> at p."""
    ws = curv.workspace(pot)
    p = np.asarray(p, dtype=complex).reshape(pot.n)
    RH = ws.curvature_values(p)
    G = ws.metric_values(p)
    H = curv.real_metric_matrix(G)
    dirs = tangent_nodes(rule, H)
    vals = []
    for e0 in dirs:
        xi = curv.complex_rep(e0)
        vals.append(curv.rm_value(RH, xi, 1j * xi, xi, 1j * xi))
    return math.fsum(w * v for w, v in zip(rule.weights, vals))


def kahler_r11_identity_check(pot: RealAnalyticPotential, p,
                              rule: SphereRule | None = None):
    """Check that the sphere integral of R_11 is the fixed multiple of scalar curvature.

    The constant is calibrated once per dimension on a space-form potential and
    then held fixed; returns (lhs, rhs, residual).
    """
    from .potential import space_form  # local to avoid import cycle at module load

    rule = _rule_for(pot, rule)
    n = pot.n
    if n not in _R11_CONSTANT_CACHE:
        ref = space_form(n, n + 1)  # curvature parameter b = 1
        lhs0 = _r11_integral(ref, np.zeros(n), rule)
        s0 = curv.scalar_at(ref, np.zeros(n))
        _R11_CONSTANT_CACHE[n] = lhs0 / s0
    C3 = _R11_CONSTANT_CACHE[n]
    lhs = _r11_integral(pot, p, rule)
    rhs = C3 * curv.scalar_at(pot, p)
    return lhs, rhs, lhs - rhs
