"""Volume-ratio and average-Laplacian comparison checks against the space-form model.

Each check certifies the Ricci lower bound Ric >= K g on a sampled
neighborhood, fans geodesic rays over a sphere rule, reduces densities and
log-derivatives deterministically, and reports signed margins (model minus
manifold) with a three-way verdict: ``holds`` when every margin clears -tol,
``violated`` when some margin is below -10 tol, ``inconclusive`` between.

``verify_counterexample`` runs the staged check of the catalog ``section6``
family: exact golden series for the metric and Ricci, curvature values at the
origin, and the positive pointwise gap between the radial Laplacian along the
x1-axis and the model value — the failure of the pointwise comparison that the
averaged version rules out.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.stats import qmc

from . import curvature as curv
from . import geodesic, model_space, series
from .polynomials import CPoly
from .potential import RealAnalyticPotential, section6
from .sphere import SphereRule, build_rule, tangent_nodes, unit_sphere_volume

__all__ = [
    "RicciBoundCertificate",
    "ComparisonReport",
    "CounterexampleReport",
    "DeviationReport",
    "SphereFlow",
    "certify_ricci_bound",
    "find_lambda",
    "check_volume_ratio",
    "check_average_laplacian",
    "verify_counterexample",
    "rigidity_probe",
]

TOL_VOLUME = 1e-6      # relative, volume ratios
TOL_LAPLACIAN = 1e-7   # absolute, average Laplacian
CERT_TOL = 1e-9


@dataclass(frozen=True)
class RicciBoundCertificate:
    potential_id: str
    K: float
    rho: float
    min_eigenvalue: float
    samples: int
    passed: bool
    witness: tuple | None = None


@dataclass
class ComparisonReport:
    metric_id: str
    K: float
    grid: list
    rows: list          # dicts with keys lhs, rhs, margin (+ grid coordinates)
    verdict: str
    tolerances: dict

    def to_json_dict(self):
        return {
            "metric_id": self.metric_id,
            "K": self.K,
            "grid": [list(g) if isinstance(g, (tuple, list)) else g for g in self.grid],
            "rows": self.rows,
            "verdict": self.verdict,
            "tolerances": self.tolerances,
        }


def _verdict(margins, tol):
    margins = np.asarray(margins, dtype=float)
    if np.all(margins >= -tol):
        return "holds"
    if np.any(margins <= -10 * tol):
        return "violated"
    return "inconclusive"


# ---------------------------------------------------------------------------
# Ricci lower-bound certificates
# ---------------------------------------------------------------------------

def _ball_points(n, rho, count, seed):
    """Deterministic low-discrepancy points in the real 2n-ball of radius rho."""
    engine = qmc.Halton(d=2 * n, seed=seed)
    pts = []
    while len(pts) < count:
        block = 2.0 * engine.random(max(count, 256)) - 1.0
        keep = block[np.einsum("ij,ij->i", block, block) <= 1.0]
        pts.extend(keep.tolist())
    pts = np.array(pts[:count]) * rho
    return pts[:, 0::2] + 1j * pts[:, 1::2]


def certify_ricci_bound(pot: RealAnalyticPotential, K, rho, samples=10000,
                        seed=0) -> RicciBoundCertificate:
    """Sampled evidence that Ric - K g is positive semidefinite on the rho-ball.

    Evaluates the minimum eigenvalue of the metric-whitened Ricci deficit on a
    Halton sample plus radial grids along 64 directions (and the origin); the
    certificate passes when the minimum stays above -1e-9.
    """
    if rho > pot.validity_radius:
        raise ValueError("certificate radius exceeds the validity ball")
    n = pot.n
    Z = _ball_points(n, rho, samples, seed)
    dirs = Z[:64]
    norms = np.abs(np.linalg.norm(dirs, axis=1))
    dirs = dirs[norms > 1e-12]
    dirs = dirs / np.linalg.norm(dirs, axis=1)[:, None]
    radii = np.linspace(rho / 8.0, rho, 8)
    radial = (dirs[:, None, :] * radii[None, :, None]).reshape(-1, n)
    Z = np.vstack([np.zeros((1, n), dtype=complex), Z, radial])

    ws = curv.workspace(pot)
    G, ric = ws.ricci_values_many(Z)
    g_eigs = np.linalg.eigvalsh(G)
    if np.min(g_eigs) <= 0:
        bad = int(np.argmin(g_eigs[:, 0]))
        return RicciBoundCertificate(
            potential_id=pot.label, K=float(K), rho=float(rho),
            min_eigenvalue=float("-inf"), samples=Z.shape[0], passed=False,
            witness=tuple(Z[bad].tolist()))
    # whiten: M = G^{-1/2} (Ric - K G) G^{-1/2}
    vals, vecs = np.linalg.eigh(G)
    inv_sqrt = (vecs * (vals ** -0.5)[:, None, :]) @ np.conj(np.swapaxes(vecs, 1, 2))
    A = ric - float(K) * G
    M = inv_sqrt @ A @ inv_sqrt
    eigs = np.linalg.eigvalsh(M)
    idx = int(np.argmin(eigs[:, 0]))
    min_eig = float(eigs[idx, 0])
    passed = min_eig >= -CERT_TOL
    return RicciBoundCertificate(
        potential_id=pot.label, K=float(K), rho=float(rho),
        min_eigenvalue=min_eig, samples=Z.shape[0], passed=passed,
        witness=None if passed else tuple(Z[idx].tolist()))


def find_lambda(a, rho, samples=4000, seed=0, with_trace=False):
    """Smallest stabilizer weight making Ric >= -12a hold on the rho-ball.

    Doubling search for a passing value, then bisection to 1 percent relative
    width; returns the passing endpoint (0.0 when no stabilizer is needed).
    """
    if a == 0:
        lam = 0.0
        trace = [(0.0, 0.0, True)]
        return (lam, trace) if with_trace else lam
    K = -12.0 * float(a)
    trace = []

    def passes(lam):
        cert = certify_ricci_bound(section6(a, lam), K, rho, samples=samples, seed=seed)
        trace.append((float(lam), cert.min_eigenvalue, cert.passed))
        return cert.passed

    if passes(0.0):
        return (0.0, trace) if with_trace else 0.0
    lo, hi = 0.0, 1e-3
    while not passes(hi):
        lo, hi = hi, hi * 2.0
        if hi > 1e6:
            raise RuntimeError("no stabilizer weight below 1e6; reduce rho")
    while hi - lo > 0.01 * hi:
        mid = 0.5 * (lo + hi)
        if passes(mid):
            hi = mid
        else:
            lo = mid
    return (hi, trace) if with_trace else hi


# ---------------------------------------------------------------------------
# ray fan-out shared by the checks
# ---------------------------------------------------------------------------

class SphereFlow:
    """Geodesic rays over all nodes of a sphere rule from a common base point."""

    def __init__(self, pot: RealAnalyticPotential, p, r_max, rule: SphereRule | None = None,
                 tol=1e-11, threads: int | None = None):
        self.pot = pot
        self.p = np.asarray(p, dtype=complex).reshape(pot.n)
        self.rule = rule if rule is not None else build_rule(pot.n)
        self.r_max = float(r_max)
        self.tol = float(tol)
        G = curv.workspace(pot).metric_values(self.p)
        dirs = tangent_nodes(self.rule, curv.real_metric_matrix(G))

        def make(e0):
            return geodesic.shoot(pot, self.p, e0, self.r_max, tol=tol)

        if threads and threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                self.rays = list(pool.map(make, dirs))
        else:
            self.rays = [make(e0) for e0 in dirs]

    def densities(self, r):
        vals = np.empty(len(self.rays))
        logd = np.empty(len(self.rays))
        for i, ray in enumerate(self.rays):
            d = ray.density(r)
            vals[i] = d.value
            logd[i] = d.log_derivative
        return vals, logd

    def ball_volume(self, r) -> float:
        return math.fsum(w * ray.cumulative_volume(r)
                         for w, ray in zip(self.rule.weights, self.rays))

    def w_value(self, r) -> float:
        vals, _ = self.densities(r)
        m = 2 * self.pot.n - 1
        return math.fsum(w * v for w, v in zip(self.rule.weights, vals)) / r ** m

    def average_laplacian(self, r) -> float:
        vals, logd = self.densities(r)
        num = math.fsum(w * v * d for w, v, d in zip(self.rule.weights, vals, logd))
        den = math.fsum(w * v for w, v in zip(self.rule.weights, vals))
        return num / den

    def quality(self, r=None):
        r = self.r_max if r is None else r
        wron = max(ray.wronskian_drift(r) for ray in self.rays)
        frame = max(ray.frame_drift(r) for ray in self.rays)
        speed = max(ray.unit_speed_drift(r) for ray in self.rays)
        return {"wronskian": wron, "frame": frame, "speed": speed}


def _require_certificate(pot, K, rho, certificate, seed=0):
    if certificate is None:
        certificate = certify_ricci_bound(pot, K, rho, seed=seed)
    if not certificate.passed:
        raise ValueError(
            f"Ricci bound certificate refused (min eigenvalue "
            f"{certificate.min_eigenvalue:.3g} at {certificate.witness})")
    return certificate


# ---------------------------------------------------------------------------
# the two comparison theorems at desk scale
# ---------------------------------------------------------------------------

def check_volume_ratio(pot: RealAnalyticPotential, K, p=None, r_grid=None,
                       rule=None, tol=TOL_VOLUME, certificate=None,
                       flow: SphereFlow | None = None, tol_ode=1e-11,
                       threads=None, seed=0) -> ComparisonReport:
    """Vol(B(b))/Vol(B(a)) against the model ratio over all grid pairs a < b."""
    p = np.zeros(pot.n, dtype=complex) if p is None else np.asarray(p, dtype=complex)
    if r_grid is None:
        r_grid = np.linspace(0.005, 0.04, 8)
    r_grid = np.asarray(r_grid, dtype=float)
    if r_grid.size < 2:
        raise ValueError("volume-ratio check needs at least two radii")
    b_max = float(r_grid.max())
    certificate = _require_certificate(pot, K, min(b_max, pot.validity_radius), certificate, seed)
    if flow is None:
        flow = SphereFlow(pot, p, b_max, rule=rule, tol=tol_ode, threads=threads)
    model = model_space.ModelSpace(pot.n, float(K))
    vols = {float(r): flow.ball_volume(r) for r in r_grid}
    model_vols = {float(r): model_space.ball_volume(model, r) for r in r_grid}
    rows = []
    margins = []
    for i, a in enumerate(r_grid):
        for b in r_grid[i + 1:]:
            lhs = vols[float(b)] / vols[float(a)]
            rhs = model_vols[float(b)] / model_vols[float(a)]
            margin = (rhs - lhs) / rhs
            margins.append(margin)
            rows.append({"a": float(a), "b": float(b), "lhs": lhs, "rhs": rhs,
                         "margin": margin})
    return ComparisonReport(metric_id=pot.label, K=float(K),
                            grid=[(row["a"], row["b"]) for row in rows], rows=rows,
                            verdict=_verdict(margins, tol),
                            tolerances={"margin": tol, "ode": tol_ode})


def check_average_laplacian(pot: RealAnalyticPotential, K, p=None, r_grid=None,
                            rule=None, tol=TOL_LAPLACIAN, certificate=None,
                            flow: SphereFlow | None = None, tol_ode=1e-11,
                            threads=None, seed=0) -> ComparisonReport:
    """Area-weighted mean of the radial Laplacian against the model value."""
    p = np.zeros(pot.n, dtype=complex) if p is None else np.asarray(p, dtype=complex)
    if r_grid is None:
        r_grid = np.linspace(0.005, 0.04, 8)
    r_grid = np.asarray(r_grid, dtype=float)
    b_max = float(r_grid.max())
    certificate = _require_certificate(pot, K, min(b_max, pot.validity_radius), certificate, seed)
    if flow is None:
        flow = SphereFlow(pot, p, b_max, rule=rule, tol=tol_ode, threads=threads)
    model = model_space.ModelSpace(pot.n, float(K))
    rows = []
    margins = []
    for r in r_grid:
        lhs = flow.average_laplacian(float(r))
        rhs = model_space.laplacian(model, float(r))
        margin = rhs - lhs
        margins.append(margin)
        rows.append({"r": float(r), "lhs": lhs, "rhs": rhs, "margin": margin})
    return ComparisonReport(metric_id=pot.label, K=float(K),
                            grid=list(map(float, r_grid)), rows=rows,
                            verdict=_verdict(margins, tol),
                            tolerances={"margin": tol, "ode": tol_ode})


# ---------------------------------------------------------------------------
# staged counterexample verification
# ---------------------------------------------------------------------------

@dataclass
class CounterexampleReport:
    a: float
    lam: float
    stages: dict = field(default_factory=dict)

    @property
    def passed_all(self) -> bool:
        return all(st["passed"] for st in self.stages.values())

    def to_json_dict(self):
        def clean(x):
            if isinstance(x, np.bool_):
                return bool(x)
            if isinstance(x, (np.floating, np.integer)):
                return float(x)
            if isinstance(x, np.ndarray):
                return x.tolist()
            if isinstance(x, dict):
                return {k: clean(v) for k, v in x.items()}
            if isinstance(x, (list, tuple)):
                return [clean(v) for v in x]
            return x
        return {"a": self.a, "lambda": self.lam, "passed_all": self.passed_all,
                "stages": clean(self.stages)}


def _poly_from_terms(spec_terms):
    poly = CPoly.zero(2)
    for alpha, beta, coeff in spec_terms:
        poly = poly + CPoly.monomial(2, alpha, beta, coeff)
    return poly


def _expected_metric_series(a: Fraction):
    one = Fraction(1)
    g11 = _poly_from_terms([
        ((0, 0), (0, 0), one),
        ((1, 0), (1, 0), 4 * a),
        ((0, 1), (0, 1), 8 * a),
        ((2, 0), (2, 0), 24 * a * a),
        ((1, 1), (1, 1), 112 * a * a),
        ((0, 2), (0, 2), 28 * a * a),
    ])
    g12 = _poly_from_terms([
        ((0, 1), (1, 0), 8 * a),
        ((1, 1), (2, 0), 56 * a * a),
        ((0, 2), (1, 1), 56 * a * a),
    ])
    det = _poly_from_terms([
        ((0, 0), (0, 0), one),
        ((1, 0), (1, 0), 12 * a),
        ((0, 1), (0, 1), 12 * a),
        ((2, 0), (2, 0), 84 * a * a),
        ((0, 2), (0, 2), 84 * a * a),
        ((1, 1), (1, 1), 240 * a * a),
    ])
    return g11, g12, det


def verify_counterexample(a=0.1, lam=None, rho=0.05, r_grid=None, tol_ode=1e-12,
                          seed=0) -> CounterexampleReport:
    """Staged end-to-end verification of the section6 counterexample family.

    Stages: (i) exact metric/determinant series goldens; (ii) exact order-3
    vanishing of Ric + 12 a g and the degree-6 stabilizer profile; (iii)
    curvature values at the origin; (iv) per-direction r^4 density coefficient
    along the x1-axis exceeding the model's; (v) positive pointwise gap
    Laplacian - model Laplacian on a reported interval of small r.  Failing
    stages are recorded and the remaining stages still run.
    """
    if a == 0:
        raise ValueError("the counterexample needs a nonzero curvature parameter a")
    a_frac = Fraction(a)
    if lam is None:
        lam = find_lambda(a, rho, seed=seed)
    report = CounterexampleReport(a=float(a), lam=float(lam))
    pot = section6(a, lam)
    ws = curv.workspace(pot)
    K = -12.0 * float(a)
    model = model_space.ModelSpace(2, K)

    # stage i: exact metric series goldens
    g11_exp, g12_exp, det_exp = _expected_metric_series(a_frac)
    got_g11 = ws.g[0][0].truncate(4)
    got_g12 = ws.g[0][1].truncate(4)
    got_det = ws.det_g.truncate(4)
    stage_i = {
        "g11": got_g11 == g11_exp,
        "g12": got_g12 == g12_exp,
        "det": got_det == det_exp,
    }
    report.stages["metric_series"] = {"passed": all(stage_i.values()), **stage_i}

    # stage ii: Ric + 12 a g vanishes exactly through total degree 3, and the
    # lambda-linear part of (-log det g + 12 a f) at degree 6 is 24 (|z1|^2+|z2|^2)^3
    ric_plus = [[ws.ric[i][j] + ws.g[i][j].scale(12 * a_frac) for j in range(2)]
                for i in range(2)]
    vanish = all(ric_plus[i][j].truncate(3).is_zero() for i in range(2) for j in range(2))
    ws1 = curv.workspace(section6(a, 1))
    ws0 = curv.workspace(section6(a, 0))
    u1 = -ws1.log_det + ws1.pot.poly.scale(12 * a_frac)
    u0 = -ws0.log_det + ws0.pot.poly.scale(12 * a_frac)
    delta6 = (u1 - u0).part(6)
    expected6 = _poly_from_terms([
        ((3, 0), (3, 0), 24), ((2, 1), (2, 1), 72),
        ((1, 2), (1, 2), 72), ((0, 3), (0, 3), 24),
    ])
    report.stages["ricci_vanishing"] = {
        "passed": vanish and delta6 == expected6,
        "degree_le_3_vanishes": vanish,
        "stabilizer_profile": delta6 == expected6,
    }

    # stage iii: curvature at the origin in the frame of e0 = d/dx1
    origin = np.zeros(2, dtype=complex)
    tensor = curv.curvature_at(pot, origin)
    rf = curv.real_frame_components(tensor, np.array([1.0, 0, 0, 0]), pot=pot)
    target = np.diag([4 * a, 4 * a, 4 * a]).astype(float)
    dev = float(np.max(np.abs(rf.R_uv - target)))
    report.stages["origin_curvature"] = {"passed": dev < 1e-10, "max_deviation": dev,
                                         "R_uv": rf.R_uv}

    # stage iv: per-direction r^4 coefficient along e0 exceeds the model's
    jets = curv.curvature_jets_along(pot, origin, np.array([1.0, 0, 0, 0]),
                                     order=2, tol=tol_ode)
    _, _, c4_dir = series.direct_low_order_coefficients(jets.R[0], jets.R[1], jets.R[2])
    c4_model = model_space.model_series(model, 4)[4] / unit_sphere_volume(2)
    margin4 = c4_dir - c4_model
    report.stages["r4_coefficient"] = {
        "passed": margin4 > 0,
        "per_direction": c4_dir,
        "model": c4_model,
        "margin": margin4,
        "exact_margin": float(Fraction(2, 15) * a_frac * a_frac),
    }

    # stage v: pointwise Laplacian gap on a reported interval
    if r_grid is None:
        r_grid = np.linspace(0.004, 0.04, 19)
    r_grid = np.asarray(r_grid, dtype=float)
    e0 = np.array([1.0, 0, 0, 0])
    ray = geodesic.shoot(pot, origin, e0, float(r_grid.max()) * 1.01, tol=tol_ode)
    ray_coarse = geodesic.shoot(pot, origin, e0, float(r_grid.max()) * 1.01,
                                tol=tol_ode * 1e3)
    margins = []
    budget = 0.0
    for r in r_grid:
        d = ray.density(float(r))
        margins.append(d.log_derivative - model_space.laplacian(model, float(r)))
        budget = max(budget, abs(d.log_derivative
                                 - ray_coarse.density(float(r)).log_derivative))
    budget = max(budget, 1e-13)
    margins = np.array(margins)
    good = margins > 10.0 * budget
    interval = None
    if good.any():
        start = int(np.argmax(good))
        end = start
        while end + 1 < len(good) and good[end + 1]:
            end += 1
        interval = (float(r_grid[start]), float(r_grid[end]))
    report.stages["pointwise_gap"] = {
        "passed": interval is not None,
        "interval": interval,
        "margins": margins,
        "r_grid": r_grid,
        "error_budget": budget,
        "max_margin": float(margins.max()),
    }
    return report


# ---------------------------------------------------------------------------
# rigidity probe
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DeviationReport:
    metric_id: str
    K: float
    order: int
    fitted: np.ndarray
    model: np.ndarray
    deviations: np.ndarray
    thresholds: np.ndarray
    first_deviating_order: int | None
    sign: int | None

    def to_json_dict(self):
        return {
            "metric_id": self.metric_id, "K": self.K, "order": self.order,
            "fitted": self.fitted.tolist(), "model": self.model.tolist(),
            "deviations": self.deviations.tolist(),
            "thresholds": self.thresholds.tolist(),
            "first_deviating_order": self.first_deviating_order, "sign": self.sign,
        }


def rigidity_probe(pot: RealAnalyticPotential, K, p=None, order=6, rule=None,
                   flow: SphereFlow | None = None, certificate=None,
                   tol_ode=1e-11, threads=None, seed=0) -> DeviationReport:
    """First deviating order of the fitted W series from the model series.

    Reports the lowest order whose fitted-minus-model coefficient clears a
    noise threshold, with its sign; finding none means only "no deviation
    detected through this order", never an isometry claim.
    """
    p = np.zeros(pot.n, dtype=complex) if p is None else np.asarray(p, dtype=complex)
    r_lo, r_hi = 5e-3, 8e-2
    certificate = _require_certificate(pot, K, min(r_hi, pot.validity_radius),
                                       certificate, seed)
    if flow is None:
        flow = SphereFlow(pot, p, r_hi * 1.01, rule=rule, tol=tol_ode, threads=threads)
    grid = np.geomspace(r_lo, r_hi, 24)
    samples = [(float(r), flow.w_value(float(r))) for r in grid]
    fitted = series.fit_w_series(samples, order)
    model = model_space.model_series(model_space.ModelSpace(pot.n, float(K)), order)
    dev = fitted.coefficients - model.coefficients
    sigma = np.sqrt(np.maximum(np.diag(fitted.covariance), 0.0)) \
        if fitted.covariance is not None else np.zeros_like(dev)
    thresholds = np.maximum(8.0 * sigma,
                            2e-3 * np.maximum(1.0, np.abs(model.coefficients)))
    first = None
    sign = None
    for i in range(1, order + 1):
        if abs(dev[i]) > thresholds[i]:
            first = i
            sign = int(np.sign(dev[i]))
            break
    return DeviationReport(metric_id=pot.label, K=float(K), order=order,
                           fitted=fitted.coefficients, model=model.coefficients,
                           deviations=dev, thresholds=thresholds,
                           first_deviating_order=first, sign=sign)
