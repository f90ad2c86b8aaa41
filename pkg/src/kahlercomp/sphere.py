"""Quadrature on the unit sphere S^{2n-1} of a complex n-dimensional tangent space.

Rules are tensor products of Gauss-Legendre nodes in the torus-action moment
coordinates |z_i|^2 with equispaced angles, symmetrized under z -> -z by even
angle counts.  They integrate polynomials in (z, conj z) exactly up to the
declared degree, and weights sum to Vol(S^{2n-1}) = 2 pi^n / (n-1)!.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = ["SphereRule", "build_rule", "sphere_average", "unit_sphere_volume",
           "tangent_nodes"]


def unit_sphere_volume(n: int) -> float:
    """Vol(S^{2n-1}) = 2 pi^n / (n-1)!."""
    return 2.0 * math.pi ** n / math.factorial(n - 1)


@dataclass(frozen=True)
class SphereRule:
    n: int
    nodes: np.ndarray    # (N, 2n) real coords, Euclidean unit, interleaved (x1,y1,..)
    weights: np.ndarray  # (N,), positive, summing to Vol(S^{2n-1})
    degree: int

    def complex_nodes(self) -> np.ndarray:
        return self.nodes[:, 0::2] + 1j * self.nodes[:, 1::2]


def _gauss01(k):
    x, w = np.polynomial.legendre.leggauss(k)
    return 0.5 * (x + 1.0), 0.5 * w


def build_rule(n: int, degree: int | None = None) -> SphereRule:
    """Symmetric product rule on S^{2n-1} with the given exactness degree.

    Supported: n = 2 (default degree 12) and n = 3 (default degree 8).
    """
    if n == 2:
        degree = 12 if degree is None else int(degree)
    elif n == 3:
        degree = 8 if degree is None else int(degree)
    else:
        raise ValueError("sphere rules implemented for n in {2, 3}")
    if degree > 20:
        raise ValueError("exactness degree capped at 20")

    half = degree // 2
    n_theta = degree + 1
    if n_theta % 2:
        n_theta += 1
    thetas = 2.0 * math.pi * np.arange(n_theta) / n_theta
    w_theta = 2.0 * math.pi / n_theta

    nodes = []
    weights = []
    if n == 2:
        # z1 = sqrt(1-u) e^{i a}, z2 = sqrt(u) e^{i b}; dsigma = (1/2) du da db
        k_u = (half + 2) // 2
        us, wus = _gauss01(k_u)
        for u, wu in zip(us, wus):
            r1 = math.sqrt(1.0 - u)
            r2 = math.sqrt(u)
            for a in thetas:
                z1 = r1 * complex(math.cos(a), math.sin(a))
                for b in thetas:
                    z2 = r2 * complex(math.cos(b), math.sin(b))
                    nodes.append((z1.real, z1.imag, z2.real, z2.imag))
                    weights.append(0.5 * wu * w_theta * w_theta)
    else:
        # z_i = sqrt(u_i) e^{i t_i}, sum u_i = 1; dsigma = (1/4) du1 du2 dt1 dt2 dt3
        # simplex mapped by u1 = s, u2 = (1-s) t with Jacobian (1-s)
        k_s = (half + 3) // 2
        k_t = (half + 2) // 2
        ss, wss = _gauss01(k_s)
        ts, wts = _gauss01(k_t)
        for s, ws in zip(ss, wss):
            for t, wt in zip(ts, wts):
                u1 = s
                u2 = (1.0 - s) * t
                u3 = 1.0 - u1 - u2
                r = (math.sqrt(u1), math.sqrt(u2), math.sqrt(max(u3, 0.0)))
                base_w = 0.25 * ws * wt * (1.0 - s) * w_theta ** 3
                for a in thetas:
                    za = r[0] * complex(math.cos(a), math.sin(a))
                    for b in thetas:
                        zb = r[1] * complex(math.cos(b), math.sin(b))
                        for c in thetas:
                            zc = r[2] * complex(math.cos(c), math.sin(c))
                            nodes.append((za.real, za.imag, zb.real, zb.imag,
                                          zc.real, zc.imag))
                            weights.append(base_w)

    return SphereRule(n=n, nodes=np.array(nodes), weights=np.array(weights),
                      degree=degree)


def sphere_average(rule: SphereRule, f) -> float:
    """Weighted integral of f over the rule's nodes, in fixed node order.

    Uses compensated summation; the total mass is Vol(S^{2n-1}), so divide by
    the rule's weight sum for a mean value.
    """
    return math.fsum(w * f(node) for node, w in zip(rule.nodes, rule.weights))


def tangent_nodes(rule: SphereRule, H: np.ndarray) -> np.ndarray:
    """Map Euclidean nodes to metric-unit tangent vectors for a real Gram matrix H.

    The rows are F u with F the inverse-transpose Cholesky factor of H, an
    isometry from the round sphere onto the metric unit sphere.
    """
    L = np.linalg.cholesky(H)
    F = np.linalg.inv(L).T
    return rule.nodes @ F.T
