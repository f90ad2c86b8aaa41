"""Certificates, the two comparison checks, counterexample stages, rigidity probe."""

import numpy as np
import pytest

from kahlercomp import comparison as CMP
from kahlercomp import model_space as M
from kahlercomp import potential as P
from kahlercomp.model_space import ModelSpace


@pytest.fixture(scope="module")
def section6_flow(section6_pot, rule6):
    return CMP.SphereFlow(section6_pot, np.zeros(2), 0.0405, rule=rule6, tol=1e-11)


class TestCertificates:
    def test_flat_zero_bound_holds(self, flat2):
        cert = CMP.certify_ricci_bound(flat2, 0.0, 0.05, samples=500)
        assert cert.passed
        assert cert.min_eigenvalue == pytest.approx(0.0, abs=1e-12)

    def test_space_form_tight_bound(self, space_form_k1):
        cert = CMP.certify_ricci_bound(space_form_k1, 1.0, 0.05, samples=500)
        assert cert.passed
        assert abs(cert.min_eigenvalue) < 1e-9

    def test_refusal_carries_witness(self, flat2):
        cert = CMP.certify_ricci_bound(flat2, 0.1, 0.05, samples=200)
        assert not cert.passed
        assert cert.witness is not None
        assert cert.min_eigenvalue == pytest.approx(-0.1, abs=1e-12)

    def test_radius_beyond_validity_rejected(self, section6_pot):
        with pytest.raises(ValueError, match="validity"):
            CMP.certify_ricci_bound(section6_pot, -1.2, 0.5)

    def test_section6_passes_at_default_parameters(self, section6_pot):
        cert = CMP.certify_ricci_bound(section6_pot, -1.2, 0.05, samples=2000)
        assert cert.passed


class TestFindLambda:
    def test_zero_curvature_needs_nothing(self):
        assert CMP.find_lambda(0.0, 0.05) == 0.0

    def test_positive_a_needs_nothing_at_default_radius(self):
        # the quartic remainder of Ric + 12 a g is PSD for a > 0
        assert CMP.find_lambda(0.1, 0.05, samples=2000) == 0.0

    def test_negative_a_requires_stabilizer(self):
        lam, trace = CMP.find_lambda(-0.1, 0.05, samples=2000, with_trace=True)
        assert lam > 0
        assert any(not ok for _, _, ok in trace)
        cert = CMP.certify_ricci_bound(P.section6(-0.1, lam), 1.2, 0.05, samples=2000)
        assert cert.passed

    def test_monotone_in_radius(self):
        lam_small = CMP.find_lambda(-0.1, 0.025, samples=1500)
        lam_large = CMP.find_lambda(-0.1, 0.05, samples=1500)
        assert lam_small <= lam_large * (1 + 1e-9)


class TestVerdicts:
    def test_bands(self):
        assert CMP._verdict([0.0, 1e-9], 1e-7) == "holds"
        assert CMP._verdict([-5e-8], 1e-7) == "holds"
        assert CMP._verdict([-5e-7], 1e-7) == "inconclusive"
        assert CMP._verdict([-2e-6], 1e-7) == "violated"


class TestTheorem3:
    def test_flat_equality(self, flat2, rule6):
        rep = CMP.check_volume_ratio(flat2, 0.0, rule=rule6, tol_ode=1e-11)
        assert rep.verdict == "holds"
        assert max(abs(r["margin"]) for r in rep.rows) < 1e-8

    def test_space_form_self_consistency(self, space_form_k1, rule6):
        rep = CMP.check_volume_ratio(space_form_k1, 1.0, rule=rule6, tol_ode=1e-11)
        assert rep.verdict == "holds"
        assert max(abs(r["margin"]) for r in rep.rows) < 1e-6

    def test_section6_holds(self, section6_pot, section6_flow):
        rep = CMP.check_volume_ratio(section6_pot, -1.2, flow=section6_flow)
        assert rep.verdict == "holds"

    def test_ratio_monotone_in_radius(self, section6_pot, section6_flow):
        model = ModelSpace(2, -1.2)
        grid = np.linspace(0.005, 0.04, 8)
        ratios = [section6_flow.ball_volume(float(b)) / M.ball_volume(model, float(b))
                  for b in grid]
        assert all(ratios[i + 1] <= ratios[i] * (1 + 1e-9) for i in range(len(grid) - 1))

    def test_missing_certificate_refused(self, flat2, rule6):
        bad = CMP.certify_ricci_bound(flat2, 0.5, 0.04, samples=200)
        with pytest.raises(ValueError, match="refused"):
            CMP.check_volume_ratio(flat2, 0.5, rule=rule6, certificate=bad)


class TestTheorem4:
    def test_flat_equality(self, flat2, rule6):
        rep = CMP.check_average_laplacian(flat2, 0.0, rule=rule6, tol_ode=1e-11)
        assert rep.verdict == "holds"
        assert max(abs(r["margin"]) for r in rep.rows) < 1e-9

    def test_space_form_self_consistency(self, space_form_k1, rule6):
        rep = CMP.check_average_laplacian(space_form_k1, 1.0, rule=rule6,
                                          tol_ode=1e-11)
        assert rep.verdict == "holds"
        assert max(abs(r["margin"]) for r in rep.rows) < 1e-7

    def test_section6_average_holds_while_pointwise_fails(self, section6_pot,
                                                          section6_flow):
        rep = CMP.check_average_laplacian(section6_pot, -1.2, flow=section6_flow)
        assert rep.verdict == "holds"
        # the x1-axis ray alone violates the comparison on the same grid
        from kahlercomp import geodesic as G
        model = ModelSpace(2, -1.2)
        ray = G.shoot(section6_pot, np.zeros(2), np.array([1.0, 0, 0, 0]), 0.0405,
                      tol=1e-12)
        gaps = [ray.density(float(r)).log_derivative - M.laplacian(model, float(r))
                for r in np.linspace(0.02, 0.04, 5)]
        assert min(gaps) > 0


@pytest.fixture(scope="module")
def report():
    return CMP.verify_counterexample(a=0.1, lam=0.0)


class TestCounterexample:

    def test_all_stages_pass(self, report):
        assert report.passed_all, {k: v["passed"] for k, v in report.stages.items()}

    def test_metric_series_stage(self, report):
        st = report.stages["metric_series"]
        assert st["g11"] and st["g12"] and st["det"]

    def test_ricci_stage(self, report):
        st = report.stages["ricci_vanishing"]
        assert st["degree_le_3_vanishes"] and st["stabilizer_profile"]

    def test_origin_curvature_stage(self, report):
        st = report.stages["origin_curvature"]
        assert st["max_deviation"] < 1e-10
        assert np.allclose(st["R_uv"], np.diag([0.4, 0.4, 0.4]), atol=1e-10)

    def test_r4_stage_margin(self, report):
        st = report.stages["r4_coefficient"]
        assert st["margin"] > 0
        assert st["margin"] == pytest.approx(st["exact_margin"], rel=1e-4)

    def test_pointwise_stage(self, report):
        st = report.stages["pointwise_gap"]
        assert st["interval"] is not None
        assert st["max_margin"] > 10 * st["error_budget"]

    def test_negative_a_variant(self):
        rep = CMP.verify_counterexample(a=-0.1, rho=0.05)
        assert rep.lam > 0
        assert rep.passed_all

    def test_zero_a_rejected(self):
        with pytest.raises(ValueError, match="nonzero"):
            CMP.verify_counterexample(a=0.0)

    def test_json_serializable(self, report):
        import json
        text = json.dumps(report.to_json_dict())
        assert "pointwise_gap" in text


class TestRigidityProbe:
    def test_space_form_no_deviation(self, space_form_k1, rule6):
        rep = CMP.rigidity_probe(space_form_k1, 1.0, rule=rule6)
        assert rep.first_deviating_order is None

    def test_flat_no_deviation(self, flat2, rule6):
        rep = CMP.rigidity_probe(flat2, 0.0, rule=rule6)
        assert rep.first_deviating_order is None

    def test_section6_deviates_at_order_four_negative(self, section6_pot, rule6):
        rep = CMP.rigidity_probe(section6_pot, -1.2, rule=rule6)
        assert rep.first_deviating_order == 4
        assert rep.sign == -1


class TestFlowQuality:
    def test_gates(self, section6_flow):
        q = section6_flow.quality()
        assert q["wronskian"] < 1e-8
        assert q["frame"] < 1e-9
        assert q["speed"] < 1e-9

    def test_thread_count_does_not_change_results(self, flat2):
        from kahlercomp.sphere import build_rule
        rule = build_rule(2, 4)
        serial = CMP.SphereFlow(flat2, np.zeros(2), 0.03, rule=rule, threads=1)
        parallel = CMP.SphereFlow(flat2, np.zeros(2), 0.03, rule=rule, threads=4)
        assert serial.ball_volume(0.03) == parallel.ball_volume(0.03)
        assert serial.average_laplacian(0.02) == parallel.average_laplacian(0.02)

    def test_three_complex_dimensions(self):
        from kahlercomp.sphere import build_rule
        pot = P.flat(3)
        rule = build_rule(3, 4)
        flow = CMP.SphereFlow(pot, np.zeros(3), 0.0205, rule=rule)
        rep = CMP.check_average_laplacian(pot, 0.0, r_grid=[0.01, 0.02],
                                          rule=rule, flow=flow)
        assert rep.verdict == "holds"
        assert max(abs(r["margin"]) for r in rep.rows) < 1e-9
