"""Tests for the feeder-wide model, the stability certificate and the compact closed loop."""

from dataclasses import replace

import numpy as np
import pytest

from feederctl.exceptions import ConfigurationError
from feederctl.models import ControllerConfig, PartitionConfig, ScenarioConfig, SyntheticFeederConfig
from feederctl.feeder import synthetic_radial_feeder
from feederctl.presets import preset_path
from feederctl.sim import ScenarioSetup
from feederctl.stability import (
    AreaBlock,
    CertificateInputs,
    build_certificate,
    build_global_K,
    closed_loop_constant,
    closed_loop_operator,
    equilibrium_residual,
    iterate_closed_loop,
    load_sensitivities,
    save_sensitivities,
)

UNIT_GAINS = {"lambda": 1.0, "mu": 1.0, "eta": 1.0, "psi": 1.0, "gamma": 1.0, "nu": 1.0, "zeta": 1.0}

CERTIFIED_OVERRIDES = [
    "controller.alpha=1e-6",
    "controller.r_dual=10",
    'controller.gains={"lambda": 1, "mu": 1, "eta": 1, "psi": 1, "gamma": 1, "nu": 1, "zeta": 1}',
    'controller.reg_coefficients={"lambda": 1, "mu": 1, "eta": 1, "psi": 1, "gamma": 1, "nu": 1, "zeta": 1}',
]


def _make_block(area_id: str, parent, r: float, rng: np.random.Generator, n_parent_x: int = 0) -> AreaBlock:
    return AreaBlock(
        area_id=area_id,
        parent=parent,
        C=rng.normal(size=(3, 2)),
        D=np.zeros((3, n_parent_x)),
        b=np.zeros(3),
        K_local=rng.normal(size=(2, 2)),
        alpha=np.full(3, 0.01),
        r_dual=np.full(3, r),
        r_primal=0.0,
        m=40.0,
        c2=np.full(2, 20.0),
        c1=np.zeros(2),
        lower=np.full(2, -1e6),
        upper=np.full(2, 1e6),
    )


def _decoupled_inputs(r_first: float, r_second: float) -> CertificateInputs:
    rng = np.random.default_rng(5)
    first = _make_block("A", None, r_first, rng)
    second = _make_block("B", "A", r_second, rng, n_parent_x=2)
    K = {
        ("A", "A"): first.K_local,
        ("A", "B"): np.zeros((2, 2)),
        ("B", "A"): np.zeros((2, 2)),
        ("B", "B"): second.K_local,
    }
    return CertificateInputs(
        blocks=(first, second),
        K=K,
        k={"A": np.zeros(2), "B": np.zeros(2)},
        adjacency=np.array([[0.0, 1.0], [0.0, 0.0]]),
    )


def _make_two_area_setup(seed: int) -> ScenarioSetup:
    """Seeded two-area generated feeder with only tracking constraints and uniform costs."""
    rng = np.random.default_rng(seed)
    feeder, partition = synthetic_radial_feeder(
        SyntheticFeederConfig(
            areas=[{"id": "CA1"}, {"id": "CA2", "parent": "CA1"}],
            buses_per_area=int(rng.integers(3, 7)),
            ders_per_area=int(rng.integers(1, 4)),
            seed=seed,
        )
    )
    areas = [area.model_copy(update={"monitored_buses": [], "monitored_lines": []}) for area in partition.areas]
    partition = partition.model_copy(update={"areas": areas})
    scenario = ScenarioConfig(
        feeder="generated",
        partition="generated",
        duration_s=1.0,
        controller=ControllerConfig(alpha=1e-3, r_dual=10.0, gains=UNIT_GAINS, reg_coefficients=UNIT_GAINS),
        reference=[{"time_s": 0.0, "dp_w": 50e3}],
    )
    return ScenarioSetup.from_config(scenario, feeder, partition)


class TestGlobalModel:
    def test_diagonal_block_matches_local_model(self, two_area_setup):
        model = two_area_setup.global_model
        for area_id in two_area_setup.tree.order:
            np.testing.assert_array_equal(model.block(area_id, area_id), model.local_model(area_id).K)

    def test_downstream_area_ignores_upstream_decisions(self, two_area_setup):
        model = two_area_setup.global_model
        assert np.linalg.norm(model.block("CA2", "CA1")) < np.linalg.norm(model.block("CA2", "CA2"))

    def test_physical_view_zeroes_vder_columns(self, two_area_setup):
        model = two_area_setup.global_model
        transfer = model.block("CA1", "CA1")
        physical = model.block("CA1", "CA1", "physical")
        np.testing.assert_array_equal(physical[:, 2:], 0.0)
        np.testing.assert_array_equal(physical[:, :2], transfer[:, :2])
        # VDER stands for an import at n3, so raising it raises the head import
        assert transfer[:3, 2].sum() > 0.95

    def test_rebuild_with_smaller_step_agrees(self, two_area_setup):
        setup = two_area_setup
        rebuilt = build_global_K(setup.model, setup.tree, setup.operating_point, setup.scopes, epsilon=500.0)
        assert rebuilt.order == setup.global_model.order
        for key, block in setup.global_model.blocks.items():
            scale = max(float(np.max(np.abs(block), initial=0.0)), 1.0)
            np.testing.assert_allclose(rebuilt.blocks[key], block, rtol=1e-3, atol=1e-6 * scale)

    def test_unknown_vder_model(self, two_area_setup):
        with pytest.raises(ValueError, match="Unknown VDER model"):
            two_area_setup.global_model.with_vder_model("ideal")

    def test_area_without_ders_has_no_columns(self, five_bus_config):
        partition = PartitionConfig(
            areas=[{"id": "CA1", "interface_bus": "n1", "buses": ["n1", "n2", "n3", "n4", "n5"], "ders": []}]
        )
        scenario = ScenarioConfig(feeder="f", partition="p", duration_s=1.0)
        setup = ScenarioSetup.from_config(scenario, five_bus_config, partition)
        assert setup.global_model.block("CA1", "CA1").shape[1] == 0

    def test_sensitivity_archive_round_trip(self, two_area_setup, tmp_path):
        path = tmp_path / "sensitivities.npz"
        save_sensitivities(two_area_setup.global_model, path)
        loaded = load_sensitivities(path, two_area_setup.tree, two_area_setup.scopes)
        for key, block in two_area_setup.global_model.blocks.items():
            np.testing.assert_array_equal(loaded.blocks[key], block)
        for area_id, offsets in two_area_setup.global_model.offsets.items():
            np.testing.assert_array_equal(loaded.offsets[area_id], offsets)

    def test_sensitivity_archive_must_match_tree(self, one_area_setup, two_area_setup, tmp_path):
        path = tmp_path / "sensitivities.npz"
        save_sensitivities(one_area_setup.global_model, path)
        with pytest.raises(ConfigurationError, match="covers areas"):
            load_sensitivities(path, two_area_setup.tree, two_area_setup.scopes)


class TestCertificate:
    def test_single_area_diagonal_is_dual_regularization(self, one_area_setup):
        report = build_certificate(one_area_setup.certificate_inputs())
        controller = one_area_setup.controllers["CA1"]
        assert report.M[0][0] == pytest.approx(float(np.max(controller.r_dual)), rel=1e-9)
        assert report.passed
        assert report.diagnostics[0].mismatch_norm == 0.0

    @pytest.mark.parametrize("form", ["printed", "derived"])
    def test_decoupled_areas(self, form):
        report = build_certificate(_decoupled_inputs(3.0, 5.0), form=form)
        np.testing.assert_allclose(report.M, [[3.0, 0.0], [0.0, 5.0]], atol=1e-12)
        assert report.lambda_min == pytest.approx(6.0)
        assert report.passed

    @pytest.mark.parametrize("form", ["printed", "derived"])
    def test_lambda_min_grows_with_regularization(self, form):
        setup = ScenarioSetup.from_file(preset_path("5bus-step-2ca"), overrides=CERTIFIED_OVERRIDES)
        inputs = setup.certificate_inputs()
        values = []
        diagonals = []
        for scale in (1.0, 10.0, 100.0, 1e4):
            scaled = replace(inputs, blocks=tuple(replace(b, r_dual=scale * b.r_dual) for b in inputs.blocks))
            report = build_certificate(scaled, form=form)
            values.append(report.lambda_min)
            diagonals.append(np.diag(report.M))
        assert values == sorted(values)
        for diagonal in diagonals[1:]:
            assert np.all(diagonal > diagonals[0])

    def test_two_area_defaults_fail(self, two_area_setup):
        report = build_certificate(two_area_setup.certificate_inputs())
        assert not report.passed
        assert report.exit_code == 2
        assert report.alpha_bar is None
        assert "FAILED" in report.to_text()

    def test_certified_gains(self):
        setup = ScenarioSetup.from_file(preset_path("5bus-step-1ca"), overrides=CERTIFIED_OVERRIDES)
        report = build_certificate(setup.certificate_inputs())
        assert report.passed
        assert report.gain_ratio == pytest.approx(1e-6)
        assert report.alpha_bar > report.gain_ratio
        assert report.gains_ok
        assert report.exit_code == 0
        assert report.max_gain_scale == pytest.approx(report.alpha_bar / report.gain_ratio)

    def test_gains_above_bound(self):
        overrides = CERTIFIED_OVERRIDES[1:] + ["controller.alpha=1e3"]
        setup = ScenarioSetup.from_file(preset_path("5bus-step-1ca"), overrides=overrides)
        report = build_certificate(setup.certificate_inputs())
        assert report.passed
        assert not report.gains_ok
        assert report.exit_code == 3

    def test_report_serializes(self, one_area_setup):
        report = build_certificate(one_area_setup.certificate_inputs(), form="derived")
        text = report.to_json()
        assert '"form": "derived"' in text
        assert "lambda_min(M + M^T)" in report.to_text()

    def test_unknown_form(self, one_area_setup):
        with pytest.raises(ValueError, match="Unknown certificate form"):
            build_certificate(one_area_setup.certificate_inputs(), form="exact")


class TestClosedLoop:
    def test_residual_positive_when_constraints_violated(self, one_area_setup):
        inputs = one_area_setup.certificate_inputs(t=1.0)
        assert equilibrium_residual(np.zeros(inputs.n_duals), inputs) > 0

    def test_residual_zero_when_feasible(self, one_area_setup):
        inputs = one_area_setup.certificate_inputs(t=-1.0)
        assert equilibrium_residual(np.zeros(inputs.n_duals), inputs) == 0.0

    def test_operator_vanishes_at_zero(self, one_area_setup):
        inputs = one_area_setup.certificate_inputs()
        np.testing.assert_allclose(closed_loop_operator(inputs, np.zeros(inputs.n_duals)), 0.0)
        assert closed_loop_constant(inputs).shape == (inputs.n_duals,)

    @pytest.mark.parametrize("seed", range(20))
    def test_certified_loops_converge(self, seed):
        setup = _make_two_area_setup(seed)
        inputs = setup.certificate_inputs(vder_model="physical")
        report = build_certificate(inputs, form="derived")
        assert report.passed
        d, converged, _ = iterate_closed_loop(inputs, alpha=0.5 * report.alpha_bar, ticks=10000)
        assert converged
        assert np.all(d >= 0)
        assert np.linalg.norm(d) > 0

    @pytest.mark.parametrize("seed", range(3))
    def test_strong_monotonicity(self, seed):
        setup = _make_two_area_setup(seed)
        inputs = setup.certificate_inputs(vder_model="physical")
        report = build_certificate(inputs, form="derived")
        modulus = 0.5 * report.lambda_min
        rng = np.random.default_rng(seed)
        for _ in range(50):
            d = rng.uniform(0.0, 1e4, inputs.n_duals)
            e = rng.uniform(0.0, 1e4, inputs.n_duals)
            delta = d - e
            inner = float(delta @ (closed_loop_operator(inputs, d) - closed_loop_operator(inputs, e)))
            assert inner >= modulus * float(delta @ delta) - 1e-6 * max(1.0, float(delta @ delta))
