"""Tests for area measurements and finite-difference sensitivities."""

import numpy as np
import pytest

from feederctl.exceptions import ConfigurationError, LinearizationError
from feederctl.feeder import (
    AreaScope,
    FeederModel,
    Injector,
    MeasurementVector,
    OperatingPoint,
    PowerFlowSolver,
    SensitivityModel,
    line_flows,
    linearize,
    measure,
)
from feederctl.models import FeederConfig


def _root_scope(model: FeederModel, monitored_buses=("n2", "n3", "n4", "n5"), monitored_lines=("L3",)) -> AreaScope:
    return AreaScope.build(model, "CA1", "n1", list(model.buses), list(monitored_buses), list(monitored_lines))


def _make_lossless_feeder() -> FeederModel:
    """Three-phase source s feeding bus b through a purely reactive line, DER at b."""
    config = FeederConfig.model_validate(
        {
            "buses": [
                {"id": "s", "phases": ["a", "b", "c"], "base_voltage_v": 2400.0},
                {"id": "b", "phases": ["a", "b", "c"], "base_voltage_v": 2400.0},
            ],
            "lines": [{"id": "L", "from_bus": "s", "to_bus": "b", "z_self_ohm": [0.0, 0.3], "ampacity_a": 400}],
            "loads": [{"bus": "b", "phase": ph, "p_w": 50e3, "q_var": 10e3} for ph in "abc"],
            "slack": {"bus": "s"},
            "ders": [{"id": "DER1", "bus": "b"}],
        }
    )
    return FeederModel.from_config(config)


def _operating_point(model: FeederModel) -> OperatingPoint:
    injections = model.load_injections()
    result = PowerFlowSolver(model).solve(injections)
    return OperatingPoint(injections=injections, voltages=result.voltages)


def _five_bus_injectors(model: FeederModel):
    return [Injector(der.id, der.bus, der.phases) for der in model.ders.values()]


class TestAreaScope:
    def test_root_scope(self, five_bus_model):
        scope = _root_scope(five_bus_model)
        assert scope.interface_lines == (("L1", True),)
        assert scope.n_phases == 3
        assert scope.n_v == 12
        assert scope.n_i == 3
        np.testing.assert_allclose(scope.current_limits(five_bus_model), [135.0] * 3)
        np.testing.assert_allclose(scope.current_limits(five_bus_model, {"L3": 123.0}), [123.0] * 3)
        np.testing.assert_allclose(scope.current_limits(five_bus_model, 99.0), [99.0] * 3)

    def test_child_scope_interface(self, five_bus_model):
        scope = AreaScope.build(five_bus_model, "CA2", "n3", ["n3", "n4", "n5"], ["n4", "n5"], ["L3"])
        assert sorted(scope.interface_lines) == [("L3", True), ("L4", True)]

    def test_unknown_monitored_bus(self, five_bus_model):
        with pytest.raises(ConfigurationError, match="monitored bus"):
            _root_scope(five_bus_model, monitored_buses=("n9",))

    def test_unknown_monitored_line(self, five_bus_model):
        with pytest.raises(ConfigurationError, match="monitored line"):
            _root_scope(five_bus_model, monitored_lines=("L9",))

    def test_interface_without_downstream_line(self, five_bus_model):
        with pytest.raises(ConfigurationError, match="no line leaves"):
            AreaScope.build(five_bus_model, "CA2", "n4", ["n4"], [], [])


class TestMeasure:
    def test_head_import_matches_slack_power(self, five_bus_model, five_bus_solution):
        y = measure(five_bus_model, five_bus_solution.voltages, _root_scope(five_bus_model))
        assert np.sum(y.p0) == pytest.approx(five_bus_solution.head_power.real, rel=1e-9)
        assert np.sum(y.q0) == pytest.approx(five_bus_solution.head_power.imag, rel=1e-9)
        assert np.all((y.v > 0.9) & (y.v < 1.0))

    def test_line_current_matches_ohms_law(self, five_bus_model, five_bus_solution):
        voltages = five_bus_solution.voltages
        y = measure(five_bus_model, voltages, _root_scope(five_bus_model))
        line = five_bus_model.lines["L3"]
        v_from = voltages[five_bus_model.bus_nodes("n3")]
        v_to = voltages[five_bus_model.bus_nodes("n5")]
        expected = np.abs(np.linalg.solve(line.z, v_from - v_to))
        np.testing.assert_allclose(y.i, expected, rtol=1e-2)

    def test_child_import_equals_downstream_demand(self, five_bus_model, five_bus_solution):
        voltages = five_bus_solution.voltages
        scope = AreaScope.build(five_bus_model, "CA2", "n3", ["n3", "n4", "n5"], ["n4", "n5"], [])
        y = measure(five_bus_model, voltages, scope)
        losses = line_flows(five_bus_model, voltages, "L3").losses_va + line_flows(five_bus_model, voltages, "L4").losses_va
        demand = 3 * (133333.33 + 256666.67)
        assert np.sum(y.p0) == pytest.approx(demand + losses.real, rel=1e-6)

    def test_stack_round_trip(self):
        y = MeasurementVector(p0=np.array([1.0, 2.0]), q0=np.array([3.0, 4.0]), v=np.array([0.99]), i=np.array([7.0]))
        np.testing.assert_array_equal(y.stack(), [1, 2, 3, 4, 0.99, 7])
        back = MeasurementVector.from_stack(y.stack(), 2, 1)
        np.testing.assert_array_equal(back.i, [7.0])
        assert y.is_finite()
        assert not MeasurementVector(np.array([np.nan]), np.zeros(1), np.zeros(0), np.zeros(0)).is_finite()


class TestLinearize:
    def test_lossless_line_gives_unit_transfer(self):
        model = _make_lossless_feeder()
        scope = AreaScope.build(model, "CA1", "s", ["s", "b"], ["b"], ["L"])
        sensitivity = linearize(model, _operating_point(model), [Injector("DER1", "b", ("a", "b", "c"))], scope)
        assert sensitivity.M.shape == (3, 2)
        np.testing.assert_allclose(sensitivity.M[:, 0].sum(), -1.0, atol=1e-6)
        np.testing.assert_allclose(sensitivity.M[:, 0], -1.0 / 3.0, atol=1e-6)
        # Reactive import falls by the injected var plus the change in line losses
        assert sensitivity.H[:, 1].sum() < -0.9

    def test_offsets_equal_base_measurements(self, five_bus_model):
        op = _operating_point(five_bus_model)
        scope = _root_scope(five_bus_model)
        sensitivity = linearize(five_bus_model, op, _five_bus_injectors(five_bus_model), scope)
        np.testing.assert_allclose(sensitivity.offsets, measure(five_bus_model, op.voltages, scope).stack())
        assert sensitivity.K.shape == (6 + 12 + 3, 6)
        assert sensitivity.injector_ids == ("DER1", "DER2", "DER3")

    def test_head_sensitivity_near_minus_one(self, five_bus_model):
        sensitivity = linearize(
            five_bus_model, _operating_point(five_bus_model), _five_bus_injectors(five_bus_model), _root_scope(five_bus_model)
        )
        p_columns = sensitivity.M[:, 0::2].sum(axis=0)
        assert np.all(p_columns < -0.95)
        assert np.all(p_columns > -1.1)
        # Injecting active power raises downstream voltages
        assert np.all(sensitivity.A[:, 0::2] > 0)

    def test_step_size_halving_is_stable(self, five_bus_model):
        op = _operating_point(five_bus_model)
        scope = _root_scope(five_bus_model)
        injectors = _five_bus_injectors(five_bus_model)
        coarse = linearize(five_bus_model, op, injectors, scope, epsilon=1000.0).K
        fine = linearize(five_bus_model, op, injectors, scope, epsilon=500.0).K
        assert np.linalg.norm(coarse - fine) <= 0.01 * np.linalg.norm(coarse)

    def test_local_accuracy(self, five_bus_model):
        op = _operating_point(five_bus_model)
        scope = _root_scope(five_bus_model)
        sensitivity = linearize(five_bus_model, op, _five_bus_injectors(five_bus_model), scope)
        solver = PowerFlowSolver(five_bus_model)
        base = measure(five_bus_model, op.voltages, scope)

        rng = np.random.default_rng(7)
        for _ in range(5):
            x = rng.uniform(-5e3, 5e3, size=6)
            outputs = {der: (x[2 * k], x[2 * k + 1]) for k, der in enumerate(five_bus_model.ders)}
            injections = op.injections + five_bus_model.der_injections(outputs)
            actual = measure(five_bus_model, solver.solve(injections, op.voltages).voltages, scope)
            predicted = sensitivity.predict(x)
            for name in ("p0", "q0", "v", "i"):
                true_change = getattr(actual, name) - getattr(base, name)
                error = getattr(predicted, name) - getattr(actual, name)
                assert np.linalg.norm(error) <= 0.05 * np.linalg.norm(true_change)

    def test_non_positive_epsilon(self, five_bus_model):
        with pytest.raises(LinearizationError, match="epsilon"):
            linearize(
                five_bus_model,
                _operating_point(five_bus_model),
                _five_bus_injectors(five_bus_model),
                _root_scope(five_bus_model),
                epsilon=0.0,
            )

    def test_stacked_model_split(self):
        K = np.arange(12.0).reshape(6, 2)
        offsets = np.arange(6.0)
        model = SensitivityModel.from_stacked(K, offsets, n_phases=1, n_v=3)
        np.testing.assert_array_equal(model.M, K[:1])
        np.testing.assert_array_equal(model.H, K[1:2])
        np.testing.assert_array_equal(model.A, K[2:5])
        np.testing.assert_array_equal(model.B, K[5:])
        np.testing.assert_array_equal(model.K, K)
        np.testing.assert_array_equal(model.offsets, offsets)
        np.testing.assert_array_equal(model.m, [0.0])
        np.testing.assert_array_equal(model.a, [2.0, 3.0, 4.0])

        predicted = model.predict(np.array([1.0, 0.0]))
        np.testing.assert_array_equal(predicted.p0, [0.0])
        np.testing.assert_array_equal(predicted.q0, [1.0 + 2.0])
        np.testing.assert_array_equal(predicted.v, [2.0 + 4.0, 3.0 + 6.0, 4.0 + 8.0])
        np.testing.assert_array_equal(predicted.i, [5.0 + 10.0])
