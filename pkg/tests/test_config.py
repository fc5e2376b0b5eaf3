"""
Tests for the settings sections and experiment documents.
"""

import json

import pytest

from config import (
    AppConfig,
    config,
    get_analysis_config,
    get_integrator_config,
    get_lower_bound_config,
    get_ode_config,
    get_output_config,
)
from config.experiment import ExperimentConfig, KineticEntry, MethodEntry
from utils.exceptions import ConfigurationError, FileError, MissingFieldError


class TestSettings:
    """Test the settings sections."""

    def test_independent_instances_share_defaults(self):
        """Separate AppConfig instances carry the same default values."""
        assert AppConfig().ode.REL_TOL == AppConfig().ode.REL_TOL == 1e-9

    def test_default_values(self):
        """Defaults that results depend on."""
        assert get_integrator_config().SUBSOLVER_TOL == 1e-10
        assert get_integrator_config().MONOTONE_SLACK == 1e-12
        assert get_ode_config().METHOD == "RK45"
        assert get_ode_config().ABS_TOL == 1e-12
        assert get_lower_bound_config().TRAPPING_FACTORS == (1.5, 2.0, 4.0)
        assert get_analysis_config().AUTO_STEP_FRACTION == 0.9
        assert get_analysis_config().RATE_R2_MIN == 0.95
        assert get_output_config().FLOAT_FORMAT == ".17g"

    def test_all_sections_accessible(self):
        """Every section is an attribute of the global config."""
        for name in ("kinetic", "objective", "integrator", "ode", "lower_bound",
                     "analysis", "output", "logging", "threading"):
            assert hasattr(config, name)

    def test_overrides_apply_in_place(self):
        """Known fields are overridden; tuples stay tuples."""
        settings = AppConfig()
        settings.apply_overrides({'ode': {'REL_TOL': 1e-6},
                                  'lower_bound': {'TRAPPING_FACTORS': [2.0, 3.0]}})
        assert settings.ode.REL_TOL == 1e-6
        assert settings.lower_bound.TRAPPING_FACTORS == (2.0, 3.0)

    def test_unknown_section_rejected(self):
        with pytest.raises(ConfigurationError, match="Unknown settings section"):
            AppConfig().apply_overrides({'camera': {}})

    def test_unknown_field_rejected(self):
        with pytest.raises(ConfigurationError, match="Unknown setting ode.FOV"):
            AppConfig().apply_overrides({'ode': {'FOV': 45}})

    def test_save_and_load(self, tmp_path):
        """Saved settings load back with the same values."""
        settings = AppConfig()
        settings.integrator.SUBSOLVER_MAX_ITERS = 17
        path = tmp_path / "settings.json"
        settings.save_to_file(str(path))

        loaded = AppConfig.load_from_file(str(path))
        assert loaded.integrator.SUBSOLVER_MAX_ITERS == 17
        assert loaded.to_dict() == settings.to_dict()

    def test_load_malformed_file(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json", encoding="utf-8")
        with pytest.raises(ConfigurationError, match="Cannot read settings file"):
            AppConfig.load_from_file(str(path))

    def test_update_from_is_seen_by_accessors(self):
        """Accessors read the live global config."""
        override = AppConfig()
        override.analysis.AUTO_STEP_FRACTION = 0.5
        config.update_from(override)
        assert get_analysis_config().AUTO_STEP_FRACTION == 0.5


class TestExperimentConfig:
    """Test parsing of experiment documents."""

    def test_minimal_document(self):
        """Defaults fill everything but the objective."""
        experiment = ExperimentConfig.from_dict({'objective': 'quartic2d'})
        assert experiment.objective_name == "quartic2d"
        assert experiment.epsilon == "auto"
        assert experiment.gamma == 0.5
        assert experiment.kinetic.kind == "matched"
        assert experiment.methods == []
        assert experiment.stop.max_iters == 1000

    def test_methods_as_names_and_entries(self):
        experiment = ExperimentConfig.from_dict({
            'objective': {'name': 'power1d', 'params': {'b': 4}},
            'methods': ['implicit', {'method': 'explicit1', 'epsilon': 0.01, 'gamma': 0.3,
                                     'kinetic': {'a': 4 / 3, 'A': 4 / 3}}],
        })
        implicit, explicit = experiment.methods
        assert implicit == MethodEntry("implicit")
        assert explicit.epsilon == 0.01
        assert explicit.gamma == 0.3
        assert explicit.kinetic.kind == "power"
        assert explicit.kinetic.a == pytest.approx(4 / 3)

    @pytest.mark.parametrize("value, kind", [
        ("matched", "matched"),
        ("classical", "classical"),
        ({'relativistic': True}, "relativistic"),
        ({'classical': True, 'q': 4 / 3}, "classical"),
        ({'quadratic': [[2.0, 0.0], [0.0, 1.0]]}, "quadratic"),
        ({'a': 2, 'A': 1.5, 'q': 2}, "power"),
    ])
    def test_kinetic_forms(self, value, kind):
        assert KineticEntry.from_value(value).kind == kind

    def test_power_kinetic_needs_both_exponents(self):
        with pytest.raises(MissingFieldError, match="needs both 'a' and 'A'"):
            KineticEntry.from_value({'a': 2})

    @pytest.mark.parametrize("epsilon", [0.0, -1.0, "fast", True])
    def test_invalid_epsilon(self, epsilon):
        with pytest.raises(ConfigurationError):
            ExperimentConfig.from_dict({'objective': 'quartic2d', 'epsilon': epsilon})

    def test_keyword_epsilons(self):
        assert ExperimentConfig.from_dict({'objective': 'quartic2d', 'epsilon': 'inverse_l0'}).epsilon == "inverse_l0"

    def test_unknown_method(self):
        with pytest.raises(ConfigurationError, match="Unknown method 'adam'"):
            ExperimentConfig.from_dict({'objective': 'quartic2d', 'methods': ['adam']})

    def test_missing_objective(self):
        with pytest.raises(MissingFieldError, match="objective"):
            ExperimentConfig.from_dict({'methods': ['implicit']})

    def test_empty_method_list_rejected_on_demand(self):
        experiment = ExperimentConfig.from_dict({'objective': 'quartic2d', 'methods': []})
        with pytest.raises(ConfigurationError, match="no methods"):
            experiment.require_methods()

    def test_lower_and_compare_sections(self):
        experiment = ExperimentConfig.from_dict({
            'objective': {'name': 'normFour'},
            'lower': {'a': 2, 'b': 4, 'gamma': 1, 'mode': 'eta'},
            'compare': {'dims': [2, 10, 50], 'tolerance': 1e-6, 'gd_step': 'doubling'},
        })
        assert experiment.lower.mode == "eta"
        assert experiment.compare.dims == (2, 10, 50)
        assert experiment.compare.gd_step == "doubling"

    def test_invalid_lower_mode(self):
        with pytest.raises(ConfigurationError, match="Unknown lower-bound mode"):
            ExperimentConfig.from_dict({'objective': 'quartic2d', 'lower': {'mode': 'fast'}})

    def test_from_file(self, tmp_path):
        path = tmp_path / "experiment.json"
        path.write_text(json.dumps({'objective': 'quartic2d', 'x0': [1, 1], 'seed': 7}), encoding="utf-8")
        experiment = ExperimentConfig.from_file(path)
        assert experiment.x0 == [1, 1]
        assert experiment.seed == 7

    def test_from_missing_file(self, tmp_path):
        with pytest.raises(FileError):
            ExperimentConfig.from_file(tmp_path / "absent.json")
