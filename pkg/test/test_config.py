"""Tests for effent.config."""
import json
import logging
import os

import pytest

from effent.errors import ValidationError
from effent.config import Config

CONFIG_FILE = os.path.join(os.path.dirname(__file__), 'integration_test', 'effent.json')


class TestConfig:
    def test_defaults(self, monkeypatch):
        monkeypatch.delenv('EFFENT_SEED', raising=False)
        config = Config()
        assert config.log_level == logging.ERROR
        assert config.tol is None
        assert config.seed == 0
        assert config.quadrature_points == 2048
        assert config.roof_options().restarts == 16
        assert config.seesaw_options().restarts == 8

    def test_from_file(self):
        config = Config.from_file(CONFIG_FILE)
        assert config.log_level == logging.DEBUG
        assert config.seed == 7
        assert config.quadrature_points == 1024
        roof = config.roof_options()
        assert (roof.restarts, roof.max_iters, roof.seed) == (4, 300, 7)
        assert config.seesaw_options().rounds == 30

    def test_overrides_take_precedence(self):
        config = Config.from_file(CONFIG_FILE, {'seed': 3, 'log_level': None, 'roof.restarts': 2})
        assert config.seed == 3
        assert config.log_level == logging.DEBUG
        assert config.roof_options().restarts == 2

    def test_seed_from_environment(self, monkeypatch):
        monkeypatch.setenv('EFFENT_SEED', '12')
        assert Config().seed == 12
        assert Config({'seed': 5}).seed == 5
        monkeypatch.setenv('EFFENT_SEED', 'twelve')
        with pytest.raises(ValidationError):
            _ = Config().seed

    def test_unknown_options_are_ignored(self, caplog):
        with caplog.at_level(logging.WARNING, logger='effent.config'):
            config = Config({'colour': 'blue', 'roof': {'speed': 3}})
        assert 'colour' not in config.active_config
        assert 'speed' not in config.active_config['roof']
        assert 'colour' in caplog.text
        assert 'roof.speed' in caplog.text

    @pytest.mark.parametrize('options', [{'log_level': 'loud'}, {'tol': -1.0}, {'quadrature_points': 16}, {'seed': 1.5}, {'tol': 'small'},
                                         {'roof': []}, {'roof': {'restarts': True}}])
    def test_invalid_options(self, options):
        with pytest.raises(ValidationError):
            Config(options)

    def test_invalid_option_values_reach_the_options(self):
        with pytest.raises(ValidationError):
            Config({'roof': {'restarts': 0}}).roof_options()

    def test_file_without_section(self, tmp_path):
        path = tmp_path / 'config.json'
        path.write_text(json.dumps({'effent': 'on'}), encoding='utf-8')
        with pytest.raises(ValidationError):
            Config.from_file(str(path))

    def test_no_file(self):
        assert Config.from_file(None).active_config['quadrature_points'] == 2048
