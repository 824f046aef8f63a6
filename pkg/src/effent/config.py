"""
Module for the effent configuration: defaults, an optional JSON file with an "effent" section and
command line overrides, merged into one active configuration.
"""
from __future__ import annotations
from typing import TYPE_CHECKING

import logging
import os

from effent.errors import ValidationError
from effent.serialization import load_json
from effent.entanglement import RoofOptions
from effent.games import SeesawOptions

if TYPE_CHECKING:
    from typing import Any, Dict, Optional

LOG: logging.Logger = logging.getLogger("effent.config")

SEED_ENVIRONMENT_VARIABLE: str = 'EFFENT_SEED'

LOG_LEVELS: Dict[str, int] = {'debug': logging.DEBUG, 'info': logging.INFO, 'warning': logging.WARNING, 'error': logging.ERROR,
                              'critical': logging.CRITICAL}

ROOF_KEYS: Dict[str, type] = {'restarts': int, 'max_iters': int, 'tol': float, 'terms': int, 'workers': int}
SEESAW_KEYS: Dict[str, type] = {'rounds': int, 'inner_iters': int, 'restarts': int, 'tol': float, 'workers': int}


def _typed(value: Any, kind: type, name: str) -> Any:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(f'Configuration option {name} must be a number, got {value!r}')
    if kind is int:
        if int(value) != value:
            raise ValidationError(f'Configuration option {name} must be an integer, got {value!r}')
        return int(value)
    return float(value)


class Config():
    """
    Active configuration of one effent run.

    Attributes:
    -----------
    active_config : Dict[str, Any]
        Defaults merged with the configuration file and the overrides.
    """
    def __init__(self, config: Optional[Dict[str, Any]] = None, overrides: Optional[Dict[str, Any]] = None) -> None:
        config = config or {}
        overrides = {key: value for key, value in (overrides or {}).items() if value is not None}
        LOG.info('Loading effent configuration %s', config)
        self.active_config: Dict[str, Any] = {'log_level': 'error', 'tol': None, 'seed': None, 'quadrature_points': 2048, 'roof': {}, 'seesaw': {}}
        for key in config:
            if key not in self.active_config:
                LOG.warning('Ignoring unknown configuration option %s', key)

        if 'log_level' in config and config['log_level'] is not None:
            self.active_config['log_level'] = config['log_level']
        if 'tol' in config and config['tol'] is not None:
            self.active_config['tol'] = _typed(config['tol'], float, 'tol')
        if 'seed' in config and config['seed'] is not None:
            self.active_config['seed'] = _typed(config['seed'], int, 'seed')
        if 'quadrature_points' in config and config['quadrature_points'] is not None:
            self.active_config['quadrature_points'] = _typed(config['quadrature_points'], int, 'quadrature_points')
        for section, keys in (('roof', ROOF_KEYS), ('seesaw', SEESAW_KEYS)):
            values: Any = config.get(section, {})
            if not isinstance(values, dict):
                raise ValidationError(f'Configuration section {section} must be an object')
            for key, value in values.items():
                if key not in keys:
                    LOG.warning('Ignoring unknown configuration option %s.%s', section, key)
                    continue
                self.active_config[section][key] = _typed(value, keys[key], f'{section}.{key}')

        for key, value in overrides.items():
            if '.' in key:
                section, option = key.split('.', 1)
                self.active_config[section][option] = value
            else:
                self.active_config[key] = value

        if self.active_config['log_level'] not in LOG_LEVELS:
            raise ValidationError(f'Invalid log_level {self.active_config["log_level"]!r}, expected one of {", ".join(LOG_LEVELS)}')
        if self.active_config['tol'] is not None and self.active_config['tol'] < 0:
            raise ValidationError(f'tol must not be negative, got {self.active_config["tol"]}')
        if self.active_config['quadrature_points'] < 64:
            raise ValidationError(f'quadrature_points must be at least 64, got {self.active_config["quadrature_points"]}')

    @classmethod
    def from_file(cls, path: Optional[str], overrides: Optional[Dict[str, Any]] = None) -> Config:
        """
        Loads the "effent" section of a JSON configuration file; no path gives the defaults.
        """
        if path is None:
            return cls({}, overrides)
        document: Any = load_json(path)
        if not isinstance(document, dict) or not isinstance(document.get('effent', {}), dict):
            raise ValidationError(f'{path} must contain a JSON object with an "effent" section')
        return cls(document.get('effent', {}), overrides)

    @property
    def log_level(self) -> int:
        """Numeric logging level."""
        return LOG_LEVELS[self.active_config['log_level']]

    @property
    def tol(self) -> Optional[float]:
        """Validity tolerance, None for the library default."""
        return self.active_config['tol']

    @property
    def seed(self) -> int:
        """
        Seed of every stochastic component: configured seed (command line or file), else EFFENT_SEED, else 0.
        """
        if self.active_config['seed'] is not None:
            return int(self.active_config['seed'])
        environment: Optional[str] = os.environ.get(SEED_ENVIRONMENT_VARIABLE)
        if environment is not None and environment.strip() != '':
            try:
                return int(environment)
            except ValueError as err:
                raise ValidationError(f'{SEED_ENVIRONMENT_VARIABLE} must be an integer, got {environment!r}') from err
        return 0

    @property
    def quadrature_points(self) -> int:
        """Number of points of the g-factor quadrature."""
        return int(self.active_config['quadrature_points'])

    def roof_options(self) -> RoofOptions:
        """Convex roof budget of this run."""
        return RoofOptions(seed=self.seed, **self.active_config['roof'])

    def seesaw_options(self) -> SeesawOptions:
        """Seesaw budget of this run."""
        return SeesawOptions(seed=self.seed, **self.active_config['seesaw'])
