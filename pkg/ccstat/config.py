# -*- coding: utf-8 -*-

from typing import NamedTuple, Optional
from pathlib import Path
import os

import appdirs
from omegaconf import DictConfig, OmegaConf

from .constants import APP_NAME, CONFIG_ENV, THREADS_ENV


ROOT_PATH = Path(__file__).parent
DEFAULT_CONFIG_PATH = ROOT_PATH / 'config.yaml'
USER_CONFIG_PATH = Path(appdirs.user_config_dir(APP_NAME)) / 'config.yaml'


class ConfigError(Exception):
    pass


class LoadConfigError(ConfigError):
    pass


class UpdateConfigError(ConfigError):
    pass


class ConfigFileDoesNotExistError(ConfigError):
    pass


class ConfigLayer(NamedTuple):
    label: str
    path: Path
    required: bool


class ConfigPaths(NamedTuple):
    """Config files in merge order
    """

    default_path: Path  # package defaults
    user_path: Path  # user app dir
    env_path: Optional[Path]  # file named by CCSTAT_CONFIG

    def layers(self) -> list[ConfigLayer]:
        layers = [
            ConfigLayer('default', self.default_path, True),
            ConfigLayer('user', self.user_path, False),
        ]
        if self.env_path is not None:
            layers.append(ConfigLayer('env', self.env_path, True))
        return layers


def _env_config_path() -> Optional[Path]:
    value = os.getenv(CONFIG_ENV)
    return Path(value).expanduser() if value else None


config_paths = ConfigPaths(
    default_path=DEFAULT_CONFIG_PATH,
    user_path=USER_CONFIG_PATH,
    env_path=_env_config_path(),
)


def merge_layer(cfg: Optional[DictConfig], layer: ConfigLayer) -> Optional[DictConfig]:
    """Merge one config file over ``cfg`` and record its path under ``__config_paths__``

    A missing optional layer leaves ``cfg`` unchanged.

    Raises
    ------
    ConfigFileDoesNotExistError : A required layer file does not exist.
    UpdateConfigError : The layer file cannot be parsed or merged.

    """

    if not layer.path.is_file():
        if layer.required:
            raise ConfigFileDoesNotExistError(f"{layer.label} config '{layer.path}' does not exist.")
        return cfg

    try:
        layer_cfg = OmegaConf.load(layer.path)
        cfg = layer_cfg if cfg is None else OmegaConf.merge(cfg, layer_cfg)
    except Exception as err:
        raise UpdateConfigError(f"Cannot merge {layer.label} config '{layer.path}': {err}") from err

    if '__config_paths__' not in cfg:
        cfg.__config_paths__ = {}
    cfg.__config_paths__[layer.label] = str(layer.path)

    return cfg


def load_config(paths: ConfigPaths = config_paths) -> DictConfig:
    """Merge the package defaults, the user config and the ``CCSTAT_CONFIG`` file

    Raises
    ------
    LoadConfigError : Some layer cannot be loaded.

    """

    cfg = None
    for layer in paths.layers():
        try:
            cfg = merge_layer(cfg, layer)
        except ConfigError as err:
            raise LoadConfigError(f'{err}') from err

    return cfg


def load_document(path: Path) -> DictConfig:
    """Load a YAML or JSON document and resolve its interpolations against the global config

    Raises
    ------
    ConfigFileDoesNotExistError : The file does not exist.
    LoadConfigError : The file cannot be parsed.

    """

    if not path.is_file():
        raise ConfigFileDoesNotExistError(f"'{path}' does not exist.")

    try:
        doc = OmegaConf.load(path)
        merged = OmegaConf.merge({'defaults': config}, doc)
        resolved = OmegaConf.to_container(merged, resolve=True)
    except Exception as err:
        raise LoadConfigError(f"Cannot load '{path}': {err}") from err

    resolved.pop('defaults', None)
    return OmegaConf.create(resolved)


def verify_threads() -> int:
    """Return the number of verification worker threads

    ``verify.threads`` (``CCSTAT_THREADS``) caps the CPU count.
    """

    cpus = os.cpu_count() or 1
    threads = config.verify.threads
    if threads in (None, '', 'null'):
        return cpus
    try:
        return max(1, min(int(threads), cpus))
    except ValueError as err:
        raise UpdateConfigError(f"{THREADS_ENV} must be an integer, got '{threads}'") from err


# Load the config globally
config = load_config()
