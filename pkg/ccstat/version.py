# -*- coding: utf-8 -*-

from importlib.metadata import PackageNotFoundError, version

from .constants import APP_NAME


DEV_VERSION = '0.0.0.dev0'


def package_version() -> str:
    """Installed distribution version, or the dev marker for a source checkout
    """

    try:
        return version(APP_NAME)
    except PackageNotFoundError:  # pragma: no cover
        return DEV_VERSION


__version__ = package_version()
