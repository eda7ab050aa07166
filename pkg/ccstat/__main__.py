# -*- coding: utf-8 -*-

"""
Use the module as CLI tool from Python interpreter directly::

    python -m ccstat --help

"""

from .cli import cli


if __name__ == '__main__':
    cli()
