# -*- coding: utf-8 -*-

from enum import IntEnum


APP_NAME = 'ccstat'
CLI_NAME = 'ccstat'

# Artifact schema version written to and required from every JSON document
SCHEMA_VERSION = 1

# Env var that caps verification parallelism
THREADS_ENV = 'CCSTAT_THREADS'

# Env var naming an extra config file merged over the user config
CONFIG_ENV = 'CCSTAT_CONFIG'

# Rows per random substream block; sample i lives in block i // SUBSTREAM_BLOCK
SUBSTREAM_BLOCK = 1024


class ExitCode(IntEnum):
    ok = 0
    error = 1
    infeasible = 2
    gate = 3
    io = 4
