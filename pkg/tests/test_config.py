# -*- coding: utf-8 -*-

import pytest

from ccstat.config import (
    DEFAULT_CONFIG_PATH,
    ConfigPaths,
    LoadConfigError,
    UpdateConfigError,
    load_config,
    load_document,
    verify_threads,
)


def test_layers_merge_in_order(tmp_path):
    user = tmp_path / 'user.yaml'
    user.write_text('solver:\n  max_iter: 50\nscenario:\n  beta: 1.0e-4\n')
    extra = tmp_path / 'extra.yaml'
    extra.write_text('solver:\n  max_iter: 75\n')

    cfg = load_config(ConfigPaths(default_path=DEFAULT_CONFIG_PATH, user_path=user, env_path=extra))

    assert cfg.solver.max_iter == 75
    assert cfg.solver.kkt_tol == 1e-8
    assert cfg.scenario.beta == 1e-4
    assert set(cfg.__config_paths__) == {'default', 'user', 'env'}


def test_missing_user_config_is_skipped(tmp_path):
    cfg = load_config(ConfigPaths(default_path=DEFAULT_CONFIG_PATH, user_path=tmp_path / 'none.yaml', env_path=None))

    assert cfg.cwh.horizon == 5
    assert 'user' not in cfg.__config_paths__


def test_missing_env_config_is_an_error(tmp_path):
    paths = ConfigPaths(default_path=DEFAULT_CONFIG_PATH, user_path=tmp_path / 'none.yaml',
                        env_path=tmp_path / 'absent.yaml')

    with pytest.raises(LoadConfigError):
        load_config(paths)


def test_unparsable_layer(tmp_path):
    user = tmp_path / 'user.yaml'
    user.write_text('solver: [unclosed\n')

    with pytest.raises(LoadConfigError):
        load_config(ConfigPaths(default_path=DEFAULT_CONFIG_PATH, user_path=user, env_path=None))


def test_documents_resolve_against_config(tmp_path):
    path = tmp_path / 'doc.yaml'
    path.write_text('trials: ${defaults.verify.trials}\nname: demo\n')

    doc = load_document(path)

    assert doc.trials == 100000
    assert 'defaults' not in doc


def test_bad_thread_count(monkeypatch):
    monkeypatch.setenv('CCSTAT_THREADS', 'many')

    with pytest.raises(UpdateConfigError):
        verify_threads()
