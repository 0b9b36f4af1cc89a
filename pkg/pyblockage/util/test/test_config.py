import os

import pytest

import pyblockage
from pyblockage.util import config


@pytest.mark.parametrize('string, value', [('None', None), ('True', True),
                                           ('False', False), ('3', 3),
                                           ('1e-8', 1e-8), ('-120.0', -120.0),
                                           ('WARNING', 'WARNING')])
def test_string_to_value(string, value):
    assert config.string_to_value(string) == value
    assert type(config.string_to_value(string)) is type(value)


def test_template_defaults():
    template = os.path.join(os.path.dirname(pyblockage.__file__),
                            'config_template.ini')
    cfg = config.load_config(template)
    assert cfg['rank'] == 2
    assert cfg['threshold_db'] == 10.0
    assert cfg['n_workers'] == 1
    assert cfg['progress'] is False


def test_user_file_overrides_some_options(tmp_path):
    """Options missing from a user file keep their default values"""
    path = tmp_path / 'pyblockagerc'
    path.write_text('[DIRS]\noutput_root = ~/blockage\n\n'
                    '[ANALYSIS]\nthreshold_db = 20\nhysteresis_db = 3.5\n')
    cfg = config.load_config(str(path))
    assert cfg['threshold_db'] == 20
    assert cfg['hysteresis_db'] == 3.5
    assert cfg['max_rmse_db'] == 1.5
    assert cfg['log_level'] == 'WARNING'
    assert cfg['output_root'].endswith('blockage')
    assert not cfg['output_root'].startswith('~')


def test_no_file_gives_defaults(tmp_path):
    cfg = config.load_config(str(tmp_path / 'missing.ini'))
    assert cfg['output_root'] is None
    assert cfg['tol'] == 1e-8
