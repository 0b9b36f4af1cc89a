"""
pyblockage configuration utility
"""
import configparser
import os
from pathlib import Path

import pyblockage


def get_config_file():
    """
    Find the configuration file. Locations are

    1. ~/.pyblockagerc/pyblockagerc
    2. <installation folder>/config.ini
    3. <installation folder>/config_template.ini

    Returns
    -------
    config_file : str
        Filepath of the ``pyblockage`` configuration file
    """
    config_files = [Path('~/.pyblockagerc/pyblockagerc').expanduser(),
                    Path(pyblockage.__file__).parent / 'config.ini',
                    Path(pyblockage.__file__).parent / 'config_template.ini']

    for f in config_files:
        if f.is_file():
            return str(f)


def load_config(config_file=None):
    """
    Read the configuration file.

    Parameters
    ----------
    config_file : str
        Explicit file to read. If not given, `get_config_file` picks one.

    Returns
    -------
    config : dict
        Dictionary containing configuration options. Missing options fall
        back to the values shipped in config_template.ini.
    """
    if config_file is None:
        config_file = get_config_file()

    config = configparser.ConfigParser()
    config.read_dict(_DEFAULTS)
    if config_file is not None:
        config.read(config_file)
    config_dict = {}

    root = config['DIRS']['output_root']
    if root == 'None':
        config_dict['output_root'] = None
    else:
        config_dict['output_root'] = os.path.expanduser(root)

    config_dict['log_level'] = config['LOGGING']['level'].upper()

    for opt in ('n_workers', 'progress'):
        config_dict[opt] = string_to_value(config['SIMULATION'][opt])

    for opt in ('rank', 'max_iters', 'tol', 'threshold_db', 'hysteresis_db',
                'max_rmse_db', 'floor_db'):
        config_dict[opt] = string_to_value(config['ANALYSIS'][opt])

    return config_dict


def string_to_value(string):
    '''
    Convert strings to a value

    Parameters
    ----------
    string : str
        String to be converted to a value
           * 'None' -> None
           * 'True' -> True
           * 'False' -> False
           * integer literal -> int
           * float literal -> float
           * [other] -> [unchanged]

    Returns
    -------
    value
        Value of `string`
    '''
    if string == 'None':
        value = None
    elif string == 'True':
        value = True
    elif string == 'False':
        value = False
    else:
        try:
            value = int(string)
        except ValueError:
            try:
                value = float(string)
            except ValueError:
                value = string

    return value


_DEFAULTS = {'DIRS': {'output_root': 'None'},
             'LOGGING': {'level': 'WARNING'},
             'SIMULATION': {'n_workers': '1',
                            'progress': 'False'},
             'ANALYSIS': {'rank': '2',
                          'max_iters': '500',
                          'tol': '1e-8',
                          'threshold_db': '10.0',
                          'hysteresis_db': '0.0',
                          'max_rmse_db': '1.5',
                          'floor_db': '-120.0'}}
