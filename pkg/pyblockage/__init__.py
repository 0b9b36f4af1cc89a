"""
pyblockage

Simulation and tensor analysis of dynamic human blockage on indoor
60 GHz links measured with phased-array beam sweeps.
"""
import logging

from pyblockage._version import __version__
from pyblockage.util.config import load_config

logging.getLogger(__name__).addHandler(logging.NullHandler())
config = load_config()
