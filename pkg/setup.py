from setuptools import setup
import sys

with open("README.md", "r") as fh:
    long_description = fh.read()

# Read the version file
# https://martin-thoma.com/python-package-versions/
# https://stackoverflow.com/questions/436198/what-is-an-alternative-to-execfile-in-python-3/437857#437857
def execfile(filename, globals=None, locals=None):
    if globals is None:
        globals = sys._getframe(1).f_globals
    if locals is None:
        locals = sys._getframe(1).f_locals
    with open(filename, "rb") as fh:
        exec(compile(fh.read(), filename, 'exec'), globals, locals)

# execute the file
execfile('pyblockage/_version.py')

setup(
      name = "pyblockage",
      version = __version__,
      description = "Simulate and decompose beam-swept 60 GHz measurements "
                    "of dynamic human blockage.",
      long_description = long_description,
      long_description_content_type = "text/markdown",
      license = "MIT",
      classifiers = ["Programming Language :: Python :: 3",
                     "Operating System :: OS Independent",
                     "License :: OSI Approved :: MIT License",
                     "Development Status :: 3 - Alpha",
                     "Topic :: Scientific/Engineering",
                     "Topic :: Communications",
                     "Intended Audience :: Science/Research",
                     "Natural Language :: English"],
      keywords = "mmWave 60GHz blockage PARAFAC tensor channel-sounding",
      packages = ["pyblockage",
                  "pyblockage.analysis",
                  "pyblockage.data",
                  "pyblockage.sim",
                  "pyblockage.util"],
      package_data = {'pyblockage': ['config_template.ini'],
                      'pyblockage.data': ['scenes/*.json']},
      include_package_data = True,
      install_requires = ["numpy >=1.24",
                          "scipy>=1.4.1",
                          "tqdm>=4.36.1",
                          "matplotlib>=3.4",
                          "xarray >= 0.16.0",
                          "pandas >= 1.0"
                          ],
      extras_require = {'test': ["pytest >= 6.0",
                                 "hypothesis >= 6.0"]},
      python_requires = '>=3.8',
      entry_points={
          'console_scripts': [
              'pyblockage = pyblockage.cli:main'
          ]
      }
      )
