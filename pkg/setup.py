"""Build script.

The compiled kernel extension is optional: when Cython (or a C compiler)
is unavailable the package installs anyway and falls back to the pure
Python kernels at import time.
"""

import logging

from setuptools import Extension, setup

logger = logging.getLogger(__name__)


def make_ext_modules():
    try:
        from Cython.Build import cythonize
    except ImportError:
        logger.warning("Cython not available; installing without compiled kernels")
        return []
    ext = Extension(
        "helmsim.kernels._core",
        sources=["src/helmsim/kernels/_core.pyx"],
    )
    return cythonize(
        [ext],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )


setup(ext_modules=make_ext_modules())
