"""Build script: compiles the optional fast evaluation kernel.

The package works without the extension (a numpy fallback is selected at
import time), so the build is marked optional and skipped when Cython or a
C compiler is unavailable.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "trajfield.kernels._fastpath",
                ["src/trajfield/kernels/_fastpath.pyx"],
                optional=True,
            )
        ],
        language_level=3,
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
