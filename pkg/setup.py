"""Build script: compiles the optional context-gather extension.

The package works without the extension (a numpy fallback is selected at
import time); set NAIDE_SKIP_EXT=1 to force a pure-Python build.
"""

import os

from setuptools import Extension, setup


def _extensions():
    if os.environ.get("NAIDE_SKIP_EXT"):
        return []
    try:
        from Cython.Build import cythonize
    except ImportError:
        return []
    ext = Extension(
        "naide._kernels._gather",
        ["src/naide/_kernels/_gather.pyx"],
        extra_compile_args=["-O3"],
    )
    return cythonize([ext], language_level="3")


setup(ext_modules=_extensions())
