"""Build script for the optional compiled kernel core.

The package is fully functional without the extension: ``fsqkd.kernels``
falls back to a vectorized NumPy implementation at import time.  Any
failure while cythonizing or compiling therefore only emits a warning.
"""

import warnings

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    """Build the accelerator if possible, degrade to pure Python if not."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing, cythonize failure, ...
            warnings.warn(f"compiled kernels skipped ({exc}); using pure-Python fallback")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            warnings.warn(f"compiled kernels skipped ({exc}); using pure-Python fallback")


def extensions():
    try:
        import numpy
        from Cython.Build import cythonize
    except ImportError as exc:
        warnings.warn(f"compiled kernels skipped ({exc}); using pure-Python fallback")
        return []
    ext = Extension(
        "fsqkd._kernels",
        ["src/fsqkd/_kernels.pyx"],
        include_dirs=[numpy.get_include()],
    )
    try:
        return cythonize(
            [ext],
            compiler_directives={
                "boundscheck": False,
                "wraparound": False,
                "cdivision": True,
                "language_level": 3,
            },
        )
    except Exception as exc:
        warnings.warn(f"compiled kernels skipped ({exc}); using pure-Python fallback")
        return []


setup(ext_modules=extensions(), cmdclass={"build_ext": OptionalBuildExt})
