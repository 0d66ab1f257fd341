"""Build hooks for the optional compiled kernel extension.

The package is fully functional without the extension; ``senttune.kernels``
falls back to the numpy implementations when the compiled module is absent.
Set SENTTUNE_PURE_PYTHON=1 to skip compilation entirely.
"""

import os
import sys

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    """Build the extension if possible, warn and continue if not."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing, etc.
            self._warn(exc)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            self._warn(exc)

    @staticmethod
    def _warn(exc):
        print(
            f"warning: compiled kernels not built ({exc}); "
            "falling back to the pure numpy backend",
            file=sys.stderr,
        )


def extensions():
    if os.environ.get("SENTTUNE_PURE_PYTHON") == "1":
        return []
    try:
        from Cython.Build import cythonize
    except ImportError:
        print(
            "warning: Cython not available; compiled kernels will not be built",
            file=sys.stderr,
        )
        return []
    ext = Extension(
        "senttune.kernels._fastkernels",
        ["src/senttune/kernels/_fastkernels.pyx"],
        extra_compile_args=["-O3"],
    )
    return cythonize([ext], language_level="3")


setup(ext_modules=extensions(), cmdclass={"build_ext": OptionalBuildExt})
