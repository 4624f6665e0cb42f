"""Build script for the compiled pairwise kernels.

The extension is optional: if Cython or a C compiler is unavailable, or the
compile fails, the package installs anyway and falls back to the numpy
kernels at import time (see tdselector.kernels).
"""

import sys

from setuptools import setup
from setuptools.command.build_ext import build_ext
from setuptools.errors import CCompilerError, ExecError, PlatformError


def extensions():
    try:
        from Cython.Build import cythonize
        from setuptools.extension import Extension
    except ImportError:
        print("tdselector: Cython not available, skipping compiled kernels",
              file=sys.stderr)
        return []
    ext = Extension(
        "tdselector._kernels_c",
        sources=["src/tdselector/_kernels_c.pyx"],
        extra_compile_args=["-O3"],
    )
    return cythonize([ext], compiler_directives={"language_level": "3"})


class optional_build_ext(build_ext):
    """Degrade to a pure install instead of failing the whole build."""

    def run(self):
        try:
            super().run()
        except (CCompilerError, ExecError, PlatformError) as exc:
            print(f"tdselector: compiled kernels skipped ({exc}); "
                  "pure-python fallback will be used", file=sys.stderr)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except (CCompilerError, ExecError, PlatformError, ValueError) as exc:
            print(f"tdselector: building {ext.name} failed ({exc}); "
                  "pure-python fallback will be used", file=sys.stderr)


setup(ext_modules=extensions(), cmdclass={"build_ext": optional_build_ext})
