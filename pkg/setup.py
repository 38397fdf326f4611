"""Build script for the optional compiled Jacobi kernel.

The extension is a speedup, not a requirement: if Cython or a C compiler is
missing the install falls through to the pure-numpy kernel that
``nucontrast.linalg`` selects at import time.
"""

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    """Build the extension if possible, otherwise warn and continue."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # missing compiler / toolchain
            self._skip(exc)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            self._skip(exc)

    @staticmethod
    def _skip(exc):
        print(f"WARNING: compiled kernel not built ({exc}); "
              "falling back to the pure-Python kernel")


def extensions():
    try:
        from Cython.Build import cythonize
    except ImportError:
        print("WARNING: Cython unavailable; building without the compiled kernel")
        return []
    return cythonize(
        [
            Extension(
                "nucontrast._jacobi",
                ["src/nucontrast/_jacobi.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )


setup(ext_modules=extensions(), cmdclass={"build_ext": optional_build_ext})
