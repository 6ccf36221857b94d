"""Build script: compiles the native kernel extension when a toolchain is available.

The package works without the extension (pure-Python kernels are selected at
import time), so any build failure here downgrades to a warning instead of
aborting the install.
"""

import sys

from setuptools import Extension, setup


def _extensions():
    try:
        from Cython.Build import cythonize
    except ImportError:
        print("gofisim: Cython not available, skipping native kernels", file=sys.stderr)
        return []
    ext = Extension(
        "gofisim.kernels._native",
        ["src/gofisim/kernels/_native.pyx"],
        extra_compile_args=["-O3"],
    )
    return cythonize([ext], compiler_directives={"language_level": "3"})


try:
    setup(ext_modules=_extensions())
except SystemExit:
    raise
except Exception as exc:  # compiler missing, etc.
    print(f"gofisim: native kernel build failed ({exc}); installing pure-Python build", file=sys.stderr)
    setup(ext_modules=[])
