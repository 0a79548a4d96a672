"""Build the optional Cython kernels; the package falls back to numpy if this fails."""
import os
import sys

import numpy
from setuptools import Extension, setup

ext_modules = []
if not os.environ.get("SVAMP_NO_EXT"):
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "svamp._ckernels",
                    ["src/svamp/_ckernels.pyx"],
                    include_dirs=[numpy.get_include()],
                    extra_compile_args=["-O3"],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            compiler_directives={
                "language_level": "3",
                "boundscheck": False,
                "wraparound": False,
                "cdivision": True,
            },
        )
    except Exception as exc:  # pragma: no cover - build environment dependent
        print(f"warning: Cython kernels not built ({exc}); using numpy fallback", file=sys.stderr)
        ext_modules = []

setup(ext_modules=ext_modules)
