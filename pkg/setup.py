import os

import numpy as np
from setuptools import Extension, setup

ext_modules = []
if os.environ.get("HPDN_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        extensions = [
            Extension(
                "hpdn._kernels._core",
                ["src/hpdn/_kernels/_core.pyx"],
                include_dirs=[np.get_include()],
                # bit-for-bit parity with the pure-Python kernels needs strict IEEE
                extra_compile_args=["-O2", "-ffp-contract=off", "-fno-fast-math"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ]
        ext_modules = cythonize(
            extensions,
            compiler_directives={
                "language_level": "3",
                "boundscheck": False,
                "wraparound": False,
                "cdivision": True,
            },
        )

setup(ext_modules=ext_modules)
