"""Build script for the compiled kernel extension.

The package works without the extension (a numpy fallback is selected at
import time), so the build degrades gracefully when Cython or a C compiler
is unavailable.
"""

from setuptools import Extension, setup

try:
    import numpy as np
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

ext_modules = []
if cythonize is not None:
    core = Extension(
        "fragscan.kernels._core",
        ["src/fragscan/kernels/_core.pyx"],
        include_dirs=[np.get_include()],
        # -ffp-contract=off keeps results bit-identical to the numpy
        # fallback (no fused multiply-add reassociation).
        extra_compile_args=["-O3", "-ffp-contract=off"],
    )
    ext_modules = cythonize(
        [core],
        compiler_directives={
            "language_level": 3,
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
            "initializedcheck": False,
        },
    )

if __name__ == "__main__":
    setup(ext_modules=ext_modules)
