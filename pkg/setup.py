"""Build the optional Cython rollout kernel.

The package runs without it: ``idlimits.kernel`` falls back to the pure-Python
rollout when the extension is missing.
"""
import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # no Cython: pure-Python install
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "idlimits._kernel",
                ["src/idlimits/_kernel.pyx"],
                include_dirs=[np.get_include()],
                # contraction into FMA would break bit-equality with the fallback
                extra_compile_args=["-O2", "-ffp-contract=off"],
                optional=True,
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
