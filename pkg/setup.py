"""Build the optional compiled kernel extension.

The package works without it (a numpy fallback is selected at import time);
building the extension speeds up the rasterizer, tree construction and the
cloth integrator considerably.  `pip install -e . --no-build-isolation`
builds it automatically when Cython is available.
"""

from setuptools import setup

ext_modules = []
try:
    import numpy as np
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "domforest.kernels._native",
                sources=["src/domforest/kernels/_native.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                # -ffp-contract=off keeps float results bit-identical with the
                # numpy fallback (no fused multiply-adds).
                extra_compile_args=["-O3", "-ffp-contract=off"],
            )
        ],
        compiler_directives={
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
            "language_level": "3",
        },
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
