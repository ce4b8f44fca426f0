"""Build script: compiles the optional ray-geometry kernel.

The compiled extension accelerates the shooting-and-bouncing-rays inner
loop.  If Cython or a C compiler is unavailable the build still succeeds
and the package falls back to the pure-numpy kernel at import time.
"""

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "risray.tracer._kernel",
                ["src/risray/tracer/_kernel.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except Exception as exc:  # pragma: no cover - depends on build host
    import warnings

    warnings.warn(f"building without compiled kernel: {exc}")

setup(ext_modules=ext_modules)
