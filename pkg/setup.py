import os

from setuptools import Extension, setup

ext_modules = []
if not os.environ.get("SFWR_SKIP_EXT"):
    try:
        import numpy
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "sfwr._kernels._fast",
                    ["src/sfwr/_kernels/_fast.pyx"],
                    include_dirs=[numpy.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                    extra_compile_args=["-O3"],
                )
            ],
            language_level=3,
        )
    except ImportError:
        # No Cython/compiler available: install pure-Python, the package
        # falls back to the numpy kernels at import time.
        ext_modules = []

setup(ext_modules=ext_modules)
