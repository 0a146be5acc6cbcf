import os

from setuptools import Extension, setup

ext_modules = []
if not os.environ.get("PHN_SKIP_EXT"):
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "phn.kernels._fast",
                    ["src/phn/kernels/_fast.pyx"],
                    extra_compile_args=["-O3"],
                )
            ],
            language_level="3",
        )
    except ImportError:
        # No Cython: install pure-Python only; the kernel package falls
        # back automatically at import time.
        ext_modules = []

setup(ext_modules=ext_modules)
