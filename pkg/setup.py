import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "srtanneal.kernels._native",
                ["src/srtanneal/kernels/_native.pyx"],
                include_dirs=[numpy.get_include(), "src/srtanneal/kernels"],
                # no -ffast-math: the kernels rely on strict IEEE semantics so
                # that sign-flipped parameter sets produce bitwise-identical
                # permuted results (see kernels/__init__.py)
                extra_compile_args=["-O3", "-march=native"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except ImportError:
    # pure-Python fallback still works without Cython
    ext_modules = []

setup(ext_modules=ext_modules)
