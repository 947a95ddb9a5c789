"""Build script for the optional compiled kernel core.

The package is fully functional without the extension (a numpy fallback is
selected at import time), so a missing Cython or C compiler only costs speed.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

if cythonize is not None:
    extensions = cythonize(
        [
            Extension(
                "origin_lens.kernels._core",
                [
                    "src/origin_lens/kernels/_core.pyx",
                    "src/origin_lens/kernels/_conv_kernels.c",
                ],
                include_dirs=["src/origin_lens/kernels"],
                extra_compile_args=["-O3", "-march=native", "-funroll-loops", "-fopenmp"],
                extra_link_args=["-fopenmp"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
else:
    extensions = []

setup(ext_modules=extensions)
