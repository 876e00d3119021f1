import os
import sys

from setuptools import Extension, setup

# The compiled splat kernel is optional: if Cython or a C compiler is
# unavailable the package falls back to the pure-numpy implementation
# selected at import time in orthoforge.kernels.
ext_modules = []
if os.environ.get("ORTHOFORGE_NO_EXT") != "1":
    try:
        import numpy
        from Cython.Build import cythonize

        compile_args = ["-O3"]
        link_args = []
        if sys.platform.startswith("linux"):
            compile_args.append("-fopenmp")
            link_args.append("-fopenmp")
        ext_modules = cythonize(
            [
                Extension(
                    "orthoforge._splat",
                    ["src/orthoforge/_splat.pyx"],
                    include_dirs=[numpy.get_include()],
                    extra_compile_args=compile_args,
                    extra_link_args=link_args,
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            language_level=3,
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
