import os

from setuptools import setup

ext_modules = []
if os.environ.get("SEQMC_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "seqmc._kernels_c",
                    ["src/seqmc/_kernels_c.pyx"],
                    include_dirs=[np.get_include()],
                    libraries=["m"],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            compiler_directives={"language_level": 3},
        )
    except ImportError:
        # no Cython or numpy at build time: ship the pure-Python kernels only
        ext_modules = []

setup(ext_modules=ext_modules)
