"""Build the optional Cython kernels; the package works without them."""

import os

from setuptools import setup

ext_modules = []
if not os.environ.get("CQEDFEEDBACK_NO_EXT"):
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError:
        pass
    else:
        ext_modules = cythonize(
            [
                Extension(
                    "cqedfeedback._ckernels",
                    ["src/cqedfeedback/_ckernels.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                    define_macros=[
                        ("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION"),
                        # inline struct arithmetic; C99 complex multiplies go
                        # through the slow NaN-recovering libgcc path
                        ("CYTHON_CCOMPLEX", "0"),
                    ],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
