"""Build script: compiles the optional update-rule extension.

The package is fully functional without the extension; a pure-Python
fallback is selected at import time when the compiled module is missing.
"""
from setuptools import Extension, setup

ext_modules = []
try:
    import numpy as np
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "driftreg._kernels._speedups",
                ["src/driftreg/_kernels/_speedups.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
