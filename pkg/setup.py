"""Build script for the optional compiled kernels.

The package works without the extension: selfhtr.kernels falls back to
pure numpy implementations when the compiled module is missing.
"""

from setuptools import setup

extensions = []
try:
    import numpy as np
    from Cython.Build import cythonize
    from setuptools import Extension

    extensions = cythonize(
        [
            Extension(
                "selfhtr.kernels._fast",
                ["src/selfhtr/kernels/_fast.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={
            "language_level": 3,
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )
except ImportError:
    pass

setup(ext_modules=extensions)
