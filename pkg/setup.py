"""Build script for the optional compiled kernels.

The package works without them; ``classfair._kernels`` falls back to the
pure-Python implementations when the extension is missing.
"""

from setuptools import setup
from setuptools.extension import Extension

try:
    import numpy
    from Cython.Build import cythonize
except ImportError:  # pragma: no cover - build without Cython/numpy headers
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "classfair._kernels._ckernels",
                ["src/classfair/_kernels/_ckernels.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O2", "-ffp-contract=off"],
                optional=True,
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
