"""Build hooks for the optional compiled kernel.

The package is pure Python plus one accelerator extension built from
``src/cleavelab/_speedups.pyx``.  The extension is optional: when Cython or
a C toolchain is missing the install proceeds and the package falls back to
the numpy kernels at import time.
"""

from setuptools import Extension, setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "cleavelab._speedups",
                ["src/cleavelab/_speedups.pyx"],
                optional=True,
            )
        ],
        language_level=3,
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
