"""Build script. The Cython kernel extension is optional: when Cython or a C
compiler is unavailable the package installs pure-Python only and the runtime
falls back automatically (see carlearn._kernels)."""

from setuptools import setup

ext_modules = []
try:
    from Cython.Build import cythonize
    import numpy

    ext_modules = cythonize(
        "src/carlearn/_kernels/_fast.pyx",
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )
    include_dirs = [numpy.get_include()]
    for ext in ext_modules:
        ext.include_dirs = include_dirs
        ext.define_macros = [("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")]
except ImportError:
    pass

setup(ext_modules=ext_modules)
