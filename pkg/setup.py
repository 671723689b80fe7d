import os

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # the pure-Python kernels take over
    cythonize = None

ext_modules = []
if cythonize is not None and not os.environ.get("GRIDGATHER_PURE"):
    ext_modules = cythonize(
        [Extension("gridgather._ckernels", ["src/gridgather/_ckernels.pyx"])],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
