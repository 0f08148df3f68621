import os

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

# The compiled core is optional: without it the package falls back to the
# pure-Python implementation at import. Set REHASHMAP_PURE=1 to skip the
# build on purpose.
extensions = []
if cythonize is not None and not os.environ.get("REHASHMAP_PURE"):
    extensions = cythonize(
        [
            Extension(
                "rehashmap._speedups",
                ["src/rehashmap/_speedups.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=extensions)
