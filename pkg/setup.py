"""Build script for the optional compiled matcher kernel.

The Aho-Corasick scan in wordlattice/_acscan.pyx is the hot loop of
corpus-scale lattice construction. If Cython or a C compiler is missing
the build silently skips the extension and the package falls back to the
pure-Python kernel at import time.

Build in place for development:
    python setup.py build_ext --inplace
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "wordlattice._acscan",
                ["src/wordlattice/_acscan.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
