"""Build script: compiles the optional canonicalisation kernel.

The package works without the compiled extension (a pure-Python fallback is
selected at import time), so any Cython/compiler failure downgrades to a
source-only install instead of aborting.
"""

from setuptools import setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        ["src/foresthopf/_canonkern.pyx"],
        language_level="3",
    )
except Exception as exc:  # pragma: no cover - build-environment dependent
    print(f"foresthopf: skipping compiled kernel ({exc!r}); using pure-Python backend")

setup(ext_modules=ext_modules)
