"""Build script: compiles the optional evaluation kernel when Cython and a C
toolchain are available, and degrades to the pure-Python interpreter when not.
"""
from setuptools import setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        ["src/truthkit/_kernel.pyx"],
        compiler_directives={"language_level": "3"},
    )
except Exception as exc:  # pragma: no cover - build-environment dependent
    print(f"truthkit: building without compiled kernel ({exc!r})")

setup(ext_modules=ext_modules)
