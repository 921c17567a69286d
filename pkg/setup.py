import os

from setuptools import Extension, setup

# The compiled node-store kernel is optional: the package falls back to the
# pure-Python implementation when the extension is absent or fails to build.
ext_modules = []
if os.environ.get("BERNABS_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [Extension("bernabs._cnodes", ["src/bernabs/_cnodes.pyx"])],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
