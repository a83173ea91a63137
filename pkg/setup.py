import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("DWARP_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize
    except ImportError:  # pure-Python install; dwarp falls back at import
        pass
    else:
        ext_modules = cythonize(
            [
                Extension(
                    "dwarp._vm",
                    ["src/dwarp/_vm.pyx"],
                    extra_compile_args=["-O2"],
                )
            ],
            language_level=3,
        )

setup(ext_modules=ext_modules)
