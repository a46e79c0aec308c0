from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "filerep._ctmc",
                ["src/filerep/_ctmc.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        language_level="3",
    )
except ImportError:
    # The package falls back to the pure-Python kernel at import time.
    extensions = []

setup(ext_modules=extensions)
