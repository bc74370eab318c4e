from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "spotter.kernels._native",
                ["src/spotter/kernels/_native.pyx"],
                extra_compile_args=["-O3", "-fopenmp"],
                extra_link_args=["-fopenmp"],
            )
        ],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
            "initializedcheck": False,
            "embedsignature": True,
        },
    )
except ImportError:
    # No Cython available: install the pure-numpy build; the package falls
    # back to the numpy kernels at import time.
    ext_modules = []

setup(ext_modules=ext_modules)
