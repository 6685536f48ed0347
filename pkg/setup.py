import os

from setuptools import Extension, setup


def extensions():
    if os.environ.get("NBPMT_NO_EXT"):
        return []
    try:
        import numpy as np
        from Cython.Build import cythonize
    except ImportError:
        return []
    randlib = os.path.join(os.path.dirname(np.__file__), "random", "lib")
    ext = Extension(
        "nbpmt._core",
        ["src/nbpmt/_core.pyx"],
        include_dirs=[np.get_include()],
        library_dirs=[randlib],
        libraries=["npyrandom", "m"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        extra_compile_args=["-O3"],
        optional=True,
    )
    return cythonize([ext], compiler_directives={"language_level": "3"})


setup(ext_modules=extensions())
