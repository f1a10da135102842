import os

from setuptools import setup


def extension_modules():
    """Cython kernels are optional: the package falls back to numpy at import."""
    if os.environ.get("ISING_QSIM_PURE_PYTHON") == "1":
        return []
    try:
        import numpy
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError:
        return []
    ext = Extension(
        "ising_qsim._kernels",
        ["src/ising_qsim/_kernels.pyx"],
        include_dirs=[numpy.get_include()],
        extra_compile_args=["-O3"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    return cythonize([ext], compiler_directives={"language_level": "3"})


setup(ext_modules=extension_modules())
