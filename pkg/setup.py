from setuptools import Extension, setup

# The compiled kernels are optional: the package falls back to pure
# numpy when the extension is missing, so a failed build of _kernels
# must not block installation.
try:
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [Extension(
            "choquard._kernels",
            ["src/choquard/_kernels.pyx"],
            extra_compile_args=["-O3"],
            include_dirs=[numpy.get_include()],
        )],
        language_level=3,
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
