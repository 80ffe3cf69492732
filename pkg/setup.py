from setuptools import Extension, setup
from Cython.Build import cythonize

extensions = [
    Extension(
        "spcnet._kernels._spmm",
        ["src/spcnet/_kernels/_spmm.pyx"],
        extra_compile_args=["-O3"],
    )
]

setup(
    ext_modules=cythonize(
        extensions,
        compiler_directives={"language_level": "3"},
    )
)
