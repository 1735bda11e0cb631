import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

ext = Extension(
    "nlsderive._core",
    ["src/nlsderive/_core.pyx"],
    include_dirs=[np.get_include()],
    extra_compile_args=["-O3", "-ffast-math", "-march=native"],
    libraries=["mvec", "m"],
)

setup(ext_modules=cythonize([ext], compiler_directives={"language_level": 3}))
