import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # pure-Python fallback only
    ext_modules = []
else:
    ext_modules = cythonize(
        [Extension("dpnls._core", ["src/dpnls/_core.pyx"], include_dirs=[np.get_include()])],
        compiler_directives={"language_level": 3},
    )

setup(ext_modules=ext_modules)
