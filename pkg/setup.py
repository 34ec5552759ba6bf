import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # pure-Python install; preq.kernels falls back to numpy
    ext_modules = []
else:
    ext_modules = cythonize(
        [Extension("preq._ckernels", ["src/preq/_ckernels.pyx"],
                   include_dirs=[np.get_include()],
                   # plain complex multiply; skips the C99 inf/nan recovery path
                   extra_compile_args=["-fcx-limited-range"])],
        language_level=3,
    )

setup(ext_modules=ext_modules)
