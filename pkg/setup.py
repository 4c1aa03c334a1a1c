import os

import numpy as np
from setuptools import Extension, setup

# PARDG_NO_EXT=1 skips the compiled core; the package then runs on the numpy fallback.
ext_modules = []
if not os.environ.get("PARDG_NO_EXT"):
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        extensions = [
            Extension(
                "pardg._ckernels",
                ["src/pardg/_ckernels.pyx"],
                include_dirs=[np.get_include()],
                # no -ffast-math: summation order must match the fallback bit for bit
                extra_compile_args=["-O2", "-ffp-contract=off"],
            )
        ]
        ext_modules = cythonize(extensions, compiler_directives={"language_level": "3"})

setup(ext_modules=ext_modules)
