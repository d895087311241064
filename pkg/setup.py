import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

ext = Extension(
    "prometheus3d._kernels._core",
    ["src/prometheus3d/_kernels/_core.pyx"],
    include_dirs=[np.get_include()],
    # -ffp-contract=off keeps float results bit-identical to the pure
    # numpy backend (no fused multiply-add in the C code paths).
    extra_compile_args=["-O3", "-ffp-contract=off"],
    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
)

setup(
    ext_modules=cythonize([ext], language_level=3) if cythonize else [],
)
