import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

# The stepping kernel is compiled when a toolchain is available; the package
# falls back to the numpy implementation otherwise.  -ffp-contract=off keeps
# the compiled kernel bit-identical to the numpy reference (no FMA fusion).
ext = Extension(
    "shelab.backends._fast",
    ["src/shelab/backends/_fast.pyx"],
    include_dirs=[numpy.get_include()],
    extra_compile_args=["-O3", "-ffp-contract=off"],
    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    optional=True,
)

setup(
    ext_modules=cythonize([ext], language_level=3) if cythonize else [],
)
