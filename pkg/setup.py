"""Build script for the optional compiled Monte-Carlo kernel.

The package works without the extension (a pure-numpy fallback is selected
at import time), but the compiled kernel is roughly 3x faster and is what
makes the large-sample volume cross-checks comfortable to run.
"""

from setuptools import Extension, setup

try:
    import numpy
    from Cython.Build import cythonize
except ImportError:  # pragma: no cover - source builds always have both
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "spheredet._mc_core",
                ["src/spheredet/_mc_core.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )

setup(ext_modules=ext_modules)
