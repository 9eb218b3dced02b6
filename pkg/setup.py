"""Build script: compiles the quantile-regression kernel extension.

The package works without the extension (a numpy fallback is selected at
import time), so a failed compile only prints a warning instead of
aborting the install.
"""

import sys

from setuptools import setup


def extensions():
    try:
        import numpy
        from Cython.Build import cythonize
    except ImportError as exc:
        print(f"warning: skipping compiled kernels ({exc})", file=sys.stderr)
        return []
    try:
        return cythonize(
            ["src/planu/kernels/_qr_c.pyx"],
            compiler_directives={"language_level": "3"},
            include_path=[numpy.get_include()],
        )
    except Exception as exc:  # noqa: BLE001 - any build failure degrades gracefully
        print(f"warning: skipping compiled kernels ({exc})", file=sys.stderr)
        return []


def include_dirs():
    try:
        import numpy

        return [numpy.get_include()]
    except ImportError:
        return []


setup(
    ext_modules=extensions(),
    include_dirs=include_dirs(),
)
