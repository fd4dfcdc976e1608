from setuptools import setup, Extension

# The compiled binary32 kernel is optional: the package falls back to the
# pure-Python kernel when the extension is not importable.
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "boundflow.ieee32._kernel_c",
                ["src/boundflow/ieee32/_kernel_c.pyx"],
            )
        ],
        language_level=3,
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
