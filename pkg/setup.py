from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # pure-Python install; fishsim falls back to _pykernel
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "fishsim._ckernel",
                ["src/fishsim/_ckernel.pyx"],
                extra_compile_args=["-O3"],
                optional=True,
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
