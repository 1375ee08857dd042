"""CMake-backed build of the tabfox python package.

`pip install .` configures the CMake project with tests disabled, builds the
_core extension, and stages it next to python/tabfox/__init__.py.
"""

import subprocess
import sys
from pathlib import Path

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class CMakeExtension(Extension):
    def __init__(self, name):
        super().__init__(name, sources=[])


class CMakeBuild(build_ext):
    def build_extension(self, ext):
        source_dir = Path(__file__).parent.resolve()
        build_dir = Path(self.build_temp).resolve()
        build_dir.mkdir(parents=True, exist_ok=True)

        out_dir = Path(self.get_ext_fullpath(ext.name)).parent.resolve()
        out_dir.mkdir(parents=True, exist_ok=True)

        subprocess.run(
            [
                "cmake",
                "-S", str(source_dir),
                "-B", str(build_dir),
                "-DCMAKE_BUILD_TYPE=Release",
                "-DTABFOX_BUILD_TESTS=OFF",
                "-DTABFOX_BUILD_PYTHON=ON",
                f"-DPYTHON_EXECUTABLE={sys.executable}",
            ],
            check=True,
        )
        subprocess.run(
            ["cmake", "--build", str(build_dir), "--target", "_core", "-j"],
            check=True,
        )

        built = list((build_dir / "python" / "tabfox").glob("_core*"))
        if not built:
            raise RuntimeError("CMake did not produce the _core extension")
        self.copy_file(str(built[0]), str(out_dir / built[0].name))


setup(
    packages=["tabfox"],
    package_dir={"tabfox": "python/tabfox"},
    ext_modules=[CMakeExtension("tabfox._core")],
    cmdclass={"build_ext": CMakeBuild},
)
